class TrunclabException(Exception):
    """Raised when an unknown error occurs inside a lab operation"""

    exit_code = 1

    def __init__(self, status):
        """Initialize exception"""
        super(TrunclabException, self).__init__(status)
        self.status = status

class TrunclabConfigException(TrunclabException):
    """Raised when the lab is configured incorrectly or an input violates a precondition"""

    exit_code = 2

    def __init__(self, status):
        """Initialize exception"""
        super(TrunclabConfigException, self).__init__(status)
        self.status = status

class TrunclabBudgetExceededException(TrunclabException):
    """Raised when a memory, enumeration or candidate budget would be exceeded"""

    exit_code = 3

    def __init__(self, status):
        """Initialize exception"""
        super(TrunclabBudgetExceededException, self).__init__(status)
        self.status = status

class TrunclabVerificationException(TrunclabException):
    """Raised when an exact identity or a witness fails verification"""

    exit_code = 4

    def __init__(self, status):
        """Initialize exception"""
        super(TrunclabVerificationException, self).__init__(status)
        self.status = status

class TrunclabCheckpointException(TrunclabException):
    """Raised when a scan checkpoint is of the wrong kind or version, or is corrupted"""

    exit_code = 5

    def __init__(self, status):
        """Initialize exception"""
        super(TrunclabCheckpointException, self).__init__(status)
        self.status = status

class TrunclabPrecisionException(TrunclabException):
    """Raised when a numerical precision target cannot be reached"""

    exit_code = 6

    def __init__(self, status):
        """Initialize exception"""
        super(TrunclabPrecisionException, self).__init__(status)
        self.status = status
