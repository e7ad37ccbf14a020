from trunclab.client import Client
from trunclab.config import RunConfig
from trunclab.exceptions import (
    TrunclabException,
    TrunclabConfigException,
    TrunclabBudgetExceededException,
    TrunclabVerificationException,
    TrunclabCheckpointException,
    TrunclabPrecisionException
)
