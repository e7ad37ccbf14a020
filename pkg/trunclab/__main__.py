import sys

from trunclab.cli import main

sys.exit(main())
