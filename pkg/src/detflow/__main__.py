import sys

from detflow.cli import main

sys.exit(main())
