import sys

from ams.cli import main

sys.exit(main())
