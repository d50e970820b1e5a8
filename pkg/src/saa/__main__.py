import sys

from saa.cli import main

sys.exit(main())
