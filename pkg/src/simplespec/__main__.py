import sys

from simplespec.cli import main

sys.exit(main())
