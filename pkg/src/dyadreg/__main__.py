import sys

from dyadreg.cli import main

sys.exit(main())
