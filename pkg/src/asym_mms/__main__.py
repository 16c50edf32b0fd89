import sys

from asym_mms.cli import main

sys.exit(main())
