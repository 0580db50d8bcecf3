import sys

from defog.cli import main

sys.exit(main())
