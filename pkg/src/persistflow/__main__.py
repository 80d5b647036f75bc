import sys

from persistflow.cli import main

sys.exit(main())
