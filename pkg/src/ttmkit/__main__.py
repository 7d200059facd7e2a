import sys

from ttmkit.cli import main

sys.exit(main())
