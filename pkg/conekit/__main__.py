import sys

from conekit.cli import main

sys.exit(main())
