import sys

from obstaclelab.cli import main

sys.exit(main())
