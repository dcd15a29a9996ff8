import sys

from fleetbalance.cli import main

sys.exit(main())
