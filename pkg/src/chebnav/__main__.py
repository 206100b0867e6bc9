import sys

from .navcli import main

sys.exit(main())
