import sys

from quverse.main import main

sys.exit(main())
