"""Allow ``python -m statman``."""

import sys

from statman.main import main

if __name__ == "__main__":
    sys.exit(main())
