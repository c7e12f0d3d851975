import sys

from choreo.main import main

sys.exit(main())
