import sys

from fairproj.main import main

sys.exit(main())
