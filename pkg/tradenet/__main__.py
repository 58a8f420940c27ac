import sys

from tradenet.main import main

sys.exit(main())
