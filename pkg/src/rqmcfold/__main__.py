import sys

from rqmcfold.cli import main

sys.exit(main())
