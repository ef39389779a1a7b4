import sys

from hedseg.cli import main

sys.exit(main())
