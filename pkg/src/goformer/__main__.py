import sys

from goformer.cli import main

sys.exit(main())
