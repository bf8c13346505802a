from kleinforge.cli import main
import sys

sys.exit(main())
