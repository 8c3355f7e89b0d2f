from pidforest.cli import main
import sys

sys.exit(main())
