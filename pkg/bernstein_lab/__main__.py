import sys

from .pipeline.main_pipeline import main

sys.exit(main())
