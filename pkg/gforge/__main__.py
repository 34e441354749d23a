"""Entry point for ``python -m gforge``."""
import sys

from dotenv import load_dotenv

load_dotenv()

# Import after .env is loaded; module constants read the environment
from gforge.cli import main

sys.exit(main())
