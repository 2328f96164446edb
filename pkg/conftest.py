# conftest.py
# Puts the repository root on sys.path so tests import the flat modules the
# same way main.py does (from model import KoopmanModel).
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))
