import sys
from pathlib import Path

try:
    import headline_scorer  # noqa: F401
except ImportError:  # running from a source checkout without installation
    sys.path.insert(0, str(Path(__file__).parents[1] / "src"))
