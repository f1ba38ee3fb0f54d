"""Thin wrapper around the ``sphere-energy`` command line.

The implementation lives in `src.cli`; this entrypoint only makes the
repository importable when the script is run from a checkout.
"""

from pathlib import Path
import sys

# Ensure repository root is on sys.path so `src` package is importable when running the script directly
REPO_ROOT = Path(__file__).resolve().parents[1]
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

from src.cli import main


if __name__ == '__main__':
    main()
