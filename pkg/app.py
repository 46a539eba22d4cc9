"""
Bell inequality workbench - entry point

    uvicorn app:app          HTTP service
    python app.py <command>  command line interface
"""

import sys
from pathlib import Path

BACKEND_DIR = Path(__file__).parent / "backend"
sys.path.insert(0, str(BACKEND_DIR))

from main import app  # noqa: E402,F401
from cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
