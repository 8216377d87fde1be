"""InertLab Entry Point
Loads .env before importing any modules, since Config reads the environment at import time.
"""

from pathlib import Path

from dotenv import load_dotenv

# .env lives in the project root, the parent of the package directory
package_dir = Path(__file__).parent
project_root = package_dir.parent
load_dotenv(dotenv_path=project_root / '.env')

from .cli import main  # noqa: E402

if __name__ == '__main__':
    main()
