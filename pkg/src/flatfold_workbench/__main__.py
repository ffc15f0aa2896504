"""Allow ``python -m flatfold_workbench``."""

from .cli import main

if __name__ == "__main__":
    main()
