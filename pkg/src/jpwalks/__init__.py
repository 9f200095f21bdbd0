__version__ = "0.1.0"

from jpwalks.cli import main  # noqa: E402

__all__ = ["main", "__version__"]
