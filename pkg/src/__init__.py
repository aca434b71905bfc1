import pathlib

__version__ = "0.1.0"

PACKAGE_DIR = pathlib.Path(__file__).parent
