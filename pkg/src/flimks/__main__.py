"""Main entry point for flimks"""
import sys

from flimks.cli import main

if __name__ == "__main__":
    sys.exit(main())
