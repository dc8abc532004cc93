"""
Main entry point for python -m adaptcast
"""

from .cli import main

if __name__ == "__main__":
    main()
