#!/usr/bin/env python3
"""
Entry point for running as module: python -m src
"""
import sys

from .main import main

if __name__ == "__main__":
    sys.exit(main())
