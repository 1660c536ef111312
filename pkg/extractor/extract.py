#!/usr/bin/env python3
"""CLI shim: extract.py --video V --out DIR --window 16 --fps 30"""

import sys

from egostream_extractor.extract import main

if __name__ == "__main__":
    sys.exit(main())
