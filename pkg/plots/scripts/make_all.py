#!/usr/bin/env python3
"""Render every recognized simulator CSV under a run directory."""
import sys

from mrls_plots.cli import main

if __name__ == "__main__":
    main(["make-all", *sys.argv[1:]])
