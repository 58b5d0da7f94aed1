#!/usr/bin/env python3
"""Render an angle-grid pseudo-spectrum CSV as a 3-D surface image."""
import sys

from mrls_plots.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--kind" not in args:
        args += ["--kind", "surface"]
    main(["render", *args])
