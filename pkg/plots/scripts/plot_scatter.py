#!/usr/bin/env python3
"""Render per-trial estimated vs. true directions as a scatter image."""
import sys

from mrls_plots.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--kind" not in args:
        args += ["--kind", "scatter"]
    main(["render", *args])
