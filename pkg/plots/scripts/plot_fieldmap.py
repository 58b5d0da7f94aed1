#!/usr/bin/env python3
"""Render a power-density field-map CSV as a heatmap image."""
import sys

from mrls_plots.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--kind" not in args:
        args += ["--kind", "heatmap"]
    main(["render", *args])
