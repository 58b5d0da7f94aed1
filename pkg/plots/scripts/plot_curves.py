#!/usr/bin/env python3
"""Render sweep-aggregate or resonance-trace CSVs as line plots."""
import sys

from mrls_plots.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--kind" not in args:
        args += ["--kind", "line"]
    main(["render", *args])
