#!/usr/bin/env python3
"""
Entry point for the qcadmm HTTP API; equivalent to `qcadmm --env <env> serve`.

Usage:
    python run.py                          # Run with development settings
    QCADMM_ENV=production python run.py    # Run in production mode
"""
import os

from qcadmm.cli import cli


def main():
    """Run the application through the CLI's serve command."""
    cli(["--env", os.getenv("QCADMM_ENV", "development"), "serve"], obj={})


if __name__ == "__main__":
    main()
