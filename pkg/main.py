#!/usr/bin/env python
"""
Main entry point for the adversarial fleet simulator.
"""

import sys

from adversarial_fleet.cli import main

if __name__ == "__main__":
    sys.exit(main())
