"""Picost workbench: costed pi-calculus execution and amortised bisimulation checking"""

__version__ = "1.0.0"
