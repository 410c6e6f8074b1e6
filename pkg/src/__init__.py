"""
OpenFlow 1.3 Software Switch Package
A parser, TCAM-emulating flow pipeline, action engine and OpenFlow agent
"""

__version__ = "1.0.0"
