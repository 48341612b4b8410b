"""
UI Package for Ladartrack
Contains the command line surface.
"""

from .cli import build_parser, main, EXIT_OK, EXIT_USAGE, EXIT_DATA

__all__ = [
    'build_parser',
    'main',
    'EXIT_OK',
    'EXIT_USAGE',
    'EXIT_DATA'
]
