"""Offline figure rendering for ttmemory CSV output."""

from .render import FigureSpec, RenderError, load_table, render

__version__ = "0.1.0"
