"""Paper-style figure rendering for simulator CSV outputs."""

from .render import FIGURE_KINDS, FigureSpec, render
from .schemas import SCHEMAS, SchemaError, load_table

__version__ = "0.1.0"
