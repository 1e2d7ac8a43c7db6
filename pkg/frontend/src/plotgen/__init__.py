from .render import PlotInputError, PlotSpec, RenderResult, load_rows, render

__version__ = "0.1.0"
