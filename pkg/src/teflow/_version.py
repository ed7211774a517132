"""Single source of the toolkit version string."""

__version__ = "0.1.0"
