"""spinorlab: verification tools for metrics carrying parallel spinor fields."""

__version__ = "0.1.0"
