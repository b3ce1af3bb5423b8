"""sessionlens: analytics engine and exploration service for AR task-guidance sessions."""

__version__ = "0.1.0"
