"""Global Workspace Network for sequential multimodal fusion."""

__version__ = "0.1.0"
