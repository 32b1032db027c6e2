"""Joint scheduling and power control for V2V multihop multicast."""

__version__ = "0.1.0"
