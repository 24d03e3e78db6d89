"""RIS-assisted channel models: path loss, small-scale fading, metrics and multipath estimation."""

__version__ = "0.1.0"
