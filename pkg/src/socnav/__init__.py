"""2D social navigation simulator: hybrid policy + anticipative collision avoidance."""

__version__ = "0.1.0"
