"""Linear eigenvalue statistics of real elliptic random matrices."""
__version__ = "0.1.0"
