"""Point-cloud iterative reconstruction for 3D photoacoustic imaging."""

__version__ = "0.1.0"
