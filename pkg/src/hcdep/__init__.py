"""Higher criticism and competing detectors under strongly dependent Gaussian noise."""

__version__ = "0.1.0"
