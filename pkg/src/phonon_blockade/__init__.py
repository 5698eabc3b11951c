"""Two-phonon blockade in a parametrically amplified spin-mechanical system."""

__version__ = "0.1.0"
