"""Taylor shift dynamics on Bergman spaces of spherical domains."""

__version__ = "0.1.0"
