"""Forward and inverse scattering for i y''' + q y = lambda^3 y on the line."""

__version__ = "0.1.0"
