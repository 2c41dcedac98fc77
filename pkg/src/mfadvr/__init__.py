"""Direct volume rendering of tensor-product B-spline (MFA) volume models."""

__version__ = "0.1.0"
