"""Two-phase pose transfer: prior edge-content transfer plus style/content image synthesis."""

__version__ = "0.1.0"
