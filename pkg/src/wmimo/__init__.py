"""Weichselberger massive-MIMO channel model: hardening and favorable-propagation statistics."""

__version__ = "0.1.0"
