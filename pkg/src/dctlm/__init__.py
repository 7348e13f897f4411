"""Recurrent language models with DCT-encoded and fast-generated weights."""
__version__ = "0.1.0"
