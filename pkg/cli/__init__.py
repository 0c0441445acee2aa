"""Command-line interface for peakon_toda."""
