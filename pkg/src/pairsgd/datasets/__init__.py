"""Bundled LIBSVM copies of the UCI diabetes and german (numeric) data."""
