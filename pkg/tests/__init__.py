"""Stranger Beers test suite."""
