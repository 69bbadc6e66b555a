"""Waveguide LAP command-line application."""
