"""Morph engine package."""
