"""Morphing attack detection package."""
