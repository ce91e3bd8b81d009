"""Vulnerability metrics package."""
