"""Dataset protocol package."""
