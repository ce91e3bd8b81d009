"""Detection metrics package."""
