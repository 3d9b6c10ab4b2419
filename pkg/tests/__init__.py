"""StarkCheck test suite."""
