"""StarkCheck source package."""
