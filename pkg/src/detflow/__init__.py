"""detflow."""
