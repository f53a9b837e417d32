"""FastAPI service wrapping the simulation harness."""
