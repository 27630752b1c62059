"""Model configuration, data exports and the command-line entry point."""
