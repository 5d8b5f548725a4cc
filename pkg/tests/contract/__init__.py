"""Contract tests for the run-directory report artifacts."""
