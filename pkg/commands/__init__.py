"""Command handlers for the batch CLI."""
