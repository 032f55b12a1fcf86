"""Command implementations, one BaseTool subclass per command."""
