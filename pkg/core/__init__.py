"""Shared core engine: config, logging, reports, schema validation and image IO."""
