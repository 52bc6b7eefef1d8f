"""Bundled experiment presets (YAML, .cfg) for the `reproduce` subcommand."""
