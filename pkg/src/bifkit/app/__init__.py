"""Application layer: builtin models, scenario runner, export, CLI."""
