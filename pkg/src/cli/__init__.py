"""Command-line surface."""

from src.cli.manifest import ManifestError, RunManifest, load_manifest

__all__ = ["ManifestError", "RunManifest", "load_manifest"]
