"""retainkv: KV-cache eviction with trained retaining heads for chunked prefill."""

__version__ = "2024.10.1"
