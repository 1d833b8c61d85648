"""Extract UI grammar from mobile view hierarchies, prompt LLMs with it and score the layouts they return."""

__version__ = "0.1.0"
