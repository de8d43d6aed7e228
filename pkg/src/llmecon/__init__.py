"""llmecon - economic rationality experiments for chat language models."""

__version__ = "0.1.0"
