"""Online translation-system selection with bandit policies."""
__version__ = "0.1.0"
