"""Package exception types."""


class ValidationError(ValueError):
    """Invalid configuration, label values, shapes, or file contents."""
