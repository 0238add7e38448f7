"""isadm CLI commands."""
from . import analyze, elicit, fetch, groups, merge, validate

__all__ = ["analyze", "elicit", "fetch", "groups", "merge", "validate"]
