"""SLamJS - a staged, dynamically typed core calculus with dependency markers,
0CFA and static information-flow analysis."""

__version__ = "0.1.0"
