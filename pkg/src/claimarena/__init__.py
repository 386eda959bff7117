"""claimarena: gamified collection and benchmarking of adversarial fact-verification claims."""

__version__ = "0.1.0"
