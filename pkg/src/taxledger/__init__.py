"""taxledger: multi-modal hidden-economy post detection and triage."""

__version__ = "0.1.0"
