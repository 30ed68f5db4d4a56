"""Knowledge-based medical image understanding: a semantic-network knowledge
base, a blackboard of cooperating agents, and genetic-algorithm tuning of the
knowledge base parameters."""

__version__ = "0.1.0"
