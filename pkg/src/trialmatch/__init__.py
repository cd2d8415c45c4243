"""trialmatch: patient-trial matching pipeline with visual page retrieval."""

__version__ = "0.1.0"
