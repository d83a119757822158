"""Attribute-based private retrieval from dedicated and central servers."""
from .field import FieldElement, FieldPrime
from .model import MessageStore, RandomnessPool, SystemConfig, build_views, verify_attributes

__version__ = "0.1.0"

__all__ = ["FieldElement", "FieldPrime", "MessageStore", "RandomnessPool", "SystemConfig",
           "build_views", "verify_attributes"]
