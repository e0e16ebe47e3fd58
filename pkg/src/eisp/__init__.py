"""Desk-scale laboratory for explicit-implicit subgoal planning."""

__version__ = "0.1.0"
