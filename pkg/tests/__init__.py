# Period Calculus - Test Package
"""Test package."""
