# reifenberg-lab/tests/unit/__init__.py
"""Unit tests package"""
