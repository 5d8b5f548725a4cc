# reifenberg-lab/tests/unit/core/__init__.py
"""Unit tests for core module"""
