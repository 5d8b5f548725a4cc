# reifenberg-lab/tests/unit/services/__init__.py
"""Unit tests for services module"""
