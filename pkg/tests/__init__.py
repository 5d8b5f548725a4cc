# reifenberg-lab/tests/__init__.py
"""Test package for reifenberg-lab"""
