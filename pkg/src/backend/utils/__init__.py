"""
Utilities module
"""