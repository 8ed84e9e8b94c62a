"""
Backend package for the MEMS Navier laboratory
"""
