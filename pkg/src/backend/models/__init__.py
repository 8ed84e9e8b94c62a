"""
Report data models
"""
