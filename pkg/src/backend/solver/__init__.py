"""
Navier linear solves and the minimal-solution branch
"""
