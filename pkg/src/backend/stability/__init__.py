"""
Stability eigenvalues and weighted Rayleigh quotients
"""
