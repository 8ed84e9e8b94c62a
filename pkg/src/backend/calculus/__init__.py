"""
Exact radial calculus, graded grids and discrete radial operators
"""
