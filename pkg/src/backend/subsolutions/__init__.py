"""
Singular sub-solutions and their pointwise certificates
"""
