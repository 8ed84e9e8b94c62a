"""
Hardy-Rellich weights, Bessel pairs and their verification
"""
