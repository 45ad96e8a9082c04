"""
frobound utilities package.
"""
