"""
frobound modules package.
"""
