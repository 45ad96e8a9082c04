"""
frobound: pole orders of Frobenius matrices modulo p^m.
"""

__version__ = "0.1.0"
