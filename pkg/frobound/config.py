"""
Configuration settings for frobound.
"""

import os

from dotenv import load_dotenv

load_dotenv()

# Cache settings
CACHE_DIR = os.environ.get("FROBOUND_CACHE", "./.frobound-cache")
KERNEL_VERSION = "1"  # Bump whenever cached series would change

# Precision settings
DEFAULT_M = 6  # Target congruence precision p^M
DEFAULT_K = 256  # t-adic truncation order
MIN_K = 64
DEFAULT_BUFFER = 5  # Extra p-adic digits B on top of the derived losses
LOG_WEIGHT = 1  # Solution denominators grow like p^(LOG_WEIGHT * ceil(log_p k))

# Pole-order measurement settings
DEFAULT_WINDOW = 24  # Minimum number of vanishing coefficients past the polynomial part
DEFAULT_ORDER_CAP = 24  # Highest order tried at a point
DEFAULT_DEGREE_SLACK = 32  # D_max = 2 * (sum of pole guesses) + slack
POLE_SLACK = 4  # Extra power of (t - z') used to clear the other singular point

# Bound calculus settings
INCLUDE_ZERO = True  # Whether i = 0 belongs to the index set of c and g
FROB_VALUATION = 0  # v_p(Phi) used when no fiber data is supplied
FROB_INVERSE_VALUATION = -1  # v_p(Phi^-1) likewise

# Divided-power tower settings
DELTA_CACHE = True  # Persist Delta^(i) valuation tables to CACHE_DIR
DEFAULT_IMAX = 200

# Parallelism
MAX_WORKERS = int(os.environ.get("FROBOUND_WORKERS", "4"))

# Built-in families
BUILTIN_FAMILIES = ["elliptic-example"]
