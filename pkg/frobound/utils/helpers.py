"""
Helper functions for frobound.
"""

import json
import os
import hashlib
import tempfile
from datetime import datetime
from fractions import Fraction

from .logger import logger
from .exceptions import CacheError

def floor_log(i, p):
    """
    Compute floor(log_p(i)) by digit counting.

    Args:
        i: Positive integer (0 is mapped to 0)
        p: Base

    Returns:
        int: Number of base-p digits of i minus one
    """
    if i <= 0:
        return 0
    e = 0
    while i >= p:
        i //= p
        e += 1
    return e

def ceil_log(i, p):
    """
    Compute ceil(log_p(i)) by digit counting.

    Args:
        i: Positive integer (0 is mapped to 0)
        p: Base

    Returns:
        int: Smallest e with p**e >= i
    """
    if i <= 1:
        return 0
    e = 0
    power = 1
    while power < i:
        power *= p
        e += 1
    return e

def format_valuation(v):
    """Format a valuation for output: integers as decimal, infinity as 'inf'."""
    if v is None or v == float("inf"):
        return "inf"
    return str(int(v))

def format_rational(q):
    """Format a Fraction as 'a' or 'a/b'."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"

def generate_cache_key(*parts):
    """
    Generate a unique cache key for a sequence of key parts.

    Args:
        parts: Values identifying the cached object

    Returns:
        str: Cache key
    """
    key_string = ":".join(str(part) for part in parts).lower()
    return hashlib.md5(key_string.encode()).hexdigest()

def atomic_write_text(path, text):
    """
    Write text to a file atomically (temporary file in the same directory, then rename).

    Args:
        path: Destination path
        text: File contents

    Raises:
        CacheError: If the file cannot be written
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    try:
        fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except OSError as e:
        logger.error(f"Error writing {path}: {str(e)}")
        raise CacheError(f"Failed to write {path}: {str(e)}")

def get_cached_data(cache_key, cache_dir):
    """
    Retrieve JSON data from cache if it exists.

    Exact mathematical data never expires, so there is no expiry check.

    Args:
        cache_key: Cache key
        cache_dir: Cache directory

    Returns:
        dict or None: Cached data or None if not found or unreadable
    """
    cache_file = os.path.join(cache_dir, f"{cache_key}.json")

    if not os.path.exists(cache_file):
        return None

    try:
        with open(cache_file, 'r', encoding='utf-8') as f:
            cache_data = json.load(f)
        logger.debug(f"Cache hit for key: {cache_key}")
        return cache_data.get('data')

    except (json.JSONDecodeError, IOError) as e:
        logger.error(f"Error reading cache: {str(e)}")
        return None

def save_to_cache(data, cache_key, cache_dir):
    """
    Save JSON-serializable data to cache.

    Args:
        data: Data to cache
        cache_key: Cache key
        cache_dir: Cache directory

    Returns:
        bool: True if successful

    Raises:
        CacheError: If the file cannot be written
    """
    cache_file = os.path.join(cache_dir, f"{cache_key}.json")
    cache_data = {
        'timestamp': datetime.now().isoformat(),
        'data': data
    }
    atomic_write_text(cache_file, json.dumps(cache_data, ensure_ascii=False))
    logger.debug(f"Data saved to cache: {cache_key}")
    return True
