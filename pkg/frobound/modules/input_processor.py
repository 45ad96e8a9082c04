"""
Input processor module for frobound.

Validates command-line jobs and reads connection files.
"""

import os
from dataclasses import dataclass, field

import sympy as sym

from .. import config
from ..utils.exceptions import HypothesisError, InputError, UnsupportedInputError
from ..utils.logger import logger
from .connection import Connection, builtin_connection, format_point, parse_point, validate_theorem_hypotheses

COMMANDS = ("exponents", "bounds", "deform", "verify", "fiber", "delta-check", "lift-change")
FORMATS = ("table", "csv", "json")


@dataclass
class JobConfig:
    """One validated CLI job."""

    command: str
    family: str
    p: int
    M: int = config.DEFAULT_M
    K: int = config.DEFAULT_K
    m_min: int = 1
    m_max: int = None
    window: int = config.DEFAULT_WINDOW
    buffer: int = config.DEFAULT_BUFFER
    include_zero: bool = config.INCLUDE_ZERO
    output_format: str = "table"
    cache_dir: str = config.CACHE_DIR
    points: list = field(default_factory=list)
    i_max: int = config.DEFAULT_IMAX
    v_phi: int = config.FROB_VALUATION
    v_phi_inv: int = config.FROB_INVERSE_VALUATION

    @property
    def m_range(self):
        return list(range(self.m_min, self.m_max + 1))


def read_connection_file(path, p=None) -> Connection:
    """
    Read a connection file.

    Blank lines and lines starting with '#' are skipped. The first line holds r, the second
    p, then r lines with r entries 'P(t)/Q(t)' each, separated by ';' (or by whitespace when a
    line has no ';'). A ``p`` argument overrides the prime in the file.

    Raises:
        InputError: If the file is missing or malformed
    """
    if not os.path.exists(path):
        raise InputError(f"connection file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        lines = [line.strip() for line in f if line.strip() and not line.strip().startswith("#")]
    if len(lines) < 2:
        raise InputError(f"{path}: expected r and p before the matrix rows")
    try:
        r = int(lines[0])
        file_p = int(lines[1])
    except ValueError:
        raise InputError(f"{path}: r and p must be integers")
    rows = []
    for line in lines[2:]:
        entries = [e.strip() for e in line.split(";")] if ";" in line else line.split()
        rows.append(entries)
    if r < 1 or len(rows) != r or any(len(row) != r for row in rows):
        raise InputError(f"{path}: expected {r} rows of {r} entries")
    if p is not None and p != file_p:
        logger.warning(f"{path}: using p = {p} instead of {file_p}")
    name = os.path.splitext(os.path.basename(path))[0]
    return Connection.from_rows(rows, p if p is not None else file_p, name)


class InputProcessor:
    """
    Turns parsed arguments into a JobConfig and a Connection.
    """

    def process_input(self, command, family, p, **options) -> JobConfig:
        """
        Validate a job.

        Raises:
            InputError: If a parameter is out of range
            UnsupportedInputError: If p is not an odd prime
        """
        if command not in COMMANDS:
            raise InputError(f"unknown command '{command}'")
        self._validate_family(family)
        self._validate_prime(p, family)
        options = {key: value for key, value in options.items() if value is not None}
        points = [parse_point(z) for z in options.pop("points", [])]
        job = JobConfig(command, family, int(p), points=points, **options)
        if job.m_max is None:
            job.m_max = job.M
        self._validate_precision(job)
        if job.output_format not in FORMATS:
            raise InputError(f"format must be one of {', '.join(FORMATS)}")
        logger.info(f"processed job: {job.command} on {job.family}, p = {job.p}, M = {job.M}, K = {job.K}")
        return job

    def _validate_family(self, family):
        if not family:
            raise InputError("a family id or connection file is required")
        if family not in config.BUILTIN_FAMILIES and not os.path.exists(family):
            raise InputError(f"'{family}' is neither a built-in family nor a connection file")

    def _validate_prime(self, p, family):
        try:
            p = int(p)
        except (TypeError, ValueError):
            raise InputError(f"p must be an integer, got {p}")
        if p == 2:
            reports = self.hypothesis_reports(family, p)
            failing = [format_point(r.z) for r in reports if not r.passed]
            raise HypothesisError(f"p must be an odd prime, got 2 (hypotheses fail at {', '.join(failing) or 'no point'})",
                                  reports)
        if not sym.isprime(p):
            raise UnsupportedInputError(f"p must be an odd prime, got {p}")

    def hypothesis_reports(self, family, p):
        """Hypothesis report at every singular point of the family for the prime p."""
        if family in config.BUILTIN_FAMILIES:
            conn = builtin_connection(family, p)
        else:
            conn = read_connection_file(family, p)
        return [validate_theorem_hypotheses(conn, z) for z in conn.singular_points]

    def _validate_precision(self, job: JobConfig):
        if job.M < 1:
            raise InputError("M must be at least 1")
        if job.K < config.MIN_K:
            raise InputError(f"K must be at least {config.MIN_K}")
        if not 1 <= job.m_min <= job.m_max <= job.M:
            raise InputError(f"m range [{job.m_min}, {job.m_max}] must lie in [1, {job.M}]")
        if job.window < 1 or job.buffer < 0 or job.i_max < 0:
            raise InputError("window must be positive, buffer and imax non-negative")

    def load_connection(self, job: JobConfig) -> Connection:
        if job.family in config.BUILTIN_FAMILIES:
            return builtin_connection(job.family, job.p)
        return read_connection_file(job.family, job.p)
