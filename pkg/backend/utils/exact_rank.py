"""
Exact matrix rank for integer matrices

bareiss_rank: fraction-free elimination on Python integers, exact.
modular_rank: elimination over GF(p) with int64 arithmetic; the result is a
lower bound for the rational rank (equal to it unless p divides a minor).
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_PRIME = 16_777_213  # 2**24 - 3; p**2 * 1024 stays below 2**63


def bareiss_rank(matrix) -> int:
    """Rank via Bareiss fraction-free elimination; every division is exact"""
    m = np.array(matrix, dtype=object)
    if m.ndim != 2 or m.size == 0:
        return 0
    m = np.vectorize(int, otypes=[object])(m)
    rows, cols = m.shape

    rank = 0
    previous = 1
    for col in range(cols):
        if rank == rows:
            break
        nonzero = [r for r in range(rank, rows) if m[r, col] != 0]
        if not nonzero:
            continue
        pivot_row = nonzero[0]
        if pivot_row != rank:
            m[[rank, pivot_row]] = m[[pivot_row, rank]]
        pivot = m[rank, col]
        below = m[rank + 1:, col].copy()
        m[rank + 1:, col + 1:] = (
            m[rank + 1:, col + 1:] * pivot - np.outer(below, m[rank, col + 1:])
        ) // previous
        m[rank + 1:, col] = 0
        previous = pivot
        rank += 1
    return rank


def _rref_mod(block: np.ndarray, prime: int) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form over GF(prime); returns nonzero rows and pivot columns"""
    b = block.copy()
    n_rows, n_cols = b.shape
    pivots = []
    r = 0
    for col in range(n_cols):
        if r == n_rows:
            break
        nz = np.flatnonzero(b[r:, col])
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            b[[r, p]] = b[[p, r]]
        inv = pow(int(b[r, col]), prime - 2, prime)
        b[r] = (b[r] * inv) % prime
        others = np.arange(n_rows) != r
        factors = b[others, col]
        b[others] = (b[others] - (np.outer(factors, b[r]) % prime)) % prime
        pivots.append(col)
        r += 1
    return b[:r], pivots


def modular_rank(
    matrix,
    prime: int = DEFAULT_PRIME,
    target: Optional[int] = None,
    batch_size: int = 256,
    seed: int = 0
) -> int:
    """
    Rank over GF(prime), rows processed in a seeded random order

    Args:
        matrix: integer matrix
        prime: modulus below 2**24 so int64 products cannot overflow
        target: stop as soon as this rank is reached (default min(shape))
        batch_size: rows reduced per step against the running basis
        seed: row permutation seed

    Returns:
        Rank modulo prime
    """
    a = np.asarray(matrix, dtype=np.int64)
    if a.ndim != 2 or a.size == 0:
        return 0
    a = a % prime
    n_rows, n_cols = a.shape
    if target is None:
        target = min(n_rows, n_cols)

    order = np.random.default_rng(seed).permutation(n_rows)
    basis = np.zeros((0, n_cols), dtype=np.int64)
    pivots: List[int] = []

    for start in range(0, n_rows, batch_size):
        batch = a[order[start:start + batch_size]]
        if pivots:
            batch = (batch - (batch[:, pivots] @ basis) % prime) % prime
        new_rows, new_pivots = _rref_mod(batch, prime)
        if new_pivots:
            if pivots:
                basis = (basis - (basis[:, new_pivots] @ new_rows) % prime) % prime
            basis = np.vstack([basis, new_rows])
            pivots.extend(new_pivots)
            logger.debug(f"Modular rank {len(pivots)} after {start + len(batch)} rows")
        if len(pivots) >= target:
            break
    return len(pivots)
