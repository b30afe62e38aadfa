"""Sampling of dense real elliptic random matrices.

Entry ``(i, i)`` is a diagonal draw, and each unordered pair ``{(i, j), (j, i)}``
with ``i < j`` is one joint draw of ``(xi1, xi2)``; all blocks are independent.
Rows are grouped into fixed blocks of ``ROW_BLOCK`` rows, each with its own
stream derived from ``(seed, block index)``, so the result does not depend on
how many workers fill the matrix.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
import csv
import math
import struct

import numpy as np

from .atoms import (AtomPairSpec, DiagonalSpec, MomentSummary, TruncationPolicy,
                    compute_moments, sample_diags, sample_pairs, truncate_standardize,
                    truncation_stats)
from .errors import EnsembleStateError, ResourceError

__all__ = ["EllipticMatrix", "sample_elliptic", "normalize", "dump_matrix", "load_matrix",
           "write_eigenvalues_csv", "read_eigenvalues_csv", "block_rng", "MAX_N", "ROW_BLOCK"]

MAX_N = 16384
ROW_BLOCK = 64

FLAG_NORMALIZED = 1
FLAG_TRUNCATED = 2


@dataclass(frozen=True)
class EllipticMatrix:
    n: int
    entries: np.ndarray
    normalized: bool
    seed: int
    moment_summary: MomentSummary | None = None
    truncated: bool = False

    @property
    def flags(self):
        return (FLAG_NORMALIZED if self.normalized else 0) | (FLAG_TRUNCATED if self.truncated else 0)

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(block),)))


def _fill_block(Y, b, n, pair, diag, seed, pair_stats, diag_stats, policy):
    rng = block_rng(seed, b)
    lo, hi = b * ROW_BLOCK, min(n, (b + 1) * ROW_BLOCK)
    for i in range(lo, hi):
        z = sample_diags(diag, rng, 1)
        x1, x2 = sample_pairs(pair, rng, n - 1 - i)
        if policy.enabled:
            z = truncate_standardize(z, policy, n, diag_stats)
            x1, x2 = truncate_standardize((x1, x2), policy, n, pair_stats)
        Y[i, i] = z[0]
        Y[i, i + 1:] = x1
        Y[i + 1:, i] = x2


def sample_elliptic(n: int, pair: AtomPairSpec, diag: DiagonalSpec,
                    policy: TruncationPolicy | None = None, seed: int = 0,
                    workers: int = 1, max_n: int = MAX_N) -> EllipticMatrix:
    """Draw the unnormalised ``n x n`` matrix ``Y``.

    With an enabled truncation policy every entry is truncated and standardised
    as it is drawn, so the matrix returned is the bounded-entry version.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > max_n:
        raise ResourceError(f"n = {n} exceeds the configured cap {max_n}")
    policy = policy or TruncationPolicy()
    moments = compute_moments(pair, diag)
    pair_stats = truncation_stats(pair, policy, n) if policy.enabled else None
    diag_stats = truncation_stats(diag, policy, n) if policy.enabled else None
    Y = np.empty((n, n))
    blocks = range(math.ceil(n / ROW_BLOCK))
    args = (n, pair, diag, seed, pair_stats, diag_stats, policy)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(lambda b: _fill_block(Y, b, *args), blocks))
    else:
        for b in blocks:
            _fill_block(Y, b, *args)
    Y.flags.writeable = False
    return EllipticMatrix(n, Y, False, int(seed), moments, policy.enabled)


def normalize(Y: EllipticMatrix) -> EllipticMatrix:
    """Return ``X = Y / sqrt(n)``."""
    if Y.normalized:
        raise EnsembleStateError("matrix is already normalized")
    X = Y.entries / math.sqrt(Y.n)
    X.flags.writeable = False
    return replace(Y, entries=X, normalized=True)


def dump_matrix(path, M: EllipticMatrix):
    """Binary dump: ``<u32 n><u32 flags>`` then ``n*n`` little-endian f64, row-major."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", M.n, M.flags))
        fh.write(np.ascontiguousarray(M.entries, dtype="<f8").tobytes(order="C"))
    return path


def load_matrix(path):
    """Inverse of :func:`dump_matrix`; returns ``(entries, flags)``."""
    with open(path, "rb") as fh:
        n, flags = struct.unpack("<II", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n * n:
        raise ValueError(f"{path}: expected {n * n} doubles, found {data.size}")
    return data.reshape(n, n).astype(float), flags


def write_eigenvalues_csv(path, eigenvalues):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["re", "im"])
        for lam in np.asarray(eigenvalues, dtype=complex):
            w.writerow([format(lam.real, ".17g"), format(lam.imag, ".17g")])
    return path


def read_eigenvalues_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
