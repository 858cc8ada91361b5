"""Finite-state Markov channels with a stationary law and their time reversal.

A channel is a strictly positive row-stochastic q x q matrix M together with
its unique stationary distribution alpha and the reversed kernel

    M_rev(i, j) = alpha(j) * M(j, i) / alpha(i).

Beliefs (probability vectors over the q states) are plain numpy arrays.
States are indexed 0..q-1 throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadDimension,
    BadPermutation,
    ChannelError,
    NoConvergence,
    NonPositiveEntry,
    NotStochastic,
)

ROW_SUM_ATOL = 1e-9
BELIEF_SUM_ATOL = 1e-12
STATIONARY_RESIDUAL = 1e-12


def _readonly(a: np.ndarray, dtype=float) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


def _normalize_exact(v: np.ndarray) -> np.ndarray:
    # Normalize and then push the rounding defect into the largest entry so
    # np.sum of the result is exactly 1.0.  Keeps downstream identities exact.
    v = v / v.sum()
    for _ in range(3):
        defect = v.sum() - 1.0
        if defect == 0.0:
            return v
        v = v.copy()
        v[int(np.argmax(v))] -= defect
    return v


def as_belief(vec, q: int | None = None) -> np.ndarray:
    """Validate a probability vector: entries >= 0, sum 1 within 1e-12."""
    p = np.asarray(vec, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise BadDimension(f"belief must be a vector of length >= 2, got shape {p.shape}")
    if q is not None and p.size != q:
        raise BadDimension(f"belief has length {p.size}, expected {q}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ChannelError("belief entries must be finite and nonnegative")
    if abs(p.sum() - 1.0) > BELIEF_SUM_ATOL:
        raise ChannelError(f"belief sums to {p.sum()!r}, not 1 within {BELIEF_SUM_ATOL}")
    return p


@dataclass(frozen=True)
class Channel:
    """Validated positive channel; arrays are read-only.

    Attributes
    ----------
    q : number of states
    matrix : (q, q) row-stochastic transition matrix, entries > 0
    stationary : (q,) stationary distribution alpha, np.sum == 1.0 exactly
    reversed : (q, q) reversed kernel, satisfies detailed balance with matrix
    label : optional human-readable description used in reports
    """

    q: int
    matrix: np.ndarray
    stationary: np.ndarray
    reversed: np.ndarray
    label: str | None = field(default=None, compare=False)


def _validate_matrix(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise BadDimension(f"channel matrix must be square, got shape {m.shape}")
    if m.shape[0] < 2:
        raise BadDimension("channel needs at least 2 states")
    if not np.all(np.isfinite(m)):
        raise NotStochastic("channel matrix has non-finite entries")
    if np.any(m <= 0.0):
        raise NonPositiveEntry("channel matrix entries must be strictly positive")
    rows = m.sum(axis=1)
    bad = np.abs(rows - 1.0) > ROW_SUM_ATOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NotStochastic(f"row {i} sums to {rows[i]!r}, not 1 within {ROW_SUM_ATOL}")
    # exact renormalization after validation
    m = m / rows[:, None]
    out = np.empty_like(m)
    for i in range(m.shape[0]):
        out[i] = _normalize_exact(m[i])
    return out


def _stationary_residual(alpha: np.ndarray, m: np.ndarray) -> float:
    return float(np.max(np.abs(alpha @ m - alpha)))


def _stationary_of(m: np.ndarray, max_iter: int = 20000) -> np.ndarray:
    q = m.shape[0]
    # direct solve of alpha (M - I) = 0 with the normalization row appended
    A = m.T - np.eye(q)
    A[-1, :] = 1.0
    b = np.zeros(q)
    b[-1] = 1.0
    try:
        a = np.linalg.solve(A, b)
        a = np.abs(a)
        a = _normalize_exact(a)
        if _stationary_residual(a, m) <= STATIONARY_RESIDUAL:
            return a
    except np.linalg.LinAlgError:
        a = np.full(q, 1.0 / q)
    # power-iteration fallback
    for _ in range(max_iter):
        a = _normalize_exact(a @ m)
        if _stationary_residual(a, m) <= STATIONARY_RESIDUAL:
            return a
    raise NoConvergence(
        f"stationary distribution residual {_stationary_residual(a, m):.3e} "
        f"did not reach {STATIONARY_RESIDUAL}"
    )


def stationary_distribution(matrix) -> np.ndarray:
    """Stationary distribution of a positive row-stochastic matrix.

    Solved directly via the linear system with a power-iteration fallback;
    the returned vector satisfies max|alpha M - alpha| <= 1e-12.
    """
    m = _validate_matrix(matrix)
    return _stationary_of(m)


def make_channel(matrix, label: str | None = None) -> Channel:
    """Build a validated Channel from a row-stochastic matrix.

    Raises NotStochastic / NonPositiveEntry / BadDimension on invalid input.
    Rows are renormalized exactly after validation, so row sums of the stored
    matrix are exactly 1.0.
    """
    m = _validate_matrix(matrix)
    alpha = _stationary_of(m)
    rev = (alpha[None, :] * m.T) / alpha[:, None]
    return Channel(
        q=m.shape[0],
        matrix=_readonly(m),
        stationary=_readonly(alpha),
        reversed=_readonly(rev),
        label=label,
    )


def reverse(channel: Channel) -> np.ndarray:
    """Reversed kernel M_rev(i, j) = alpha(j) M(j, i) / alpha(i)."""
    return channel.reversed


def second_eigenvalue(channel: Channel) -> float:
    """Modulus of the second-largest eigenvalue of the channel matrix.

    Eigenvalues are ranked by modulus; complex pairs contribute their modulus.
    """
    try:
        ev = np.linalg.eigvals(channel.matrix)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence("eigenvalue computation failed") from exc
    mods = np.sort(np.abs(ev))
    return float(mods[-2])


def potts_channel(q: int, beta: float) -> Channel:
    """Potts channel: diagonal e^{2 beta} / (e^{2 beta} + q - 1), off-diagonal
    1 / (e^{2 beta} + q - 1).  Symmetric, stationary law uniform."""
    if not isinstance(q, (int, np.integer)) or q < 2:
        raise BadDimension(f"potts channel needs integer q >= 2, got {q!r}")
    if not math.isfinite(beta):
        raise ChannelError(f"beta must be finite, got {beta!r}")
    e2b = math.exp(2.0 * beta)
    denom = e2b + q - 1.0
    m = np.full((q, q), 1.0 / denom)
    np.fill_diagonal(m, e2b / denom)
    return make_channel(m, label=f"potts(q={q}, beta={beta:g})")


def binary_channel(delta1: float, delta2: float) -> Channel:
    """Two-state channel [[1-delta1, delta1], [1-delta2, delta2]].

    Requires 0 < delta1, delta2 < 1 strictly.  The stationary law is
    (1-delta2, delta1) / (1 - delta2 + delta1).
    """
    for name, d in (("delta1", delta1), ("delta2", delta2)):
        if not (0.0 < d < 1.0):
            raise NonPositiveEntry(f"{name} must lie strictly in (0, 1), got {d!r}")
    m = np.array([[1.0 - delta1, delta1], [1.0 - delta2, delta2]])
    return make_channel(m, label=f"binary(delta1={delta1:g}, delta2={delta2:g})")


def permute_channel(channel: Channel, perm) -> Channel:
    """Permuted channel M_pi(i, j) = M(i, pi^{-1}(j)) for a permutation pi of 0..q-1."""
    p = np.asarray(perm)
    q = channel.q
    if p.shape != (q,) or not np.issubdtype(p.dtype, np.integer):
        raise BadPermutation(f"permutation must be {q} integers, got {perm!r}")
    if not np.array_equal(np.sort(p), np.arange(q)):
        raise BadPermutation(f"{perm!r} is not a permutation of 0..{q - 1}")
    inv = np.argsort(p)  # inv[j] = pi^{-1}(j)
    m = channel.matrix[:, inv]
    label = f"{channel.label}@perm{list(map(int, p))}" if channel.label else None
    return make_channel(m, label=label)


def channel_from_json(obj: dict) -> Channel:
    """Build a channel from its JSON description.

    Accepted forms:
      {"q": int, "matrix": [[...], ...]}
      {"family": "potts", "q": int, "beta": float}
      {"family": "binary", "delta1": float, "delta2": float}
    """
    if not isinstance(obj, dict):
        raise ChannelError(f"channel description must be an object, got {type(obj).__name__}")
    family = obj.get("family")
    if family == "potts":
        missing = {"q", "beta"} - obj.keys()
        if missing:
            raise ChannelError(f"potts channel requires keys {sorted(missing)}")
        return potts_channel(int(obj["q"]), float(obj["beta"]))
    if family == "binary":
        missing = {"delta1", "delta2"} - obj.keys()
        if missing:
            raise ChannelError(f"binary channel requires keys {sorted(missing)}")
        return binary_channel(float(obj["delta1"]), float(obj["delta2"]))
    if family is not None:
        raise ChannelError(f"unknown channel family {family!r}")
    if "matrix" not in obj:
        raise ChannelError("channel description needs either 'family' or 'matrix'")
    matrix = obj["matrix"]
    ch = make_channel(matrix, label="matrix")
    if "q" in obj and int(obj["q"]) != ch.q:
        raise ChannelError(f"declared q={obj['q']} but matrix is {ch.q}x{ch.q}")
    return ch


def channel_to_json(channel: Channel) -> dict:
    """Lossless JSON description (matrix form)."""
    return {"q": channel.q, "matrix": channel.matrix.tolist()}
