"""Dense tensor contraction, truncated SVD, and a restarted Lanczos eigensolver.

Everything in here is plain numpy.  The three entry points carry the index and
truncation conventions that the MPS, DMRG, and fidelity code relies on:

* :func:`contract` is a tensordot wrapper with explicit axis lists,
* :func:`svd_truncate` truncates by cumulative discarded weight first and only
  then by the rank cap, never splitting a degenerate multiplet,
* :func:`lanczos_ground` finds the lowest eigenpair of a Hermitian operator
  given only as a matvec callable, restarting on breakdown.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray

__all__ = ["SvdResult", "contract", "svd_truncate", "lanczos_ground"]

#: Relative spacing below which adjacent singular values count as degenerate.
_TIE_RTOL = 1e-12

#: Lanczos recurrence is declared broken down when the new basis vector has
#: norm below this.
_BREAKDOWN = 1e-14


def contract(
    a: NDArray,
    axes_a: Sequence[int],
    b: NDArray,
    axes_b: Sequence[int],
) -> NDArray:
    """Contract tensors ``a`` and ``b`` over the given axis pairs.

    Thin wrapper around :func:`numpy.tensordot` so every contraction in the
    package names its axes explicitly.  Remaining axes keep their relative
    order, ``a``'s first.

    Args:
        a: Left tensor.
        axes_a: Axes of ``a`` to contract, paired elementwise with ``axes_b``.
        b: Right tensor.
        axes_b: Axes of ``b`` to contract.

    Returns:
        The contracted tensor.
    """
    return np.tensordot(a, b, axes=(tuple(axes_a), tuple(axes_b)))


@dataclass(frozen=True)
class SvdResult:
    """Truncated singular value decomposition ``m ~ U @ diag(s) @ Vh``.

    Attributes:
        left_isometry: Columns are the kept left singular vectors.
        singular_values: Kept singular values, descending.
        right_isometry: Rows are the kept right singular vectors.
        discarded_weight: Sum of squared discarded singular values divided by
            the total sum of squares (0.0 for an exact decomposition).
    """

    left_isometry: NDArray
    singular_values: NDArray[np.float64]
    right_isometry: NDArray
    discarded_weight: float


def svd_truncate(
    m: NDArray,
    max_rank: int | None = None,
    cutoff: float = 0.0,
) -> SvdResult:
    """SVD of a matrix, truncated by discarded weight and then by rank.

    The kept rank is ``min(max_rank, k)`` where ``k`` is the smallest count of
    leading singular values whose cumulative discarded weight (relative sum of
    squares of the dropped tail) does not exceed ``cutoff``.  If the weight
    cut would split a set of singular values that are degenerate to relative
    precision ``1e-12``, the whole multiplet is kept; the rank cap, being a
    hard resource limit, still wins afterwards.  At least one singular value
    is always retained.

    Args:
        m: Matrix to decompose (2d).
        max_rank: Hard cap on the kept rank, ``None`` for no cap.
        cutoff: Largest acceptable relative discarded weight.

    Returns:
        An :class:`SvdResult` with the kept factors and the relative weight
        that was actually discarded.
    """
    if m.ndim != 2:
        raise ValueError(f"svd_truncate expects a matrix, got ndim={m.ndim}")
    u, s, vh = np.linalg.svd(m, full_matrices=False)

    weights = s.astype(np.float64) ** 2
    total = float(weights.sum())
    n = s.size
    if total == 0.0:
        rank = 1 if max_rank is None else max(1, min(max_rank, 1))
        return SvdResult(u[:, :rank], s[:rank], vh[:rank], 0.0)

    # Smallest k whose discarded tail is within the cutoff.
    tail = np.concatenate([np.cumsum(weights[::-1])[::-1], [0.0]])  # tail[k] = sum(w[k:])
    k = n
    for cand in range(n + 1):
        if tail[cand] <= cutoff * total:
            k = cand
            break
    # Never split a degenerate multiplet: extend across ties.
    while 0 < k < n and s[k] > s[k - 1] * (1.0 - _TIE_RTOL):
        k += 1
    k = max(1, k)
    if max_rank is not None:
        k = max(1, min(max_rank, k))

    discarded = float(tail[k] / total)
    return SvdResult(u[:, :k], s[:k], vh[:k], discarded)


def _dense_ground(
    apply: Callable[[NDArray], NDArray], dim: int
) -> tuple[float, NDArray]:
    """Exact lowest eigenpair by materializing the operator column by column."""
    probe = apply(np.eye(dim, dtype=np.float64)[:, 0])
    h = np.empty((dim, dim), dtype=np.result_type(probe.dtype, np.float64))
    h[:, 0] = probe
    eye = np.eye(dim, dtype=np.float64)
    for j in range(1, dim):
        h[:, j] = apply(eye[:, j])
    evals, evecs = np.linalg.eigh(h)
    return float(evals[0]), np.ascontiguousarray(evecs[:, 0])


def lanczos_ground(
    apply: Callable[[NDArray], NDArray],
    dim: int,
    tol: float = 1e-10,
    max_iter: int = 300,
    seed: int = 0,
    v0: NDArray | None = None,
    warn: bool = True,
) -> tuple[float, NDArray]:
    """Lowest eigenpair of a Hermitian operator via restarted Lanczos.

    Builds Krylov blocks with full reorthogonalization, restarts from the best
    Ritz vector, and injects a fresh seeded random vector whenever the
    recurrence breaks down (new basis vector norm below ``1e-14``), so an
    accidental start inside an invariant subspace of an excited state cannot
    stall the search.  Convergence requires the Ritz residual estimate to drop
    below ``tol * max(1, |energy|)`` and the energy to agree with the previous
    restart cycle.  Non-convergence within the matvec budget returns the best
    pair found, with a warning unless ``warn=False``.

    Args:
        apply: Matvec callable for the Hermitian operator.
        dim: Vector space dimension.
        tol: Relative residual / energy-change tolerance.
        max_iter: Total matvec budget.
        seed: Seed for the random starting vector(s).
        v0: Optional warm-start vector (copied, need not be normalized).

    Returns:
        ``(energy, vector)`` with the vector normalized.
    """
    if dim <= 0:
        raise ValueError(f"dimension must be positive, got {dim}")
    if dim <= 64:
        return _dense_ground(apply, dim)

    rng = np.random.default_rng(seed)

    def fresh() -> NDArray:
        v = rng.standard_normal(dim)
        return v / np.linalg.norm(v)

    if v0 is not None:
        v = np.array(v0, copy=True).ravel()
        nv = np.linalg.norm(v)
        v = v / nv if nv > 0 else fresh()
    else:
        v = fresh()

    block = min(dim, 25)
    used = 0
    best_e = np.inf
    best_v = v
    prev_e: float | None = None
    converged = False
    resid = np.inf

    while used < max_iter and not converged:
        basis: list[NDArray] = [v]
        alphas: list[float] = []
        betas: list[float] = []
        broke_down = False
        exit_beta = 0.0
        while len(alphas) < block and used < max_iter:
            w = apply(basis[-1])
            used += 1
            alphas.append(float(np.real(np.vdot(basis[-1], w))))
            w = w - alphas[-1] * basis[-1]
            if betas:
                w = w - betas[-1] * basis[-2]
            # Full reorthogonalization, twice, for numerical hygiene.
            for _ in range(2):
                for u in basis:
                    w = w - np.vdot(u, w) * u
            beta = float(np.linalg.norm(w))
            if beta < _BREAKDOWN:
                broke_down = True
                break
            soft_stop = beta <= 0.1 * tol * max(1.0, abs(alphas[0]))
            if soft_stop or len(alphas) == block or len(basis) == dim or used >= max_iter:
                exit_beta = beta
                break
            betas.append(beta)
            basis.append(w / beta)

        t = np.diag(np.asarray(alphas, dtype=np.float64))
        if betas:
            off = np.asarray(betas[: len(alphas) - 1], dtype=np.float64)
            t += np.diag(off, 1) + np.diag(off, -1)
        evals, evecs = np.linalg.eigh(t)
        e = float(evals[0])
        y = evecs[:, 0]
        ritz = sum(coef * vec for coef, vec in zip(y, basis))
        ritz = ritz / np.linalg.norm(ritz)
        # Standard Lanczos residual bound |beta_m * y[-1]|; zero on breakdown.
        resid = 0.0 if broke_down else abs(exit_beta * y[-1])

        if e < best_e:
            best_e, best_v = e, ritz

        scale = max(1.0, abs(best_e))
        if (
            prev_e is not None
            and resid <= tol * scale
            and abs(e - prev_e) <= tol * scale
        ):
            converged = True
        prev_e = e

        if broke_down and not converged:
            # Invariant subspace exhausted: probe with a fresh direction
            # orthogonal to the current best before trusting the answer.
            v = fresh()
            for u in (best_v,):
                v = v - np.vdot(u, v) * u
            nv = np.linalg.norm(v)
            v = v / nv if nv > 0 else fresh()
        else:
            v = ritz

    if not converged and warn:
        warnings.warn(
            f"lanczos_ground: no convergence after {used} matvecs "
            f"(residual {resid:.3e}); returning best Ritz pair",
            stacklevel=2,
        )
    return best_e, best_v
