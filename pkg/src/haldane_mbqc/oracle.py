"""Dense brute-force reference for the teleported-gate protocols.

Everything here works on explicit state vectors and enumerates every
measurement branch of a protocol, so it is exponentially expensive and only
runs on short chains.  It shares the Hamiltonian *definition* with
:mod:`.model` (the term list) but nothing else: ground states come from dense
or Lanczos diagonalization of the terms, and gate fidelities from literal
simulation of the adaptive measurement protocol, byproduct corrections
included.  The tensor-network formulas in :mod:`.fidelity` are validated
against these results.

Conventions: a branch outcome is one of ``"x", "y", "z"`` per spin-1 site
(the label of the measured basis vector before rotation); the accumulated
byproduct, initial in-qubit twist included, is undone on the out qubit by
``X^(Nx+1) Z^(Nz+1)`` with ``Nx`` counting x and y outcomes and ``Nz``
counting y and z outcomes.  Reported fidelities are entanglement (Choi)
fidelities ``<psi_U| rho |psi_U>`` with ``|psi_U> = (I (x) U)|phi+>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np
from numpy.typing import NDArray

from .linalg import lanczos_ground
from .model import (
    BlockedLayout,
    HamiltonianSpec,
    chain_dims,
    dense_hamiltonian,
    local_terms,
)
from .spin_ops import measurement_basis, pauli, rotation_gate

__all__ = [
    "DenseState",
    "GroundStateResult",
    "MeasurementRegion",
    "OutcomeSequence",
    "TwoQubitDensityMatrix",
    "blocked_regions",
    "choi_matrix",
    "enumerate_branches",
    "exact_ground_state",
    "fidelity_from_rho",
    "rz_fidelity_oracle",
    "rz_regions",
    "unitary_fidelity_oracle",
]

_DENSE_EIGH_CAP = 4 * 3**6
_BRANCH_CAP = 3**12
_OUTCOMES = ("x", "y", "z")


@dataclass(frozen=True)
class DenseState:
    """A state vector on the full chain together with its site dimensions."""

    vector: NDArray
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.vector.size != math.prod(self.dims):
            raise ValueError(
                f"vector of size {self.vector.size} does not match dims {self.dims}"
            )

    @property
    def n_spin(self) -> int:
        return len(self.dims) - 2


@dataclass(frozen=True)
class GroundStateResult:
    energy: float
    state: DenseState
    gap: float
    degenerate: bool


def _term_matvec(spec: HamiltonianSpec) -> Callable[[NDArray], NDArray]:
    """Matrix-vector product of the Hamiltonian applied term by term."""
    dims = chain_dims(spec)
    compiled = []
    for sites, ops, coeff in local_terms(spec):
        mat = np.array([[coeff]])
        for op in ops:
            mat = np.kron(mat, op)
        lo, hi = sites[0], sites[-1]
        pre = math.prod(dims[:lo])
        mid = math.prod(dims[lo : hi + 1])
        suf = math.prod(dims[hi + 1 :])
        if np.all(mat.imag == 0.0):
            mat = mat.real
        compiled.append((pre, mat, mid, suf))

    def apply(x: NDArray) -> NDArray:
        y = None
        for pre, mat, mid, suf in compiled:
            v = x.reshape(pre, mid, suf)
            contrib = np.tensordot(mat, v, axes=([1], [1])).transpose(1, 0, 2).reshape(-1)
            y = contrib if y is None else y + contrib
        return y

    return apply


def exact_ground_state(spec: HamiltonianSpec, *, seed: int = 0) -> GroundStateResult:
    """Ground state by dense or Lanczos diagonalization of the term list.

    Dense below 2917 states, Lanczos with a deflated second run above.  A gap
    below 1e-10 (relative to max(1, |E0|)) is flagged as degenerate; callers
    decide whether a degenerate resource state is acceptable.
    """
    dims = chain_dims(spec)
    dim = math.prod(dims)
    if dim <= _DENSE_EIGH_CAP:
        h = dense_hamiltonian(spec)
        evals, evecs = np.linalg.eigh(h)
        e0, e1 = float(evals[0]), float(evals[1])
        vec = np.ascontiguousarray(evecs[:, 0])
    else:
        apply = _term_matvec(spec)
        e0, vec = lanczos_ground(apply, dim, tol=1e-12, seed=seed)
        shift = 10.0 + 4.0 * abs(e0)

        def deflated(x: NDArray) -> NDArray:
            return apply(x) + shift * vec * (vec.conj() @ x)

        e1, _ = lanczos_ground(deflated, dim, tol=1e-10, seed=seed + 1)
    gap = e1 - e0
    degenerate = gap <= 1e-10 * max(1.0, abs(e0))
    return GroundStateResult(e0, DenseState(vec, dims), gap, degenerate)


@dataclass(frozen=True)
class MeasurementRegion:
    """A run of consecutive spin sites measured with one rotated basis.

    ``success`` lists the outcomes that implement the rotation; the third
    basis label defers the attempt to the next site.  ``success=None`` marks
    a junction region measured in the plain basis with no attempt semantics.
    The measurement angle at an attempt site is
    ``flip_base * (-1)**(# earlier outcomes in flip_on) * angle``; once the
    region has succeeded its remaining sites are measured at angle zero.
    """

    n_sites: int
    rotation_axis: str
    angle: float
    success: tuple[str, str] | None
    flip_on: tuple[str, ...] = ()
    flip_base: int = 1

    @property
    def failure(self) -> str | None:
        if self.success is None:
            return None
        return next(o for o in _OUTCOMES if o not in self.success)


def rz_regions(n_sites: int, theta: float) -> list[MeasurementRegion]:
    """Protocol for a z rotation on a plain chain: one region, all sites."""
    return [MeasurementRegion(n_sites, "z", theta, ("x", "y"), flip_on=("x", "y"))]


def blocked_regions(
    layout: BlockedLayout, theta: float, phi: float, lam: float
) -> list[MeasurementRegion]:
    """Protocol for U = Rx(theta) Ry(phi) Rz(lambda) on a blocked chain.

    Block A teleports the z rotation, B the y rotation, C the x rotation;
    the junctions between them are measured in the plain basis.  Each block's
    angle sign tracks the byproduct operators its rotation must commute
    through: the two Pauli labels that anticommute with the block's rotation
    axis flip the sign.  Block B carries an extra built-in flip because both
    of its success outcomes produce anticommuting byproducts, while for A and
    C the success byproduct cancels against the initial in-qubit twist.
    """
    n, nj = layout.n_block, layout.n_junction
    junction = MeasurementRegion(nj, "z", 0.0, None)
    return [
        MeasurementRegion(n, "z", lam, ("x", "y"), flip_on=("x", "y")),
        junction,
        MeasurementRegion(n, "y", phi, ("z", "x"), flip_on=("x", "z"), flip_base=-1),
        junction,
        MeasurementRegion(n, "x", theta, ("y", "z"), flip_on=("y", "z")),
    ]


@dataclass(frozen=True)
class OutcomeSequence:
    """One measurement branch: outcome labels, probability, corrected state."""

    outcomes: tuple[str, ...]
    probability: float
    corrected_state: NDArray


@dataclass(frozen=True)
class TwoQubitDensityMatrix:
    matrix: NDArray

    def validate(self, atol: float = 1e-10) -> "TwoQubitDensityMatrix":
        m = self.matrix
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > atol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > atol or abs(np.trace(m).imag) > atol:
            raise ValueError(f"density matrix trace {np.trace(m)} is not 1")
        if np.linalg.eigvalsh(m).min() < -atol:
            raise ValueError("density matrix has a negative eigenvalue")
        return self


def _project_site(psi: NDArray, bra: NDArray) -> NDArray:
    rest = psi.shape[1] // 3
    return np.einsum("s,asrb->arb", bra.conj(), psi.reshape(2, 3, rest, 2))


def _branches(
    state: DenseState, regions: Sequence[MeasurementRegion]
) -> Iterator[tuple[tuple[str, ...], NDArray]]:
    """Yield (outcomes, unnormalized corrected 2-qubit vector) per branch."""
    n_spin = state.n_spin
    if sum(r.n_sites for r in regions) != n_spin:
        raise ValueError("regions do not cover the chain")
    if 3**n_spin > _BRANCH_CAP:
        raise ValueError(f"branch enumeration beyond {_BRANCH_CAP} branches refused")
    if any(d != 3 for d in state.dims[1:-1]) or state.dims[0] != 2 or state.dims[-1] != 2:
        raise ValueError("expected a qubit-chain-qubit state with spin-1 sites")

    schedule = [r for r in regions for _ in range(r.n_sites)]
    basis_cache: dict[tuple[str, float], dict[str, NDArray]] = {}

    def basis_vectors(axis: str, angle: float) -> dict[str, NDArray]:
        key = (axis, angle)
        if key not in basis_cache:
            basis_cache[key] = measurement_basis(axis, angle).vectors
        return basis_cache[key]

    x_mat, z_mat = pauli("x"), pauli("z")
    psi0 = state.vector.reshape(2, 3**n_spin, 2)

    def walk(
        site: int, psi: NDArray, outcomes: tuple[str, ...], done: tuple[bool, ...]
    ) -> Iterator[tuple[tuple[str, ...], NDArray]]:
        if site == n_spin:
            nx = sum(1 for o in outcomes if o in ("x", "y"))
            nz = sum(1 for o in outcomes if o in ("y", "z"))
            corr = psi[:, 0, :]
            if (nx + 1) % 2:
                corr = corr @ x_mat.T
            if (nz + 1) % 2:
                corr = corr @ z_mat.T
            yield outcomes, corr.reshape(4)
            return
        region_idx = _region_of(regions, site)
        region = regions[region_idx]
        if region.success is None or done[region_idx]:
            vectors = basis_vectors(region.rotation_axis, 0.0)
        else:
            flips = sum(1 for o in outcomes if o in region.flip_on)
            sign = region.flip_base * (-1) ** flips
            vectors = basis_vectors(region.rotation_axis, sign * region.angle)
        for label in _OUTCOMES:
            child = _project_site(psi, vectors[label])
            new_done = done
            if region.success is not None and not done[region_idx] and label in region.success:
                new_done = done[:region_idx] + (True,) + done[region_idx + 1 :]
            yield from walk(site + 1, child, outcomes + (label,), new_done)

    yield from walk(0, psi0, (), tuple(False for _ in regions))


def _region_of(regions: Sequence[MeasurementRegion], site: int) -> int:
    acc = 0
    for i, r in enumerate(regions):
        acc += r.n_sites
        if site < acc:
            return i
    raise IndexError(site)


def enumerate_branches(
    state: DenseState, regions: Sequence[MeasurementRegion]
) -> Iterator[OutcomeSequence]:
    """All measurement branches with probabilities and corrected states."""
    for outcomes, vec in _branches(state, regions):
        p = float(np.real(vec.conj() @ vec))
        normalized = vec / math.sqrt(p) if p > 1e-300 else np.zeros(4, dtype=vec.dtype)
        yield OutcomeSequence(outcomes, p, normalized)


def choi_matrix(
    state: DenseState, regions: Sequence[MeasurementRegion]
) -> TwoQubitDensityMatrix:
    """Average post-correction two-qubit state over all branches."""
    rho = np.zeros((4, 4), dtype=np.complex128)
    for _, vec in _branches(state, regions):
        rho += np.outer(vec, vec.conj())
    return TwoQubitDensityMatrix(rho).validate()


def fidelity_from_rho(rho: TwoQubitDensityMatrix, u: NDArray) -> float:
    """Entanglement fidelity of rho against the Choi state of a 2x2 unitary."""
    target = (u.T / math.sqrt(2.0)).reshape(4)
    return float(np.real(target.conj() @ rho.matrix @ target))


def rz_fidelity_oracle(state: DenseState, theta: float) -> float:
    rho = choi_matrix(state, rz_regions(state.n_spin, theta))
    return fidelity_from_rho(rho, rotation_gate("z", theta, spin="half"))


def unitary_fidelity_oracle(
    state: DenseState, layout: BlockedLayout, theta: float, phi: float, lam: float
) -> float:
    if layout.n_spin != state.n_spin:
        raise ValueError("layout does not match the state")
    rho = choi_matrix(state, blocked_regions(layout, theta, phi, lam))
    u = (
        rotation_gate("x", theta, spin="half")
        @ rotation_gate("y", phi, spin="half")
        @ rotation_gate("z", lam, spin="half")
    )
    return fidelity_from_rho(rho, u)
