"""Boundary-coupled spin-1 chain Hamiltonians and their MPO form.

Every chain carries a physical qubit on each end, exchange-coupled to the
nearest spin-1 site, so the resource state is the unique gapped ground state
of the full qubit + chain + qubit problem.  Four families are supported:

* :class:`Aklt` - bilinear + 1/3 biquadratic bulk, plain exchange at the ends,
* :class:`Blbq` - same with a free biquadratic weight ``alpha``,
* :class:`Xxz`  - exchange with Ising weight ``J`` on the z components plus a
  single-ion term ``D (S_z)^2`` on every spin-1 site,
* :class:`Blocked` - three XXZ-like blocks whose anisotropy axes are z, y, x
  respectively, separated by two isotropic junction stretches; this is the
  geometry used for teleporting an arbitrary single-qubit rotation.

Hamiltonians are defined as lists of one-site and nearest-neighbor terms
(:func:`local_terms`); :func:`build_mpo` compiles that list into a
finite-state-machine MPO with no compression, exact to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .linalg import svd_truncate
from .mps import Mps
from .spin_ops import AXES, spin1_matrices, spin_half_matrices

__all__ = [
    "Aklt",
    "Blbq",
    "BlockedLayout",
    "Blocked",
    "HamiltonianSpec",
    "Mpo",
    "Term",
    "Xxz",
    "apply_mpo",
    "blocked_layout",
    "build_mpo",
    "dense_hamiltonian",
    "expect_mpo",
    "local_terms",
    "mpo_to_dense",
    "n_spin_sites",
]

#: Anisotropy axis of each measurement block.
BLOCK_AXIS = {"A": "z", "B": "y", "C": "x"}

_DENSE_H_CAP = 4 * 3**6  # largest dimension dense_hamiltonian will build


def _check_length(length: int) -> None:
    if length < 1:
        raise ValueError(f"need at least one spin-1 site, got L={length}")


@dataclass(frozen=True)
class Aklt:
    """AKLT chain: bulk bonds S.S + (1/3)(S.S)^2, exchange-coupled end qubits."""

    L: int

    def __post_init__(self) -> None:
        _check_length(self.L)


@dataclass(frozen=True)
class Blbq:
    """Bilinear-biquadratic chain, bulk bonds S.S + alpha (S.S)^2."""

    L: int
    alpha: float

    def __post_init__(self) -> None:
        _check_length(self.L)


@dataclass(frozen=True)
class Xxz:
    """XXZ chain with single-ion anisotropy.

    Bonds are ``Sx Sx + Sy Sy + J Sz Sz`` (end bonds included); every spin-1
    site carries ``D (Sz)^2``.
    """

    L: int
    J: float
    D: float

    def __post_init__(self) -> None:
        _check_length(self.L)


@dataclass(frozen=True)
class Blocked:
    """Three-block chain for arbitrary-rotation teleportation.

    ``L`` is the total number of block sites (a multiple of 3, ``L//3`` per
    block) and ``N`` the number of sites in each of the two junctions.  Block
    A is z-anisotropic (J on ``Sz Sz`` bonds, ``D (Sz)^2`` on sites), block B
    y-anisotropic, block C x-anisotropic; junction bonds, including the bonds
    attaching a junction to its neighboring blocks, are isotropic Heisenberg.
    The in-qubit coupling carries J on the z component, the out-qubit
    coupling on the x component.
    """

    L: int
    N: int
    J: float
    D: float

    def __post_init__(self) -> None:
        if self.L < 3 or self.L % 3:
            raise ValueError(f"L must be a positive multiple of 3, got {self.L}")
        if self.N < 0:
            raise ValueError(f"N must be non-negative, got {self.N}")


HamiltonianSpec = Union[Aklt, Blbq, Xxz, Blocked]

#: One Hamiltonian term: chain-site indices, one operator per site, weight.
Term = tuple[tuple[int, ...], tuple[NDArray, ...], float]


@dataclass(frozen=True)
class BlockedLayout:
    """Site bookkeeping of a blocked chain (spin sites only, 0-based)."""

    n_block: int
    n_junction: int

    @property
    def n_spin(self) -> int:
        return 3 * self.n_block + 2 * self.n_junction

    def regions(self) -> tuple[str, ...]:
        """Region label per spin site: A, L (junction), B, R (junction), C."""
        n, nj = self.n_block, self.n_junction
        return tuple("A" * n + "L" * nj + "B" * n + "R" * nj + "C" * n)


def blocked_layout(spec: Blocked) -> BlockedLayout:
    return BlockedLayout(spec.L // 3, spec.N)


def n_spin_sites(spec: HamiltonianSpec) -> int:
    """Number of spin-1 sites of the chain described by ``spec``."""
    if isinstance(spec, Blocked):
        return spec.L + 2 * spec.N
    return spec.L


def _exchange(
    left: Sequence[NDArray], right: Sequence[NDArray], cx: float, cy: float, cz: float
) -> list[tuple[NDArray, NDArray, float]]:
    coeffs = (cx, cy, cz)
    return [(left[i], right[i], coeffs[i]) for i in range(3) if coeffs[i] != 0.0]


def _biquadratic(s: Sequence[NDArray], alpha: float) -> list[tuple[NDArray, NDArray, float]]:
    # (S_i . S_j)^2 = sum_ab (S^a S^b)_i (S^a S^b)_j since the two sites commute.
    out = []
    for a in range(3):
        for b in range(3):
            m = s[a] @ s[b]
            out.append((m, m, alpha))
    return out


def local_terms(spec: HamiltonianSpec) -> list[Term]:
    """Hamiltonian as one-site and nearest-neighbor terms on the full chain.

    Chain sites are 0 (in qubit), 1..M (spin-1), M+1 (out qubit) with M the
    value of :func:`n_spin_sites`.
    """
    s = spin1_matrices()
    q = spin_half_matrices()
    m = n_spin_sites(spec)
    terms: list[Term] = []

    def bond(i: int, pairs: Iterable[tuple[NDArray, NDArray, float]]) -> None:
        for a, b, c in pairs:
            if np.all(a.real == 0.0) and np.all(b.real == 0.0):
                # Both factors purely imaginary (odd number of Sy factors):
                # store i*a (x) i*b with flipped sign so the term, and with it
                # the whole MPO, is real.  Same operator, different factoring.
                a, b, c = (1j * a).real, (1j * b).real, -c
            terms.append(((i, i + 1), (a, b), float(c)))

    def onsite(i: int, op: NDArray, c: float) -> None:
        terms.append(((i,), (op,), float(c)))

    if isinstance(spec, (Aklt, Blbq)):
        alpha = spec.alpha if isinstance(spec, Blbq) else 1.0 / 3.0
        bond(0, _exchange(q, s, 1, 1, 1))
        for i in range(1, m):
            bond(i, _exchange(s, s, 1, 1, 1) + _biquadratic(s, alpha))
        bond(m, _exchange(s, q, 1, 1, 1))
        return terms

    if isinstance(spec, Xxz):
        j, d = spec.J, spec.D
        bond(0, _exchange(q, s, 1, 1, j))
        for i in range(1, m):
            bond(i, _exchange(s, s, 1, 1, j))
        bond(m, _exchange(s, q, 1, 1, j))
        sz2 = s.z @ s.z
        for i in range(1, m + 1):
            onsite(i, sz2, d)
        return terms

    if isinstance(spec, Blocked):
        j, d = spec.J, spec.D
        layout = blocked_layout(spec)
        regions = layout.regions()
        aniso = {"x": (j, 1, 1), "y": (1, j, 1), "z": (1, 1, j)}
        square = {a: s[i] @ s[i] for i, a in enumerate(AXES)}

        bond(0, _exchange(q, s, *aniso[BLOCK_AXIS["A"]]))
        for i in range(1, m):
            left_r, right_r = regions[i - 1], regions[i]
            if left_r == right_r and left_r in BLOCK_AXIS:
                bond(i, _exchange(s, s, *aniso[BLOCK_AXIS[left_r]]))
            else:
                # Junction bonds and block-junction boundary bonds: isotropic.
                bond(i, _exchange(s, s, 1, 1, 1))
        bond(m, _exchange(s, q, *aniso[BLOCK_AXIS["C"]]))
        if d != 0.0:
            for i in range(1, m + 1):
                r = regions[i - 1]
                if r in BLOCK_AXIS:
                    onsite(i, square[BLOCK_AXIS[r]], d)
        return terms

    raise TypeError(f"unknown Hamiltonian spec {type(spec).__name__}")


def chain_dims(spec: HamiltonianSpec) -> tuple[int, ...]:
    """Physical dimensions of the full chain, boundary qubits included."""
    return (2,) + (3,) * n_spin_sites(spec) + (2,)


@dataclass
class Mpo:
    """Matrix product operator; tensors indexed (wl, wr, bra, ket)."""

    tensors: list[NDArray]

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def phys_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[2] for t in self.tensors)


def build_mpo(spec: HamiltonianSpec) -> Mpo:
    """Compile the term list into an exact finite-state-machine MPO.

    Bond dimension between sites i and i+1 is 2 + (number of two-site terms
    on that bond); no compression is applied, so the MPO reproduces the dense
    Hamiltonian to round-off.
    """
    dims = chain_dims(spec)
    n = len(dims)
    bond_terms: list[list[tuple[NDArray, NDArray, float]]] = [[] for _ in range(n - 1)]
    site_terms: list[NDArray | None] = [None] * n
    for sites, ops, coeff in local_terms(spec):
        if len(sites) == 1:
            i = sites[0]
            acc = site_terms[i]
            site_terms[i] = coeff * ops[0] if acc is None else acc + coeff * ops[0]
        elif len(sites) == 2 and sites[1] == sites[0] + 1:
            bond_terms[sites[0]].append((ops[0], ops[1], coeff))
        else:
            raise ValueError(f"only one-site and nearest-neighbor terms supported: {sites}")

    tensors = []
    for i in range(n):
        d = dims[i]
        left = bond_terms[i - 1] if i > 0 else []
        right = bond_terms[i] if i < n - 1 else []
        dl, dr = 2 + len(left), 2 + len(right)
        w = np.zeros((dl, dr, d, d), dtype=np.complex128)
        eye = np.eye(d)
        w[0, 0] = eye
        w[dl - 1, dr - 1] = eye
        if site_terms[i] is not None:
            w[0, dr - 1] = site_terms[i]
        for a, (op_l, _, coeff) in enumerate(right):
            w[0, 1 + a] = coeff * op_l
        for b, (_, op_r, _) in enumerate(left):
            w[1 + b, dr - 1] = op_r
        if i == 0:
            w = w[0:1]
        if i == n - 1:
            w = w[:, dr - 1 : dr]
        if np.all(w.imag == 0.0):
            w = w.real.copy()
        tensors.append(w)
    return Mpo(tensors)


def mpo_to_dense(mpo: Mpo) -> NDArray:
    """Dense matrix of a small MPO (test helper, dimension capped)."""
    total = 1
    for d in mpo.phys_dims:
        total *= d
    if total > _DENSE_H_CAP:
        raise ValueError(f"dense dimension {total} exceeds cap {_DENSE_H_CAP}")
    acc = np.ones((1, 1, 1))  # (w, bra_so_far, ket_so_far)
    for w in mpo.tensors:
        acc = np.tensordot(acc, w, axes=([0], [0]))  # bra, ket, wr, s, s'
        b, k, wr, d = acc.shape[0], acc.shape[1], acc.shape[2], acc.shape[3]
        acc = acc.transpose(2, 0, 3, 1, 4).reshape(wr, b * d, k * d)
    return acc[0]


def dense_hamiltonian(spec: HamiltonianSpec) -> NDArray:
    """Dense Hamiltonian built directly from the term list by Kronecker sums.

    Independent of the MPO compiler; capped at dimension 2916 (qubits + six
    spin-1 sites).
    """
    dims = chain_dims(spec)
    total = 1
    for d in dims:
        total *= d
    if total > _DENSE_H_CAP:
        raise ValueError(f"dense dimension {total} exceeds cap {_DENSE_H_CAP}")
    h = np.zeros((total, total), dtype=np.complex128)
    for sites, ops, coeff in local_terms(spec):
        full = np.array([[coeff]])
        for i, d in enumerate(dims):
            if i in sites:
                full = np.kron(full, ops[sites.index(i)])
            else:
                full = np.kron(full, np.eye(d))
        h += full
    if np.all(h.imag == 0.0):
        h = h.real.copy()
    return h


def expect_mpo(state: Mps, mpo: Mpo) -> complex:
    """Sandwich ``<psi| W |psi>`` by a single sweep."""
    if state.n_sites != mpo.n_sites:
        raise ValueError("state and operator live on different chains")
    env = np.ones((1, 1, 1))  # (bra_bond, mpo_bond, ket_bond)
    for t, w in zip(state.tensors, mpo.tensors):
        tmp = np.tensordot(env, t.conj(), axes=([0], [1]))  # w, kb, s, bb'
        tmp = np.tensordot(tmp, w, axes=([0, 2], [0, 2]))  # kb, bb', wr, s'
        env = np.tensordot(tmp, t, axes=([3, 0], [0, 1]))  # bb', wr, kb'
    return complex(env[0, 0, 0])


def _mpo_times_mps(mpo: Mpo, state: Mps) -> Mps:
    """Exact (uncompressed) product W|psi> with bonds chi * D."""
    tensors = []
    for w, t in zip(mpo.tensors, state.tensors):
        # (wl, wr, s, s') x (s', a, b) -> (s, wl a, wr b)
        prod = np.tensordot(w, t, axes=([3], [0]))  # wl, wr, s, a, b
        wl, wr, d, a, b = prod.shape
        tensors.append(prod.transpose(2, 0, 3, 1, 4).reshape(d, wl * a, wr * b))
    return Mps(tensors)


def apply_mpo(
    mpo: Mpo,
    state: Mps,
    max_bond: int | None = None,
    cutoff: float = 1e-12,
    sweeps: int = 2,
) -> Mps:
    """Apply an MPO to a state and compress variationally.

    Starts from the exact product truncated bond by bond, then runs two-site
    alternating-least-squares sweeps that maximize the overlap with the exact
    product.  With ``max_bond=None`` and ``cutoff=0`` the result is the exact
    product in canonical form.
    """
    target = _mpo_times_mps(mpo, state)
    n = target.n_sites

    # Initial guess: canonicalize right-to-left, then truncate left-to-right.
    guess = _truncate_sweep(target, max_bond, cutoff)
    if sweeps <= 0 or (max_bond is None and cutoff == 0.0):
        return guess

    # Environments env[i]: overlap of guess (bra) with target (ket) left of i.
    left = [np.ones((1, 1))] * (n + 1)
    right = [np.ones((1, 1))] * (n + 1)
    for i in range(n - 1, 1, -1):
        right[i] = _overlap_step(right[i + 1], guess.tensors[i], target.tensors[i], side="right")

    for _ in range(sweeps):
        for i in range(n - 1):
            theta = np.tensordot(target.tensors[i], target.tensors[i + 1], axes=([2], [1]))
            theta = np.tensordot(left[i], theta, axes=([1], [1]))  # bl, s1, s2, br
            theta = np.tensordot(theta, right[i + 2], axes=([3], [1]))  # bl, s1, s2, bg
            bl, s1, s2, br = theta.shape
            res = svd_truncate(theta.reshape(bl * s1, s2 * br), max_bond, cutoff)
            k = res.singular_values.size
            guess.tensors[i] = res.left_isometry.reshape(bl, s1, k).transpose(1, 0, 2)
            rightpart = (res.singular_values[:, None] * res.right_isometry).reshape(k, s2, br)
            guess.tensors[i + 1] = rightpart.transpose(1, 0, 2)
            left[i + 1] = _overlap_step(left[i], guess.tensors[i], target.tensors[i], side="left")
        for i in range(n - 1, 0, -1):
            right[i + 1] = (
                np.ones((1, 1))
                if i == n - 1
                else _overlap_step(right[i + 2], guess.tensors[i + 1], target.tensors[i + 1], side="right")
            )
            theta = np.tensordot(target.tensors[i - 1], target.tensors[i], axes=([2], [1]))
            theta = np.tensordot(left[i - 1], theta, axes=([1], [1]))
            theta = np.tensordot(theta, right[i + 1], axes=([3], [1]))
            bl, s1, s2, br = theta.shape
            res = svd_truncate(theta.reshape(bl * s1, s2 * br), max_bond, cutoff)
            k = res.singular_values.size
            leftpart = (res.left_isometry * res.singular_values).reshape(bl, s1, k)
            guess.tensors[i - 1] = leftpart.transpose(1, 0, 2)
            guess.tensors[i] = res.right_isometry.reshape(k, s2, br).transpose(1, 0, 2)
    guess.center = None
    return guess


def _overlap_step(env: NDArray, bra_t: NDArray, ket_t: NDArray, side: str) -> NDArray:
    if side == "left":
        tmp = np.tensordot(env, bra_t.conj(), axes=([0], [1]))  # kb, s, bb'
        return np.tensordot(tmp, ket_t, axes=([0, 1], [1, 0]))  # bb', kb'
    tmp = np.tensordot(bra_t.conj(), env, axes=([2], [0]))  # s, bl, kb
    return np.tensordot(tmp, ket_t, axes=([0, 2], [0, 2]))  # bl, kl


def _truncate_sweep(state: Mps, max_bond: int | None, cutoff: float) -> Mps:
    """Right-canonicalize, then truncate left-to-right with svd_truncate."""
    n = state.n_sites
    tensors = [t.copy() for t in state.tensors]
    for i in range(n - 1, 0, -1):
        d, dl, dr = tensors[i].shape
        m = tensors[i].transpose(1, 0, 2).reshape(dl, d * dr)
        q, r = np.linalg.qr(m.conj().T)
        k = q.shape[1]
        tensors[i] = q.conj().T.reshape(k, d, dr).transpose(1, 0, 2)
        tensors[i - 1] = np.tensordot(tensors[i - 1], r.conj().T, axes=([2], [0]))
    for i in range(n - 1):
        d, dl, dr = tensors[i].shape
        res = svd_truncate(tensors[i].reshape(d * dl, dr), max_bond, cutoff)
        k = res.singular_values.size
        tensors[i] = res.left_isometry.reshape(d, dl, k)
        carry = res.singular_values[:, None] * res.right_isometry
        tensors[i + 1] = np.tensordot(carry, tensors[i + 1], axes=([1], [1])).transpose(1, 0, 2)
    return Mps(tensors, center=n - 1)
