"""Open-boundary matrix product states with mixed physical dimensions.

A chain here is always qubit + L spin-1 sites + qubit: the two boundary
qubits are physical sites of the state, not virtual indices, so the chain
layout is ``[2, 3, 3, ..., 3, 2]``.  Site tensors are indexed
``(phys, left_bond, right_bond)`` with dummy dimension-1 bonds at the ends.

:func:`aklt_mps` builds the exact bond-dimension-2 valence-bond ground state
of the boundary-coupled AKLT chain, already unit-normalized.  The remaining
functions are the standard toolbox: canonicalization, overlaps, one-site
operator-string expectation values in a single transfer sweep, dense
conversion both ways, and a small versioned binary serialization format.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

from .linalg import svd_truncate

__all__ = [
    "Mps",
    "aklt_mps",
    "canonicalize",
    "expect_string",
    "from_dense",
    "inner",
    "load_mps",
    "norm",
    "save_mps",
    "to_dense",
]

#: Largest dense Hilbert space to_dense will materialize: 4 * 3**8.
DENSE_CAP = 4 * 3**8

_MAGIC = b"HMPS"
_FORMAT_VERSION = 1


@dataclass
class Mps:
    """Matrix product state over an open chain.

    Attributes:
        tensors: One ``(phys, left, right)`` tensor per site; the first left
            and last right bond dimensions are 1.
        center: Site index the state is canonical about, or ``None`` when no
            canonical form is guaranteed.
    """

    tensors: list[NDArray] = field(default_factory=list)
    center: int | None = None

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def phys_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[0] for t in self.tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        """Bond dimensions between sites (length ``n_sites - 1``)."""
        return tuple(t.shape[2] for t in self.tensors[:-1])

    def copy(self) -> "Mps":
        return Mps([t.copy() for t in self.tensors], self.center)

    def __post_init__(self) -> None:
        for i, t in enumerate(self.tensors):
            if t.ndim != 3:
                raise ValueError(f"site {i}: tensor must be rank 3, got {t.ndim}")
        for i in range(len(self.tensors) - 1):
            if self.tensors[i].shape[2] != self.tensors[i + 1].shape[1]:
                raise ValueError(f"bond mismatch between sites {i} and {i + 1}")


def aklt_mps(L: int) -> Mps:
    """Exact valence-bond resource state on qubit + L spin-1 sites + qubit.

    Bond dimension 2 everywhere, unit norm by construction.  The spin-1 site
    matrices are ``B_+ = -sqrt(2/3) sigma_plus``, ``B_0 = Z / sqrt(3)``,
    ``B_- = +sqrt(2/3) sigma_minus`` and the in-qubit tensor is the singlet
    matrix ``XZ / sqrt(2)``, which makes each boundary qubit pair into a
    singlet with the nearest virtual spin-1/2.
    """
    if L < 1:
        raise ValueError(f"need at least one spin-1 site, got L={L}")
    lam = np.array([[0.0, -1.0], [1.0, 0.0]]) / np.sqrt(2.0)
    b = np.zeros((3, 2, 2))
    b[0] = np.array([[0.0, -1.0], [0.0, 0.0]]) * np.sqrt(2.0 / 3.0)  # m = +1
    b[1] = np.diag([1.0, -1.0]) / np.sqrt(3.0)  # m = 0
    b[2] = np.array([[0.0, 0.0], [1.0, 0.0]]) * np.sqrt(2.0 / 3.0)  # m = -1

    t_in = lam.reshape(2, 1, 2)
    t_out = np.eye(2).reshape(2, 2, 1)
    tensors = [t_in] + [b.copy() for _ in range(L)] + [t_out]
    return Mps(tensors)


def _transfer(env: NDArray, bra: NDArray, ket: NDArray, op: NDArray | None) -> NDArray:
    """One transfer step: env[a, b] -> env'[c, d] through a site.

    ``a, c`` are bra bonds, ``b, d`` ket bonds; ``op`` is an optional one-site
    operator sandwiched as <bra| op |ket>.
    """
    if op is None:
        tmp = np.tensordot(env, bra.conj(), axes=([0], [1]))  # b, s, c
        return np.tensordot(tmp, ket, axes=([0, 1], [1, 0]))  # c, d
    tmp = np.tensordot(env, bra.conj(), axes=([0], [1]))  # b, s, c
    tmp = np.tensordot(tmp, op, axes=([1], [0]))  # b, c, s'
    return np.tensordot(tmp, ket, axes=([2, 0], [0, 1]))  # c, d


def inner(a: Mps, b: Mps) -> complex:
    """Overlap <a|b> (a enters as the bra)."""
    if a.phys_dims != b.phys_dims:
        raise ValueError("states live on different chains")
    env = np.ones((1, 1))
    for ta, tb in zip(a.tensors, b.tensors):
        env = _transfer(env, ta, tb, None)
    return complex(env[0, 0])


def norm(state: Mps) -> float:
    """Two-norm of the state."""
    return float(np.sqrt(abs(inner(state, state))))


def expect_string(
    state: Mps,
    op: Sequence[NDArray | None] | Mapping[int, NDArray],
) -> complex:
    """Expectation value of a product of one-site operators.

    ``op`` is either a sequence with one entry per site (``None`` meaning
    identity) or a mapping from site index to operator.  The contraction is a
    single left-to-right transfer sweep, O(n_sites * chi^3).

    The state is not required to be normalized; the raw sandwich
    ``<psi| prod op |psi>`` is returned.
    """
    n = state.n_sites
    if isinstance(op, Mapping):
        ops: list[NDArray | None] = [None] * n
        for site, matrix in op.items():
            if not 0 <= site < n:
                raise ValueError(f"operator site {site} outside chain of {n}")
            ops[site] = matrix
    else:
        ops = list(op)
        if len(ops) != n:
            raise ValueError(f"need {n} entries, got {len(ops)}")

    env = np.ones((1, 1))
    for t, o in zip(state.tensors, ops):
        env = _transfer(env, t, t, o)
    return complex(env[0, 0])


def canonicalize(state: Mps, center: int) -> Mps:
    """Return the same state in mixed-canonical form about ``center``.

    Sites left of the center become left isometries, sites right of it right
    isometries; norm and state are unchanged (QR based, no truncation).
    """
    n = state.n_sites
    if not 0 <= center < n:
        raise ValueError(f"center {center} outside chain of {n} sites")
    tensors = [t.astype(np.result_type(t.dtype, np.float64), copy=True) for t in state.tensors]

    for i in range(center):
        d, dl, dr = tensors[i].shape
        q, r = np.linalg.qr(tensors[i].reshape(d * dl, dr))
        # The rank can only drop here, never grow.
        k = q.shape[1]
        tensors[i] = q.reshape(d, dl, k)
        tensors[i + 1] = np.tensordot(r, tensors[i + 1], axes=([1], [1])).transpose(1, 0, 2)

    for i in range(n - 1, center, -1):
        d, dl, dr = tensors[i].shape
        m = tensors[i].transpose(1, 0, 2).reshape(dl, d * dr)
        q, r = np.linalg.qr(m.conj().T)
        k = q.shape[1]
        tensors[i] = q.conj().T.reshape(k, d, dr).transpose(1, 0, 2)
        tensors[i - 1] = np.tensordot(tensors[i - 1], r.conj().T, axes=([2], [0]))

    return Mps(tensors, center)


def to_dense(state: Mps) -> NDArray:
    """Full state vector, physical indices in site order.

    Refuses chains whose total dimension exceeds ``DENSE_CAP`` (4 * 3**8).
    """
    total = 1
    for d in state.phys_dims:
        total *= d
    if total > DENSE_CAP:
        raise ValueError(f"dense dimension {total} exceeds cap {DENSE_CAP}")
    acc = np.ones((1, 1))
    for t in state.tensors:
        acc = np.tensordot(acc, t, axes=([1], [1]))  # (k, s, r)
        k, s, r = acc.shape
        acc = acc.reshape(k * s, r)
    return acc.reshape(-1)


def from_dense(
    vec: NDArray,
    phys_dims: Sequence[int],
    max_bond: int | None = None,
    cutoff: float = 0.0,
) -> Mps:
    """Decompose a dense state vector into an MPS by successive SVDs.

    Exact (up to float round-off) when ``max_bond`` is ``None`` and
    ``cutoff = 0``; otherwise truncated with :func:`~.linalg.svd_truncate`
    semantics at every bond.
    """
    dims = tuple(int(d) for d in phys_dims)
    total = 1
    for d in dims:
        total *= d
    v = np.asarray(vec).reshape(-1)
    if v.size != total:
        raise ValueError(f"vector of size {v.size} does not match dims {dims}")

    tensors: list[NDArray] = []
    rest = v.reshape(1, total)
    chi = 1
    for i, d in enumerate(dims[:-1]):
        m = rest.reshape(chi * d, -1)
        res = svd_truncate(m, max_rank=max_bond, cutoff=cutoff)
        k = res.singular_values.size
        tensors.append(res.left_isometry.reshape(chi, d, k).transpose(1, 0, 2))
        rest = res.singular_values[:, None] * res.right_isometry
        chi = k
    tensors.append(rest.reshape(chi, dims[-1], 1).transpose(1, 0, 2))
    return Mps(tensors, center=len(dims) - 1)


def save_mps(state: Mps, path: str) -> None:
    """Write the state to ``path`` in the package's binary container.

    Layout: magic ``HMPS``, format version, canonical center (-1 for none),
    site count, per-site shapes, then each tensor's complex components as
    little-endian 8-byte float pairs.
    """
    with open(path, "wb") as fh:
        center = -1 if state.center is None else state.center
        fh.write(_MAGIC)
        fh.write(struct.pack("<IiI", _FORMAT_VERSION, center, state.n_sites))
        for t in state.tensors:
            fh.write(struct.pack("<III", *t.shape))
        for t in state.tensors:
            fh.write(np.ascontiguousarray(t, dtype="<c16").tobytes())


def load_mps(path: str) -> Mps:
    """Read a state written by :func:`save_mps`.

    Tensors with exactly zero imaginary part are returned as float64 so a
    purely real state round-trips to real arithmetic.
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"not an MPS container: bad magic {magic!r}")
        version, center, n_sites = struct.unpack("<IiI", fh.read(12))
        if version != _FORMAT_VERSION:
            raise ValueError(f"unsupported MPS container version {version}")
        shapes = [struct.unpack("<III", fh.read(12)) for _ in range(n_sites)]
        tensors = []
        for shape in shapes:
            count = shape[0] * shape[1] * shape[2]
            buf = fh.read(16 * count)
            if len(buf) != 16 * count:
                raise ValueError("truncated MPS container")
            t = np.frombuffer(buf, dtype="<c16").astype(np.complex128).reshape(shape)
            if np.all(t.imag == 0.0):
                t = t.real.copy()
            tensors.append(t)
    return Mps(tensors, None if center < 0 else center)
