"""Spin operators, rotations, parity gates, and the site measurement bases.

Conventions used throughout the package:

* spin-1 basis order is (m=+1, m=0, m=-1), so ``Sz = diag(1, 0, -1)``,
* qubit basis is (|0>, |1>) with ``Z|0> = +|0>``,
* ``rotation_gate(axis, angle, spin="half")`` is the qubit gate
  ``exp(-i angle sigma_axis / 2)``; with ``spin="one"`` it is the spin-1
  rotation ``exp(-i angle S_axis)``,
* the measurement basis of a site consists of the three m=0 eigenvectors of
  Sx, Sy, Sz, labeled by their axis.  Rotating it by the *half* angle about
  one axis makes the teleported logical gate the qubit rotation by the full
  angle about that axis, which is why :func:`measurement_basis` applies
  ``exp(-i (angle/2) S_axis)`` to the vectors.

No matrix exponentials: spin-1 rotations use the exact polynomial
``I - i sin(a) S + (cos(a) - 1) S^2`` (valid because ``S^3 = S`` for spin 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "AXES",
    "MeasurementBasis",
    "measurement_basis",
    "parity_op",
    "pauli",
    "rotation_gate",
    "spin1_matrices",
    "spin_half_matrices",
]

#: Canonical axis order used for measurement outcomes and string labels.
AXES = ("x", "y", "z")

_SQ2 = np.sqrt(2.0)

_PAULI = {
    "i": np.eye(2, dtype=np.complex128),
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}

_SX = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=np.complex128) / _SQ2
_SY = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=np.complex128) / _SQ2
_SZ = np.diag([1.0, 0.0, -1.0]).astype(np.complex128)
_SPIN1 = {"x": _SX, "y": _SY, "z": _SZ}

# m=0 eigenvectors of Sx, Sy, and Sz in the (+1, 0, -1) basis; global phases
# are irrelevant (only projectors onto these vectors ever appear).
_BASE_VECTOR = {
    "x": np.array([-1.0, 0.0, 1.0], dtype=np.complex128) / _SQ2,
    "y": np.array([1.0, 0.0, 1.0], dtype=np.complex128) / _SQ2,
    "z": np.array([0.0, 1.0, 0.0], dtype=np.complex128),
}


class Spin1(NamedTuple):
    x: NDArray[np.complex128]
    y: NDArray[np.complex128]
    z: NDArray[np.complex128]


def pauli(axis: str) -> NDArray[np.complex128]:
    """Pauli matrix for ``axis`` in ("i", "x", "y", "z")."""
    try:
        return _PAULI[axis].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


def spin1_matrices() -> Spin1:
    """The spin-1 operators (Sx, Sy, Sz) in the (m=+1, 0, -1) basis."""
    return Spin1(_SX.copy(), _SY.copy(), _SZ.copy())


def spin_half_matrices() -> Spin1:
    """The spin-1/2 operators (sigma/2), same axis order as spin1_matrices."""
    return Spin1(*(0.5 * _PAULI[a] for a in AXES))


def parity_op(axis: str, spin: str = "one") -> NDArray[np.complex128]:
    """The pi-rotation ``exp(-i pi S_axis)`` for spin "one" or "half".

    For spin 1 this equals ``I - 2 S_axis^2`` exactly (eigenvalue +1 on the
    m=0 state of the axis, -1 on the other two); for spin 1/2 it is
    ``-i sigma_axis``.
    """
    if axis not in AXES:
        raise ValueError(f"unknown axis {axis!r}")
    if spin == "one":
        s = _SPIN1[axis]
        return np.eye(3, dtype=np.complex128) - 2.0 * (s @ s)
    if spin == "half":
        return -1j * _PAULI[axis]
    raise ValueError(f"spin must be 'one' or 'half', got {spin!r}")


def rotation_gate(axis: str, angle: float, spin: str = "half") -> NDArray[np.complex128]:
    """Rotation about ``axis`` by ``angle``.

    ``spin="half"`` gives the qubit gate ``exp(-i angle sigma_axis / 2)``;
    ``spin="one"`` the spin-1 rotation ``exp(-i angle S_axis)``.
    """
    if axis not in AXES:
        raise ValueError(f"unknown axis {axis!r}")
    if spin == "half":
        half = 0.5 * angle
        return np.cos(half) * _PAULI["i"] - 1j * np.sin(half) * _PAULI[axis]
    if spin == "one":
        s = _SPIN1[axis]
        eye = np.eye(3, dtype=np.complex128)
        return eye - 1j * np.sin(angle) * s + (np.cos(angle) - 1.0) * (s @ s)
    raise ValueError(f"spin must be 'one' or 'half', got {spin!r}")


@dataclass(frozen=True)
class MeasurementBasis:
    """Single-site measurement basis, possibly rotated about one axis.

    Attributes:
        rotation_axis: Axis of the applied half-angle rotation.
        angle: Logical rotation angle realized on success.
        vectors: Outcome label ("x", "y", "z") to normalized basis vector.
        failure_axis: Label of the outcome that aborts the rotation attempt;
            always equal to ``rotation_axis`` since that vector is invariant
            under the rotation.
    """

    rotation_axis: str
    angle: float
    vectors: dict[str, NDArray[np.complex128]]
    failure_axis: str

    def projector(self, outcome: str) -> NDArray[np.complex128]:
        """Rank-1 projector onto the given outcome's basis vector."""
        v = self.vectors[outcome]
        return np.outer(v, v.conj())


def measurement_basis(rotation_axis: str, angle: float) -> MeasurementBasis:
    """Measurement basis rotated by ``exp(-i (angle/2) S_rotation_axis)``.

    At ``angle = 0`` the vectors are the m=0 eigenstates of Sx, Sy, Sz.  The
    vector of the rotation axis itself is left unchanged by the rotation and
    is the failure outcome of a teleported-rotation attempt about that axis.
    """
    if rotation_axis not in AXES:
        raise ValueError(f"unknown axis {rotation_axis!r}")
    rot = rotation_gate(rotation_axis, 0.5 * angle, spin="one")
    vectors = {t: rot @ _BASE_VECTOR[t] for t in AXES}
    return MeasurementBasis(
        rotation_axis=rotation_axis,
        angle=float(angle),
        vectors=vectors,
        failure_axis=rotation_axis,
    )
