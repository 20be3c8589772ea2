"""Dense linear algebra for small labelled quantum systems.

States carry an explicit, ordered tuple of basis labels so that tensor
factors and serialised amplitudes are unambiguous; operators and density
matrices are plain complex ndarrays.  Everything is pure and immutable,
so callers may evaluate in parallel without coordination.  Dimensions
stay in the tens to hundreds, which is why dense storage is used
throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MAX_TENSOR_DIM",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "StateVector",
    "basis_state",
    "tensor_product",
    "expm",
    "evolve",
    "partial_trace",
    "fidelity",
    "purity",
    "concurrence",
]

# Guard against runaway Kronecker products; protocol spaces are tiny.
MAX_TENSOR_DIM = 1 << 16

# Cap on fixed-step integration; beyond this the requested step is a bug.
MAX_INTEGRATION_STEPS = 5_000_000

HERMITICITY_ATOL = 1e-12

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)

_SIGMA_YY = np.kron(PAULI_Y, PAULI_Y)


def _square_matrix(m, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    return arr


def _require_hermitian(h: np.ndarray, name: str = "operator") -> None:
    deviation = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    if deviation > HERMITICITY_ATOL:
        raise ValueError(
            f"{name} is not Hermitian (max |H - H^dag| = {deviation:.3e})"
        )


@dataclass(frozen=True)
class StateVector:
    """Pure state over an ordered, labelled basis.

    ``labels[i]`` names the basis vector whose amplitude is ``amps[i]``.
    Labels are tuples; tensor products concatenate them, with the first
    factor varying slowest.  Amplitudes are stored read-only and are never
    renormalised behind the caller's back.
    """

    labels: tuple
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=np.complex128)
        labels = tuple(self.labels)
        if amps.ndim != 1:
            raise ValueError("amplitudes must form a 1-d array")
        if len(labels) != amps.size:
            raise ValueError(
                f"{len(labels)} labels for {amps.size} amplitudes"
            )
        if len(set(labels)) != len(labels):
            raise ValueError("basis labels must be unique")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def index(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"label {label!r} not in basis") from None

    def amplitude(self, label) -> complex:
        return complex(self.amps[self.index(label)])

    def probability(self, label) -> float:
        return float(abs(self.amps[self.index(label)]) ** 2)

    def overlap(self, other: "StateVector") -> complex:
        """Inner product <self|other>; bases must match exactly."""
        if self.labels != other.labels:
            raise ValueError("states are expressed in different bases")
        return complex(np.vdot(self.amps, other.amps))

    def normalized(self) -> "StateVector":
        nrm = self.norm
        if nrm == 0.0:
            raise ValueError("cannot normalise the zero vector")
        return StateVector(self.labels, self.amps / nrm)

    def density(self) -> np.ndarray:
        """Outer product |psi><psi| as a dense matrix."""
        return np.outer(self.amps, self.amps.conj())


def basis_state(labels, label) -> StateVector:
    """Computational basis vector with amplitude 1 on ``label``."""
    labels = tuple(labels)
    amps = np.zeros(len(labels), dtype=np.complex128)
    amps[labels.index(label)] = 1.0
    return StateVector(labels, amps)


def tensor_product(a, b):
    """Kronecker product of two states or two operators.

    The first factor varies slowest: for states the combined label is the
    concatenation of the factor labels, for operators the result is the
    plain Kronecker product of matrices.
    """
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        dim = a.dim * b.dim
        if dim > MAX_TENSOR_DIM:
            raise ValueError(
                f"tensor product dimension {dim} exceeds limit {MAX_TENSOR_DIM}"
            )
        labels = tuple(la + lb for la in a.labels for lb in b.labels)
        return StateVector(labels, np.kron(a.amps, b.amps))
    if isinstance(a, StateVector) or isinstance(b, StateVector):
        raise TypeError("cannot mix a state with an operator in tensor_product")
    ma = _square_matrix(a, "left operand")
    mb = _square_matrix(b, "right operand")
    dim = ma.shape[0] * mb.shape[0]
    if dim > MAX_TENSOR_DIM:
        raise ValueError(
            f"tensor product dimension {dim} exceeds limit {MAX_TENSOR_DIM}"
        )
    return np.kron(ma, mb)


def expm(a) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring.

    The argument is scaled by a power of two until its 1-norm is at most
    one half, the exponential of the scaled matrix is summed as a Taylor
    series to machine precision, and the result is squared back up.
    """
    a = _square_matrix(a, "exponent")
    n = a.shape[0]
    norm = float(np.linalg.norm(a, 1)) if a.size else 0.0
    squarings = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    b = a / (2.0**squarings)
    out = np.eye(n, dtype=np.complex128)
    term = np.eye(n, dtype=np.complex128)
    for k in range(1, 40):
        term = term @ b / k
        out = out + term
        if np.max(np.abs(term)) <= 1e-18 * max(1.0, float(np.max(np.abs(out)))):
            break
    for _ in range(squarings):
        out = out @ out
    return out


def _integrate_rk4(h: np.ndarray, amps: np.ndarray, t: float, step: float | None) -> np.ndarray:
    if t == 0.0:
        return amps.copy()
    hmax = float(np.max(np.abs(h)))
    if step is None:
        # Default step keeps step * max|H| at 0.01.
        step = 0.01 / hmax if hmax > 0.0 else abs(t)
    if step <= 0.0:
        raise ValueError("integration step must be positive")
    nsteps = max(1, int(math.ceil(abs(t) / step)))
    if nsteps > MAX_INTEGRATION_STEPS:
        raise ValueError(
            f"integration would take {nsteps} steps (limit {MAX_INTEGRATION_STEPS});"
            " increase the step or use the matrix-exponential path"
        )
    dt = t / nsteps
    y = amps.astype(np.complex128)
    for _ in range(nsteps):
        k1 = -1j * (h @ y)
        k2 = -1j * (h @ (y + 0.5 * dt * k1))
        k3 = -1j * (h @ (y + 0.5 * dt * k2))
        k4 = -1j * (h @ (y + dt * k3))
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def evolve(h, psi: StateVector, t: float, method: str = "expm", step: float | None = None) -> StateVector:
    """Propagate ``psi`` under Hermitian ``h`` for time ``t`` (hbar = 1).

    Two independent routes are provided so they can cross-check each other:
    ``"expm"`` applies exp(-i h t) built by :func:`expm` (the reference
    path), ``"rk4"`` integrates the Schroedinger equation with a classic
    fixed-step fourth-order scheme.
    """
    h = _square_matrix(h, "Hamiltonian")
    _require_hermitian(h, "Hamiltonian")
    if h.shape[0] != psi.dim:
        raise ValueError(
            f"Hamiltonian dimension {h.shape[0]} does not match state dimension {psi.dim}"
        )
    if method == "expm":
        out = expm(-1j * t * h) @ psi.amps
    elif method == "rk4":
        out = _integrate_rk4(h, psi.amps, t, step)
    else:
        raise ValueError(f"unknown evolution method {method!r}")
    return StateVector(psi.labels, out)


def partial_trace(rho, dims, keep) -> np.ndarray:
    """Reduced density matrix over the factors listed in ``keep``.

    ``dims`` gives the dimension of each tensor factor (first factor
    varies slowest); all factors not in ``keep`` are traced out.  The
    kept factors retain their original relative order.
    """
    dims = tuple(int(d) for d in dims)
    if any(d <= 0 for d in dims):
        raise ValueError("factor dimensions must be positive")
    rho = _square_matrix(rho, "density matrix")
    total = math.prod(dims)
    if rho.shape[0] != total:
        raise ValueError(
            f"cannot factor a {rho.shape[0]}-dimensional matrix into {dims}"
        )
    if isinstance(keep, int):
        keep = (keep,)
    keep = tuple(sorted(set(int(k) for k in keep)))
    if not keep or any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} factors")
    nfac = len(dims)
    work = rho.reshape(dims + dims)
    removed = 0
    for ax in sorted((i for i in range(nfac) if i not in keep), reverse=True):
        work = np.trace(work, axis1=ax, axis2=ax + nfac - removed)
        removed += 1
    kept_dim = math.prod(dims[k] for k in keep)
    return work.reshape(kept_dim, kept_dim)


def fidelity(rho, target: StateVector | np.ndarray) -> float:
    """Overlap <target|rho|target> of a density matrix with a pure state."""
    rho = _square_matrix(rho, "density matrix")
    vec = target.amps if isinstance(target, StateVector) else np.asarray(target, dtype=np.complex128)
    if vec.ndim != 1 or vec.size != rho.shape[0]:
        raise ValueError(
            f"target dimension {vec.size} does not match density matrix dimension {rho.shape[0]}"
        )
    value = complex(np.vdot(vec, rho @ vec))
    if abs(value.imag) > 1e-12:
        raise ValueError(f"fidelity came out non-real ({value.imag:.3e}); rho is malformed")
    return float(min(1.0, max(0.0, value.real)))


def purity(rho) -> float:
    """Tr(rho^2); 1 for pure states."""
    rho = _square_matrix(rho, "density matrix")
    return float(np.trace(rho @ rho).real)


def concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    Square roots of the eigenvalues of rho (sy x sy) rho* (sy x sy) are
    sorted in decreasing order; the concurrence is the largest minus the
    rest, floored at zero.
    """
    rho = _square_matrix(rho, "density matrix")
    if rho.shape[0] != 4:
        raise ValueError("concurrence is defined for 4-dimensional (two-qubit) states")
    _require_hermitian(rho, "density matrix")
    eigmin = float(np.min(np.linalg.eigvalsh(rho)))
    if eigmin < -1e-7:
        raise ValueError(f"density matrix has negative eigenvalue {eigmin:.3e}")
    flipped = _SIGMA_YY @ rho.conj() @ _SIGMA_YY
    lam = np.sqrt(np.clip(np.linalg.eigvals(rho @ flipped).real, 0.0, None))
    lam = np.sort(lam)[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))
