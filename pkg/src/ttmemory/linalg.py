"""Dense complex linear algebra and Hilbert-space bookkeeping.

Everything downstream (propagators, channels, transfer tensors) is built on
the handful of primitives collected here: Kronecker products, partial traces
over a labelled tensor-product layout, Hermitian eigendecompositions, matrix
exponentials and matrix norms.  All functions are pure and operate on plain
``numpy.ndarray`` objects with ``complex128`` entries.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "DimensionLayout",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "kron",
    "kron_all",
    "partial_trace",
    "hermitian_eigh",
    "matrix_exponential",
    "frobenius_norm",
    "spectral_norm",
    "matrix_norm",
    "psd_sqrt",
    "is_hermitian",
]

# Pauli matrices in the standard basis (index 0 carries sigma_z eigenvalue +1).
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class DimensionLayout:
    """Ordered subsystem dimensions of a tensor-product Hilbert space.

    The first entry is the open system, the remaining entries follow the
    Kronecker-product order used to build composite operators.
    """

    dims: tuple[int, ...]

    def __post_init__(self):
        if not self.dims or any(d < 1 for d in self.dims):
            raise ValueError(f"subsystem dimensions must be positive, got {self.dims}")

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def num_subsystems(self) -> int:
        return len(self.dims)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with (A ⊗ B)[i·rB+k, j·cB+l] = A[i,j]·B[k,l]."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_all(ops) -> np.ndarray:
    """Kronecker product of a sequence of operators, left to right."""
    ops = list(ops)
    if not ops:
        raise ValueError("kron_all needs at least one operator")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def partial_trace(rho: np.ndarray, layout: DimensionLayout, keep) -> np.ndarray:
    """Trace out all subsystems not listed in ``keep``.

    ``keep`` is an iterable of subsystem indices into ``layout.dims``; the
    result lives on the kept subsystems in their original order and has the
    same trace as the input.
    """
    rho = np.asarray(rho, dtype=complex)
    dims = layout.dims
    n = len(dims)
    if rho.shape != (layout.total_dim, layout.total_dim):
        raise ValueError(
            f"state has shape {rho.shape}, layout expects {layout.total_dim}"
        )
    keep = sorted(set(int(i) for i in keep))
    if any(i < 0 or i >= n for i in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} subsystems")

    work = rho.reshape(dims + dims)
    # Trace out discarded subsystems from the right so axis indices stay valid.
    removed = 0
    for i in range(n - 1, -1, -1):
        if i in keep:
            continue
        m = work.ndim // 2
        work = np.trace(work, axis1=i, axis2=i + m)
        removed += 1
    d_keep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return work.reshape(d_keep, d_keep)


def is_hermitian(a: np.ndarray, tol: float = 1e-10) -> bool:
    """Check ||A - A†||_F <= tol · max(1, ||A||_F)."""
    a = np.asarray(a)
    return float(np.linalg.norm(a - a.conj().T)) <= tol * max(1.0, float(np.linalg.norm(a)))


def hermitian_eigh(a: np.ndarray, tol: float = 1e-10):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    A = V diag(w) V†.  Raises ``ValueError`` if the input fails the
    Hermiticity check at tolerance ``tol``.
    """
    a = np.asarray(a, dtype=complex)
    if not is_hermitian(a, tol):
        raise ValueError("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(a)
    return w, v


def matrix_exponential(a: np.ndarray, herm_tol: float = 1e-10) -> np.ndarray:
    """Matrix exponential exp(A).

    Skew-Hermitian and Hermitian inputs (the generators that occur here,
    A = -i t H) go through a spectral decomposition; anything else falls back
    to scaling-and-squaring via ``scipy.linalg.expm``.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape[0] != a.shape[1]:
        raise ValueError("matrix_exponential requires a square matrix")
    scale = max(1.0, float(np.linalg.norm(a)))
    if np.linalg.norm(a + a.conj().T) <= herm_tol * scale:
        # A = -iK with K Hermitian
        w, v = np.linalg.eigh(1j * a)
        return (v * np.exp(-1j * w)) @ v.conj().T
    if np.linalg.norm(a - a.conj().T) <= herm_tol * scale:
        w, v = np.linalg.eigh(a)
        return (v * np.exp(w)) @ v.conj().T
    return scipy.linalg.expm(a)


def frobenius_norm(a: np.ndarray) -> float:
    """sqrt(sum |a_ij|^2), the Hilbert-Schmidt norm."""
    return float(np.linalg.norm(np.asarray(a)))


def spectral_norm(a: np.ndarray) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(np.asarray(a), 2))


def matrix_norm(a: np.ndarray, kind: str = "frobenius") -> float:
    """Dispatch between the supported matrix norms ("frobenius" | "spectral")."""
    if kind == "frobenius":
        return frobenius_norm(a)
    if kind == "spectral":
        return spectral_norm(a)
    raise ValueError(f"unknown norm {kind!r}")


def psd_sqrt(a: np.ndarray, clip_tol: float = 1e-14) -> np.ndarray:
    """Positive square root of a PSD Hermitian matrix.

    Eigenvalues above -clip_tol are clipped to zero before the square root;
    more negative ones raise.
    """
    w, v = hermitian_eigh(a)
    if w.min() < -clip_tol * max(1.0, float(w.max(initial=0.0))):
        raise ValueError(f"matrix is not PSD (min eigenvalue {w.min():g})")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


_EIGH_CACHE: dict[str, tuple[np.ndarray, np.ndarray]] = {}
_EIGH_CACHE_MAX = 8


def cached_eigh(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition memoised on the matrix content.

    One O(d^3) factorisation per distinct Hamiltonian; repeat calls hash the
    entries (O(d^2)) and reuse the stored pair.  The cache is bounded and
    write-once per key, so concurrent readers are safe.
    """
    h = np.ascontiguousarray(h, dtype=complex)
    key = hashlib.sha1(h.tobytes()).hexdigest()
    hit = _EIGH_CACHE.get(key)
    if hit is None:
        if len(_EIGH_CACHE) >= _EIGH_CACHE_MAX:
            _EIGH_CACHE.clear()
        hit = hermitian_eigh(h)
        _EIGH_CACHE[key] = hit
    return hit
