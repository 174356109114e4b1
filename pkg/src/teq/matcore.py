"""
Dense complex-matrix primitives with explicit tolerances.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Every validator
takes a :class:`Tolerance`; when omitted the process-wide default is used,
which honours the ``TEQ_TOL`` environment variable.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg

ComplexMatrix = npt.NDArray[np.complex128]


class TeqError(Exception):
    """Base class for all library errors.

    ``code`` is a short machine-readable identifier used by the CLI.
    """

    code = "error"

    def __init__(self, message: str, code: Optional[str] = None, **details: Any):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.details = details


class DomainError(TeqError, ValueError):
    code = "domain_error"


class NumericError(TeqError, ArithmeticError):
    code = "numeric_failure"


@dataclass(frozen=True)
class Tolerance:
    validation_eps: float = 1e-9
    certificate_eps: float = 1e-7

    def __post_init__(self):
        if not (self.validation_eps > 0 and self.certificate_eps > 0):
            raise DomainError(
                f"tolerances must be strictly positive, got {self}", code="bad_tolerance"
            )

    @classmethod
    def from_env(cls) -> "Tolerance":
        raw = os.environ.get("TEQ_TOL")
        if not raw:
            return cls()
        try:
            return cls(validation_eps=float(raw))
        except ValueError as exc:
            raise DomainError(f"TEQ_TOL={raw!r} is not a number", code="bad_tolerance") from exc


def default_tolerance() -> Tolerance:
    return Tolerance.from_env()


def _tol(tol: Optional[Tolerance]) -> Tolerance:
    return default_tolerance() if tol is None else tol


@dataclass(frozen=True)
class SpectralData:
    """Result of :func:`eig` or :func:`svd`.

    Only the fields belonging to the decomposition that produced it are set.
    """

    eigenvalues: Optional[npt.NDArray[np.complex128]] = None
    eigenvectors: Optional[ComplexMatrix] = None
    singular_values: Optional[npt.NDArray[np.float64]] = None
    left: Optional[ComplexMatrix] = None
    right: Optional[ComplexMatrix] = None

    @property
    def sigma_min(self) -> float:
        if self.singular_values is None or self.singular_values.size == 0:
            raise DomainError("no singular values available")
        return float(self.singular_values[-1])


def as_matrix(m: Any) -> ComplexMatrix:
    """Coerce ``m`` into a finite 2-D complex array."""
    arr = np.array(m, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DomainError(f"expected a 2-D matrix, got shape {arr.shape}", code="bad_shape")
    if not np.all(np.isfinite(arr)):
        raise DomainError("matrix has non-finite entries", code="non_finite")
    return arr


def _require_square(m: ComplexMatrix, what: str = "matrix") -> None:
    if m.shape[0] != m.shape[1]:
        raise DomainError(f"{what} must be square, got {m.shape}", code="not_square")


def dagger(m: ComplexMatrix) -> ComplexMatrix:
    return m.conj().T


def max_abs(m: npt.ArrayLike) -> float:
    arr = np.asarray(m)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


_ACOS_SNAP = 4 * np.finfo(float).eps


def safe_acos(x: float) -> float:
    """``arccos`` clipped to [-1, 1]; always returns an angle in [0, pi].

    Arguments within a few ulps of +-1 are snapped: arccos has infinite slope
    there, so rounding noise of 1e-16 would otherwise surface as 1e-8 rad.
    """
    x = float(x)
    if x >= 1.0 - _ACOS_SNAP:
        return 0.0
    if x <= -1.0 + _ACOS_SNAP:
        return math.pi
    return math.acos(x)


def eig(m: npt.ArrayLike, tol: Optional[Tolerance] = None) -> SpectralData:
    """Eigendecomposition. Hermitian input goes through ``eigh`` and yields
    real eigenvalues; other input uses the general solver."""
    m = as_matrix(m)
    _require_square(m)
    try:
        if is_hermitian(m, tol):
            vals, vecs = np.linalg.eigh((m + dagger(m)) / 2)
            return SpectralData(eigenvalues=vals.astype(np.complex128), eigenvectors=vecs)
        vals, vecs = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver did not converge for {m.shape[0]}x{m.shape[0]} matrix") from exc
    return SpectralData(eigenvalues=vals, eigenvectors=vecs)


def schur_eigenvalues(m: npt.ArrayLike) -> npt.NDArray[np.complex128]:
    """Eigenvalues read off the diagonal of the complex Schur form."""
    m = as_matrix(m)
    _require_square(m)
    try:
        t, _ = scipy.linalg.schur(m, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"Schur decomposition failed for {m.shape[0]}x{m.shape[0]} matrix") from exc
    return np.diag(t).copy()


def svd(m: npt.ArrayLike) -> SpectralData:
    """Full SVD ``M = left @ diag(s) @ right^H`` with nonincreasing ``s``."""
    m = as_matrix(m)
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge for {m.shape[0]}x{m.shape[1]} matrix") from exc
    k = s.size
    recon = u[:, :k] @ np.diag(s) @ vh[:k, :]
    scale = max(1.0, float(s[0]) if k else 0.0)
    if max_abs(recon - m) > 1e-8 * scale:
        raise NumericError(f"SVD reconstruction residual too large for {m.shape} matrix")
    return SpectralData(singular_values=s, left=u, right=dagger(vh))


def singular_values(m: npt.ArrayLike) -> npt.NDArray[np.float64]:
    return np.linalg.svd(as_matrix(m), compute_uv=False)


def sigma_min(m: npt.ArrayLike) -> float:
    """Smallest of the min(rows, cols) singular values."""
    s = singular_values(m)
    return float(s[-1]) if s.size else 0.0


def pinv(m: npt.ArrayLike, tol: Optional[Tolerance] = None) -> ComplexMatrix:
    """Moore-Penrose pseudoinverse via SVD.

    Singular values below ``validation_eps * sigma_max`` are treated as zero.
    The all-zero matrix maps to the (transposed-shape) zero matrix.
    """
    tol = _tol(tol)
    m = as_matrix(m)
    sd = svd(m)
    s = sd.singular_values
    out = np.zeros((m.shape[1], m.shape[0]), dtype=np.complex128)
    if s.size == 0 or s[0] == 0.0:
        return out
    keep = s > tol.validation_eps * s[0]
    k = int(np.count_nonzero(keep))
    u = sd.left[:, :k]
    v = sd.right[:, :k]
    return (v / s[:k]) @ dagger(u)


def is_unitary(m: npt.ArrayLike, tol: Optional[Tolerance] = None) -> bool:
    tol = _tol(tol)
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return unitarity_deviation(m) <= tol.validation_eps


def unitarity_deviation(m: ComplexMatrix) -> float:
    return max_abs(dagger(m) @ m - np.eye(m.shape[1]))


def is_hermitian(m: npt.ArrayLike, tol: Optional[Tolerance] = None) -> bool:
    tol = _tol(tol)
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return max_abs(m - dagger(m)) <= tol.validation_eps


def is_psd(m: npt.ArrayLike, tol: Optional[Tolerance] = None) -> bool:
    tol = _tol(tol)
    if not is_hermitian(m, tol):
        return False
    m = np.asarray(m, dtype=np.complex128)
    if m.size == 0:
        return True
    return float(np.linalg.eigvalsh((m + dagger(m)) / 2)[0]) >= -tol.validation_eps


def psd_eigh(m: npt.ArrayLike, tol: Optional[Tolerance] = None):
    """Eigenpairs of a PSD matrix, eigenvalues nonincreasing and clamped at 0.

    Raises :class:`DomainError` if ``m`` is not Hermitian or has an eigenvalue
    below ``-validation_eps``.
    """
    tol = _tol(tol)
    m = as_matrix(m)
    _require_square(m)
    if not is_hermitian(m, tol):
        raise DomainError("matrix is not Hermitian", code="not_psd",
                          deviation=max_abs(m - dagger(m)))
    vals, vecs = np.linalg.eigh((m + dagger(m)) / 2)
    if vals.size and vals[0] < -tol.validation_eps:
        raise DomainError(f"matrix has negative eigenvalue {vals[0]:.3e}", code="not_psd",
                          min_eigenvalue=float(vals[0]))
    # eigenvalues at rounding level are zero; their square roots would not be
    floor = 16 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(vals), initial=0.0)))
    vals = np.where(vals <= floor, 0.0, vals)[::-1]
    vecs = vecs[:, ::-1]
    return vals, vecs


def principal_sqrt(m: npt.ArrayLike, tol: Optional[Tolerance] = None) -> ComplexMatrix:
    """Hermitian PSD square root of a PSD matrix."""
    vals, vecs = psd_eigh(m, tol)
    return (vecs * np.sqrt(vals)) @ dagger(vecs)


def random_unitary(n: int, rng: np.random.Generator) -> ComplexMatrix:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


# -- JSON ------------------------------------------------------------------

def matrix_to_json(m: npt.ArrayLike) -> dict:
    m = as_matrix(m)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "entries": [[float(z.real), float(z.imag)] for z in m.ravel()],
    }


def _complex_entry(e: Any) -> complex:
    if isinstance(e, (list, tuple)) and len(e) == 2:
        return complex(float(e[0]), float(e[1]))
    if isinstance(e, (int, float)):
        return complex(e)
    raise DomainError(f"bad complex entry {e!r}; expected [re, im]", code="bad_json")


def matrix_from_json(obj: Any) -> ComplexMatrix:
    try:
        rows, cols, entries = int(obj["rows"]), int(obj["cols"]), obj["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"bad matrix JSON: {exc}", code="bad_json") from exc
    if len(entries) != rows * cols:
        raise DomainError(
            f"matrix JSON has {len(entries)} entries, expected {rows}x{cols}", code="bad_json"
        )
    flat = np.array([_complex_entry(e) for e in entries], dtype=np.complex128)
    return as_matrix(flat.reshape(rows, cols))


def vector_from_json(obj: Any) -> npt.NDArray[np.complex128]:
    """Accept either a matrix object (single column/row) or a list of [re, im]."""
    if isinstance(obj, dict):
        return matrix_from_json(obj).ravel()
    if isinstance(obj, Sequence):
        return np.array([_complex_entry(e) for e in obj], dtype=np.complex128)
    raise DomainError(f"bad vector JSON {obj!r}", code="bad_json")


def vector_to_json(v: npt.ArrayLike) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(v, dtype=np.complex128).ravel()]
