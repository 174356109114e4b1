"""Time-energy cost of unitaries and the partial-U (fixed leading columns) problem."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .matcore import (
    ComplexMatrix,
    DomainError,
    Tolerance,
    _tol,
    as_matrix,
    dagger,
    is_hermitian,
    is_unitary,
    matrix_from_json,
    matrix_to_json,
    max_abs,
    safe_acos,
    schur_eigenvalues,
    sigma_min,
    svd,
    unitarity_deviation,
)


def _angles(eigenvalues: np.ndarray) -> np.ndarray:
    # principal argument in (-pi, pi]; np.angle(-1-0j) == -pi, so fold it back
    a = np.angle(eigenvalues)
    return np.where(a <= -math.pi, math.pi, a)


def maxnorm_unitary(u, tol: Optional[Tolerance] = None) -> float:
    """Largest absolute eigenphase of a unitary, in [0, pi]."""
    tol = _tol(tol)
    u = as_matrix(u)
    if u.shape[0] != u.shape[1] or not is_unitary(u, tol):
        dev = unitarity_deviation(u) if u.shape[0] == u.shape[1] else float("inf")
        raise DomainError(f"matrix is not unitary (deviation {dev:.3e})",
                          code="not_unitary", deviation=dev)
    lam = schur_eigenvalues(u)
    mod_dev = float(np.max(np.abs(np.abs(lam) - 1.0)))
    if mod_dev > tol.validation_eps:
        raise DomainError(f"eigenvalue modulus deviates from 1 by {mod_dev:.3e}",
                          code="not_unitary", deviation=mod_dev)
    return float(np.max(np.abs(_angles(lam))))


def single_vector_cost(e, b, tol: Optional[Tolerance] = None) -> float:
    """Minimal cost of a unitary mapping unit vector ``e`` to unit vector ``b``."""
    tol = _tol(tol)
    e = np.asarray(e, dtype=np.complex128).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    if e.shape != b.shape:
        raise DomainError(f"dimension mismatch {e.shape} vs {b.shape}", code="dimension_mismatch")
    for name, v in (("e", e), ("b", b)):
        if abs(np.linalg.norm(v) - 1.0) > tol.validation_eps:
            raise DomainError(f"{name} is not a unit vector", code="not_unit")
    return safe_acos(np.vdot(e, b).real)


@dataclass(frozen=True)
class KrausStack:
    """K equally shaped m x n blocks whose vertical stack has orthonormal columns."""

    blocks: tuple

    @classmethod
    def from_blocks(cls, blocks: Sequence, tol: Optional[Tolerance] = None) -> "KrausStack":
        tol = _tol(tol)
        arrs = tuple(as_matrix(b) for b in blocks)
        if not arrs:
            raise DomainError("Kraus stack needs at least one block", code="invalid_stack")
        shape = arrs[0].shape
        if any(a.shape != shape for a in arrs):
            raise DomainError("Kraus blocks must share one shape", code="invalid_stack")
        m, n = shape
        if m < n:
            raise DomainError(f"blocks must have m >= n, got {m}x{n}", code="invalid_stack")
        g = np.vstack(arrs)
        dev = max_abs(dagger(g) @ g - np.eye(n))
        if dev > tol.validation_eps:
            raise DomainError(f"sum F_j^H F_j deviates from identity by {dev:.3e}",
                              code="invalid_stack", deviation=dev)
        return cls(arrs)

    @property
    def K(self) -> int:
        return len(self.blocks)

    @property
    def m(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def n(self) -> int:
        return self.blocks[0].shape[1]

    @property
    def stacked(self) -> ComplexMatrix:
        return np.vstack(self.blocks)

    @property
    def top(self) -> ComplexMatrix:
        """First n rows of F_1."""
        return self.blocks[0][: self.n, :]

    def to_json(self) -> dict:
        return {"K": self.K, "m": self.m, "n": self.n,
                "blocks": [matrix_to_json(b) for b in self.blocks]}

    @classmethod
    def from_json(cls, obj: dict, tol: Optional[Tolerance] = None) -> "KrausStack":
        try:
            blocks = [matrix_from_json(b) for b in obj["blocks"]]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"bad Kraus stack JSON: {exc}", code="bad_json") from exc
        stack = cls.from_blocks(blocks, tol)
        for key, val in (("K", stack.K), ("m", stack.m), ("n", stack.n)):
            if key in obj and int(obj[key]) != val:
                raise DomainError(f"declared {key}={obj[key]} but blocks give {val}", code="bad_json")
        return stack


@dataclass(frozen=True)
class PartialUBounds:
    diag1: float
    schur: float
    sv: float
    best: float

    def to_json(self) -> dict:
        return {"diag1_rad": self.diag1, "schur_rad": self.schur,
                "sv_rad": self.sv, "best_rad": self.best}


def _diag1(top: ComplexMatrix) -> float:
    return max(safe_acos(z.real) for z in np.diag(top))


def _schur(top: ComplexMatrix) -> float:
    return max(safe_acos(z.real) for z in schur_eigenvalues(top))


def canonical_stack(stack: KrausStack) -> KrausStack:
    """Conjugate by the right singular factor of F_1 so that the top block of
    F_1 becomes (left unitary) x (nonincreasing singular values)."""
    right = svd(stack.blocks[0]).right
    return conjugate_stack(stack, dagger(right))


def partial_u_bounds(stack: KrausStack, tol: Optional[Tolerance] = None) -> PartialUBounds:
    """Lower bounds on the minimal cost of any unitary whose first n columns
    are the stacked Kraus blocks.

    The diagonal and Schur bounds are evaluated on the stack as given and on
    its canonical presentation; the larger value is kept.
    """
    canon = canonical_stack(stack)
    diag1 = max(_diag1(stack.top), _diag1(canon.top))
    schur = max(_schur(stack.top), _schur(canon.top))
    sv = safe_acos(sigma_min(stack.blocks[0]))
    return PartialUBounds(diag1=diag1, schur=schur, sv=sv, best=max(diag1, schur, sv))


def conjugate_stack(stack: KrausStack, q, tol: Optional[Tolerance] = None) -> KrausStack:
    """Return (Qhat F_1 Q^H, F_2 Q^H, ..., F_K Q^H) with Qhat = diag(Q, 1)."""
    tol = _tol(tol)
    q = as_matrix(q)
    n, m = stack.n, stack.m
    if q.shape != (n, n):
        raise DomainError(f"Q must be {n}x{n}, got {q.shape}", code="dimension_mismatch")
    if not is_unitary(q, tol):
        raise DomainError("Q is not unitary", code="not_unitary")
    qhat = np.eye(m, dtype=np.complex128)
    qhat[:n, :n] = q
    qh = dagger(q)
    blocks = [qhat @ stack.blocks[0] @ qh] + [f @ qh for f in stack.blocks[1:]]
    return KrausStack(tuple(blocks))


def complete_unitary_diagonal(stack: KrausStack, tol: Optional[Tolerance] = None) -> ComplexMatrix:
    """Unitary completion achieving max_i arccos(d_i) when the top n x n
    block of F_1 is real diagonal with entries d_i.

    Each column i is rotated into the normalized residual r_i / |r_i| of its
    own stacked column; everything else is left fixed.
    """
    tol = _tol(tol)
    n = stack.n
    top = stack.top
    off = top - np.diag(np.diag(top))
    d = np.diag(top)
    if max_abs(off) > tol.validation_eps or max_abs(d.imag) > tol.validation_eps:
        raise DomainError("top block is not real diagonal", code="not_diagonal")
    d = np.clip(d.real, -1.0, 1.0)
    g = stack.stacked
    dim = g.shape[0]
    u = np.eye(dim, dtype=np.complex128)
    for i in range(n):
        r = g[:, i].copy()
        r[:n] = 0.0
        s = float(np.linalg.norm(r))
        s_expected = math.sqrt(max(0.0, 1.0 - d[i] ** 2))
        if abs(s - s_expected) > math.sqrt(tol.validation_eps):
            raise DomainError(f"residual support of column {i} is deficient",
                              code="deficient_support")
        e = np.zeros(dim, dtype=np.complex128)
        e[i] = 1.0
        if s <= tol.validation_eps:
            u += (d[i] - 1.0) * np.outer(e, e)
            continue
        w = r / s
        # rotation in span{e_i, w}: e_i -> d e_i + s w, w -> -s e_i + d w
        u += (d[i] - 1.0) * (np.outer(e, e) + np.outer(w, w.conj()))
        u += s * (np.outer(w, e) - np.outer(e, w.conj()))
    return u


def complete_unitary_hermitian(stack: KrausStack, tol: Optional[Tolerance] = None) -> ComplexMatrix:
    """Completion for square Hermitian F_1: diagonalize, complete, conjugate back."""
    tol = _tol(tol)
    f1 = stack.blocks[0]
    if stack.m != stack.n or not is_hermitian(f1, tol):
        raise DomainError("F_1 must be square and Hermitian", code="not_hermitian")
    _, z = np.linalg.eigh((f1 + dagger(f1)) / 2)
    diag_stack = conjugate_stack(stack, dagger(z), tol)
    u_diag = complete_unitary_diagonal(diag_stack, tol)
    qt = np.eye(u_diag.shape[0], dtype=np.complex128)
    qt[: stack.n, : stack.n] = dagger(z)
    return dagger(qt) @ u_diag @ qt


def exact_cost_hermitian(stack: KrausStack, tol: Optional[Tolerance] = None) -> float:
    """arccos of the smallest eigenvalue of a square Hermitian F_1."""
    tol = _tol(tol)
    f1 = stack.blocks[0]
    if stack.m != stack.n or not is_hermitian(f1, tol):
        raise DomainError("F_1 must be square and Hermitian", code="not_hermitian")
    return safe_acos(np.linalg.eigvalsh((f1 + dagger(f1)) / 2)[0])


def random_completion(g, rng: np.random.Generator) -> ComplexMatrix:
    """Unitary whose first columns are ``g`` and whose remaining columns are a
    random orthonormal basis of the complement."""
    g = as_matrix(g)
    dim, n = g.shape
    if dim == n:
        return g.copy()
    z = rng.standard_normal((dim, dim - n)) + 1j * rng.standard_normal((dim, dim - n))
    for _ in range(2):
        z = z - g @ (dagger(g) @ z)
    q, r = np.linalg.qr(z)
    return np.hstack([g, q])


def random_stack(n: int, K: int, rng: np.random.Generator, m: Optional[int] = None) -> KrausStack:
    """Kraus stack cut from a random Km x n isometry."""
    m = n if m is None else m
    z = rng.standard_normal((K * m, n)) + 1j * rng.standard_normal((K * m, n))
    q, _ = np.linalg.qr(z)
    return KrausStack(tuple(q[j * m:(j + 1) * m] for j in range(K)))


def random_diagonal_stack(n: int, K: int, rng: np.random.Generator) -> KrausStack:
    """Stack whose F_1 is square with a real diagonal entries d_i in [-1, 1];
    the residual of column i is s_i times an orthonormal direction in the
    lower blocks. Needs (K - 1) n >= n, i.e. K >= 2."""
    if K < 2:
        raise ValueError("need K >= 2 to host the residual columns")
    d = rng.uniform(-1.0, 1.0, n)
    s = np.sqrt(1.0 - d ** 2)
    z = rng.standard_normal(((K - 1) * n, n)) + 1j * rng.standard_normal(((K - 1) * n, n))
    w, _ = np.linalg.qr(z)
    lower = w * s
    blocks = [np.diag(d).astype(np.complex128)]
    blocks += [lower[j * n:(j + 1) * n] for j in range(K - 1)]
    return KrausStack(tuple(blocks))
