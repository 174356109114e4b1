"""
Time-energy cost bounds for general POVMs.

A POVM {M_i} is embedded in a unitary through Kraus blocks F_i = V_i sqrt(M_i),
and detection events (rows of the stacked blocks) may be relabeled freely.
This module computes

* the exact cost when relabelings are restricted to whole elements,
* two lower bounds for arbitrary relabelings (column-norm and pooled
  singular-value bounds),
* a row-selection search whose Hermitian PSD certificate proves exactness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .matcore import (
    ComplexMatrix,
    DomainError,
    Tolerance,
    _tol,
    as_matrix,
    dagger,
    matrix_from_json,
    matrix_to_json,
    max_abs,
    principal_sqrt,
    psd_eigh,
    random_unitary,
    safe_acos,
    sigma_min,
    singular_values,
)
from .ucost import KrausStack


class PovmValidationError(DomainError):
    code = "invalid_povm"

    def __init__(self, violations: List[str]):
        super().__init__("; ".join(violations), violations=violations)
        self.violations = violations


@dataclass(frozen=True)
class Povm:
    n: int
    elements: tuple

    @property
    def K(self) -> int:
        return len(self.elements)

    def sqrt_elements(self, tol: Optional[Tolerance] = None) -> List[ComplexMatrix]:
        return [principal_sqrt(m, tol) for m in self.elements]

    def to_json(self) -> dict:
        return {"n": self.n, "elements": [matrix_to_json(m) for m in self.elements]}

    @classmethod
    def from_json(cls, obj: dict, tol: Optional[Tolerance] = None) -> "Povm":
        try:
            raw = [matrix_from_json(m) for m in obj["elements"]]
        except (KeyError, TypeError) as exc:
            raise DomainError(f"bad POVM JSON: {exc}", code="bad_json") from exc
        povm = validate_povm(raw, tol)
        if "n" in obj and int(obj["n"]) != povm.n:
            raise DomainError(f"declared n={obj['n']} but elements are {povm.n}x{povm.n}",
                              code="bad_json")
        return povm


def validate_povm(raw: Sequence, tol: Optional[Tolerance] = None) -> Povm:
    """Check squareness, equal dimension, PSD elements and completeness."""
    tol = _tol(tol)
    if len(raw) == 0:
        raise PovmValidationError(["POVM has no elements"])
    mats = [as_matrix(m) for m in raw]
    violations = []
    n = mats[0].shape[0]
    for i, m in enumerate(mats):
        if m.shape != (n, n):
            violations.append(f"element {i} has shape {m.shape}, expected {(n, n)}")
    if violations:
        raise PovmValidationError(violations)
    for i, m in enumerate(mats):
        herm = max_abs(m - dagger(m))
        if herm > tol.validation_eps:
            violations.append(f"element {i} is not Hermitian (deviation {herm:.3e})")
            continue
        lo = float(np.linalg.eigvalsh((m + dagger(m)) / 2)[0])
        if lo < -tol.validation_eps:
            violations.append(f"element {i} is not PSD (min eigenvalue {lo:.3e})")
    total = sum(mats)
    dev = max_abs(total - np.eye(n))
    if dev > tol.validation_eps:
        violations.append(f"elements sum to identity only within {dev:.3e}")
    if violations:
        raise PovmValidationError(violations)
    return Povm(n=n, elements=tuple(mats))


def embed_kraus(povm: Povm, order: Optional[Sequence[int]] = None,
                tol: Optional[Tolerance] = None) -> KrausStack:
    """Kraus stack (sqrt(M_order[0]), sqrt(M_order[1]), ...) with V_i = I, m = n.

    ``order`` is a 0-based permutation of range(K); default is identity.
    """
    if order is None:
        order = range(povm.K)
    order = list(order)
    if sorted(order) != list(range(povm.K)):
        raise DomainError(f"order {order} is not a permutation of 0..{povm.K - 1}",
                          code="bad_order")
    roots = povm.sqrt_elements(tol)
    return KrausStack.from_blocks([roots[k] for k in order], tol)


def element_order_cost(povm: Povm, tol: Optional[Tolerance] = None) -> float:
    """Exact cost when only whole POVM elements may be reordered."""
    best = max(sigma_min(r) for r in povm.sqrt_elements(tol))
    return safe_acos(best)


def column_norms(povm: Povm, tol: Optional[Tolerance] = None) -> np.ndarray:
    """(K, n) array of column 2-norms of every sqrt(M_j)."""
    return np.array([np.linalg.norm(r, axis=0) for r in povm.sqrt_elements(tol)])


def method1_bound(povm: Povm, tol: Optional[Tolerance] = None) -> float:
    norms = column_norms(povm, tol)
    return safe_acos(float(np.min(np.max(norms, axis=0))))


def column_corollary_bound(povm: Povm, tol: Optional[Tolerance] = None) -> Optional[float]:
    """arccos(c) for a column norm c >= 1/sqrt(2), or None if there is none.

    Every qualifying column gives a valid bound; the tightest one (smallest
    qualifying c) is returned.
    """
    tol = _tol(tol)
    norms = column_norms(povm, tol).ravel()
    qualifying = norms[norms >= 1.0 / math.sqrt(2.0) - tol.validation_eps]
    if qualifying.size == 0:
        return None
    return safe_acos(float(np.min(qualifying)))


def pooled_singular_values(povm: Povm, tol: Optional[Tolerance] = None) -> np.ndarray:
    vals = [np.sqrt(psd_eigh(m, tol)[0]) for m in povm.elements]
    return np.sort(np.concatenate(vals))[::-1]


def sigma_n(povm: Povm, tol: Optional[Tolerance] = None) -> float:
    return float(pooled_singular_values(povm, tol)[povm.n - 1])


def sigma_n_bound(povm: Povm, tol: Optional[Tolerance] = None) -> float:
    return safe_acos(sigma_n(povm, tol))


# -- row selection ---------------------------------------------------------

@dataclass(frozen=True)
class CanonicalRows:
    """Rows of Lambda_i Q_i^H where sqrt(M_i) = Q_i Lambda_i Q_i^H.

    ``tags[r]`` is (element index, eigenvalue index) of ``rows[r]``; ``norms``
    holds the eigenvalue Lambda_i(j) each row's norm should equal.
    """

    rows: np.ndarray
    tags: Tuple[Tuple[int, int], ...]
    norms: np.ndarray


def canonical_rows(povm: Povm, tol: Optional[Tolerance] = None) -> CanonicalRows:
    rows, tags, norms = [], [], []
    for i, m in enumerate(povm.elements):
        vals, vecs = psd_eigh(m, tol)
        lam = np.sqrt(vals)
        for j in range(povm.n):
            rows.append(lam[j] * vecs[:, j].conj())
            tags.append((i, j))
            norms.append(lam[j])
    return CanonicalRows(np.array(rows), tuple(tags), np.array(norms))


@dataclass(frozen=True)
class EnumerationBudget:
    max_candidates: int = 10**6

    def __post_init__(self):
        if self.max_candidates < 1:
            raise DomainError("enumeration budget must be >= 1", code="bad_budget")


@dataclass(frozen=True)
class Certificate:
    """Best row selection found. ``rows`` is given in the arranged order that
    makes ``block`` Hermitian PSD when ``hermitian`` is True."""

    rows: Tuple[Tuple[int, int], ...]
    block: ComplexMatrix = field(repr=False)
    sigma_min: float
    hermitian: bool
    reaches_sigma_n: bool

    def to_json(self) -> dict:
        return {"rows": [list(t) for t in self.rows], "sigma_min": self.sigma_min,
                "hermitian": self.hermitian}


@dataclass(frozen=True)
class SearchResult:
    certificate: Optional[Certificate]
    exhausted: bool
    evaluated: int


def _hermitian_arrangement(block: ComplexMatrix, tol: Tolerance):
    """Try to reorder and rephase the rows of ``block`` into a Hermitian PSD
    matrix. Returns (permutation, phases) or None.

    If block = W H is the polar decomposition, D P block is Hermitian PSD
    exactly when D P = W^H, i.e. when W^H is a phased permutation matrix.
    """
    u, s, vh = np.linalg.svd(block)
    if s[-1] <= tol.certificate_eps:
        return None
    wh = dagger(u @ vh)
    mags = np.abs(wh)
    perm = np.argmax(mags, axis=1)
    if sorted(perm.tolist()) != list(range(block.shape[0])):
        return None
    picked = mags[np.arange(len(perm)), perm]
    if np.max(np.abs(picked - 1.0)) > tol.certificate_eps:
        return None
    phases = wh[np.arange(len(perm)), perm] / picked
    return perm, phases


def certificate_search(povm: Povm, budget: Optional[EnumerationBudget] = None,
                       tol: Optional[Tolerance] = None) -> SearchResult:
    """Branch and bound over n-row selections of the canonical rows,
    maximizing sigma_min of the selected block.

    Rows are visited by decreasing norm (ties by provenance tag) and a partial
    selection of k rows is pruned when its k-th singular value, which bounds
    sigma_min of every completion, falls below the incumbent. The search stops
    at the first selection that reaches sigma_n and admits a Hermitian PSD
    arrangement; otherwise the first maximizer in visiting order is returned.
    Each singular value evaluation counts against ``budget``.
    """
    tol = _tol(tol)
    budget = budget or EnumerationBudget()
    n = povm.n
    cr = canonical_rows(povm, tol)
    target = sigma_n(povm, tol)
    eps = tol.certificate_eps

    order = sorted((r for r in range(len(cr.tags)) if cr.norms[r] > tol.validation_eps),
                   key=lambda r: (-cr.norms[r], cr.tags[r]))
    exhausted = False
    if math.comb(len(order), n) > budget.max_candidates:
        exhausted = True
        order = order[: n + povm.K]
    if len(order) < n:
        return SearchResult(None, exhausted, 0)

    rows = cr.rows
    state = {"best": -1.0, "sel": None, "cert": None, "work": 0}

    class _Stop(Exception):
        pass

    def visit(start: int, chosen: List[int]):
        k = len(chosen)
        for pos in range(start, len(order) - (n - k) + 1):
            nxt = chosen + [order[pos]]
            state["work"] += 1
            if state["work"] > budget.max_candidates:
                raise _Stop
            s = float(singular_values(rows[nxt])[-1])
            if s < state["best"] - 2 * eps:
                continue
            if k + 1 < n:
                visit(pos + 1, nxt)
                continue
            if s > state["best"]:
                state["best"], state["sel"] = s, list(nxt)
            if s >= target - eps:
                arr = _hermitian_arrangement(rows[nxt], tol)
                if arr is not None:
                    state["cert"] = (nxt, arr, s)
                    raise _Stop

    try:
        visit(0, [])
    except _Stop:
        if state["cert"] is None:
            exhausted = True
    evaluated = state["work"]

    if state["cert"] is not None:
        sel, (perm, phases), s = state["cert"]
        ordered = [sel[p] for p in perm]
        block = phases[:, None] * rows[ordered]
        herm = True
    elif state["sel"] is not None:
        ordered, s = state["sel"], state["best"]
        block = rows[ordered]
        herm = False
    else:
        return SearchResult(None, exhausted, evaluated)

    cert = Certificate(
        rows=tuple(cr.tags[r] for r in ordered),
        block=block,
        sigma_min=float(s),
        hermitian=herm,
        reaches_sigma_n=abs(s - target) <= eps,
    )
    return SearchResult(cert, exhausted, evaluated)


@dataclass(frozen=True)
class BoundReport:
    lower: float
    upper: float
    exact: bool
    method1: float
    sigma_n_bound: float
    element_order_cost: float
    certificate: Optional[Certificate]
    exhausted: bool

    @property
    def cost(self) -> Optional[float]:
        """The exact cost when it is known, else None."""
        return self.lower if self.exact else None

    def to_json(self) -> dict:
        return {
            "lower_rad": self.lower,
            "upper_rad": self.upper,
            "exact": self.exact,
            "cost_rad": self.cost,
            "method1_rad": self.method1,
            "sigma_n_rad": self.sigma_n_bound,
            "element_order_rad": self.element_order_cost,
            "certificate": self.certificate.to_json() if self.certificate else None,
            "exhausted": self.exhausted,
        }


def povm_cost(povm: Povm, budget: Optional[EnumerationBudget] = None,
              tol: Optional[Tolerance] = None) -> BoundReport:
    tol = _tol(tol)
    m1 = method1_bound(povm, tol)
    sn = sigma_n_bound(povm, tol)
    upper = element_order_cost(povm, tol)
    lower = max(m1, sn)
    search = certificate_search(povm, budget, tol)
    cert = search.certificate
    exact = False
    if cert is not None and cert.hermitian and cert.reaches_sigma_n:
        exact = True
        lower = max(lower, safe_acos(cert.sigma_min))
    elif abs(upper - lower) <= tol.certificate_eps:
        exact = True
    return BoundReport(
        lower=lower,
        upper=upper,
        exact=exact,
        method1=m1,
        sigma_n_bound=sn,
        element_order_cost=upper,
        certificate=cert,
        exhausted=search.exhausted,
    )


def random_povm(n: int, K: int, rng: np.random.Generator, kind: str = "wishart") -> Povm:
    """Random POVM for property checks.

    ``kind="diagonal"`` conjugates a random diagonal decomposition of the
    identity by one Haar unitary; ``kind="wishart"`` normalizes random PSD
    matrices A_i by S^(-1/2) A_i S^(-1/2) with S = sum A_i.
    """
    if kind == "diagonal":
        w = rng.random((K, n)) ** 2
        w /= w.sum(axis=0)
        u = random_unitary(n, rng)
        mats = [(u * w[k]) @ dagger(u) for k in range(K)]
    elif kind == "wishart":
        while True:
            mats = []
            for _ in range(K):
                r = int(rng.integers(1, n + 1))
                a = rng.standard_normal((n, r)) + 1j * rng.standard_normal((n, r))
                mats.append(a @ dagger(a))
            vals, vecs = np.linalg.eigh(sum(mats))
            # ranks may not add up to n; redraw until the sum is invertible
            if vals[0] > 1e-6 * vals[-1]:
                break
        s_inv = (vecs / np.sqrt(vals)) @ dagger(vecs)
        mats = [s_inv @ m @ s_inv for m in mats]
    else:
        raise ValueError(f"unknown kind {kind!r}")
    mats = [(m + dagger(m)) / 2 for m in mats]
    return validate_povm(mats, Tolerance(validation_eps=1e-8))
