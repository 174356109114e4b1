"""
Optimal unambiguous discrimination of geometrically uniform (GU) states and
the time-energy cost bound of the resulting POVM.

For a cyclic group generated by U (U^K = I) the frame operator Phi Phi^H is
block diagonal in the eigenspaces of U, so its pseudoinverse is computed
block by block from the seed's weight c_k in each eigenspace. This stays
exact when the states are nearly linearly dependent (weights down to 1e-60
for weak coherent states), where a truncated SVD pseudoinverse would discard
the very directions that carry the answer. Non-cyclic groups use the dense
pseudoinverse.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy.stats import poisson

from .matcore import (
    ComplexMatrix,
    DomainError,
    Tolerance,
    _tol,
    as_matrix,
    dagger,
    is_unitary,
    matrix_from_json,
    max_abs,
    pinv,
    safe_acos,
    singular_values,
    vector_from_json,
)
from .povm import Povm, validate_povm

GROUP_EPS = 1e-8


@dataclass(frozen=True)
class GUFamily:
    """States U_i |seed> for the unitaries U_i of a finite group.

    ``generator`` is set for cyclic families, where ``group[j] = generator^j``.
    """

    n: int
    k_bar: int
    group: Tuple[ComplexMatrix, ...] = field(repr=False)
    seed: np.ndarray = field(repr=False)
    states: ComplexMatrix = field(repr=False)
    generator: Optional[ComplexMatrix] = field(default=None, repr=False)
    warnings: Tuple[str, ...] = ()


def _check_seed(seed, n: int, tol: Tolerance) -> np.ndarray:
    seed = np.asarray(seed, dtype=np.complex128).ravel()
    if seed.size != n:
        raise DomainError(f"seed has dimension {seed.size}, generator {n}", code="dimension_mismatch")
    norm = float(np.linalg.norm(seed))
    if abs(norm - 1.0) > tol.validation_eps:
        raise DomainError(f"seed norm {norm} is not 1", code="not_unit")
    return seed


def _proper_divisors(k: int) -> List[int]:
    return [d for d in range(1, k) if k % d == 0]


def build_gu_family(generator, seed, k_bar: int, tol: Optional[Tolerance] = None,
                    warnings: Sequence[str] = ()) -> GUFamily:
    """Cyclic GU family {U^j |seed>, j = 0..k_bar-1}. U must have order exactly k_bar."""
    tol = _tol(tol)
    u = as_matrix(generator)
    if not is_unitary(u, tol):
        raise DomainError("generator is not unitary", code="not_unitary")
    n = u.shape[0]
    seed = _check_seed(seed, n, tol)
    if k_bar < 2:
        raise DomainError(f"k_bar must be >= 2, got {k_bar}", code="bad_k_bar")
    eye = np.eye(n)
    powers = [eye.astype(np.complex128)]
    for _ in range(k_bar):
        powers.append(powers[-1] @ u)
    if max_abs(powers[k_bar] - eye) > GROUP_EPS:
        raise DomainError(f"generator^{k_bar} is not the identity", code="bad_generator_order")
    for d in _proper_divisors(k_bar):
        if max_abs(powers[d] - eye) <= GROUP_EPS:
            raise DomainError(f"generator has order {d}, not {k_bar}", code="bad_generator_order")
    group = tuple(powers[:k_bar])
    states = np.column_stack([g @ seed for g in group])
    return GUFamily(n=n, k_bar=k_bar, group=group, seed=seed, states=states,
                    generator=u, warnings=tuple(warnings))


def build_gu_family_from_group(elements: Sequence, seed, tol: Optional[Tolerance] = None) -> GUFamily:
    """GU family for an explicit finite group, validated for closure under
    products and adjoints."""
    tol = _tol(tol)
    group = tuple(as_matrix(e) for e in elements)
    if len(group) < 2:
        raise DomainError("group needs at least two elements", code="bad_group")
    n = group[0].shape[0]
    for g in group:
        if g.shape != (n, n) or not is_unitary(g, tol):
            raise DomainError("group elements must be unitary and equally sized", code="bad_group")

    def member(x):
        return any(max_abs(x - g) <= GROUP_EPS for g in group)

    for a in group:
        if not member(dagger(a)):
            raise DomainError("group is not closed under adjoint", code="bad_group")
        for b in group:
            if not member(a @ b):
                raise DomainError("group is not closed under products", code="bad_group")
    seed = _check_seed(seed, n, tol)
    states = np.column_stack([g @ seed for g in group])
    return GUFamily(n=n, k_bar=len(group), group=group, seed=seed, states=states)


# -- coherent states -------------------------------------------------------

def coherent_state(alpha: complex, trunc_dim: int = 50) -> np.ndarray:
    """Fock amplitudes alpha^m / sqrt(m!) for m < trunc_dim, renormalized."""
    if trunc_dim < 1:
        raise DomainError("trunc_dim must be >= 1", code="bad_trunc")
    amp = np.empty(trunc_dim, dtype=np.complex128)
    amp[0] = 1.0
    for m in range(1, trunc_dim):
        amp[m] = amp[m - 1] * alpha / math.sqrt(m)
    return amp / np.linalg.norm(amp)


def truncation_tail(alpha: complex, trunc_dim: int) -> float:
    """Poisson mass e^{-|a|^2} sum_{m >= trunc_dim} |a|^{2m}/m! discarded by truncation."""
    return float(poisson.sf(trunc_dim - 1, abs(alpha) ** 2))


@dataclass(frozen=True)
class CoherentFamilySpec:
    alpha: complex
    k_bar: int
    trunc_dim: int = 50

    def __post_init__(self):
        if self.trunc_dim < 1:
            raise DomainError("trunc_dim must be >= 1", code="bad_trunc")


def coherent_family(spec: CoherentFamilySpec, tol: Optional[Tolerance] = None) -> GUFamily:
    """k_bar coherent states alpha e^{2 pi i j / k_bar} generated by the
    truncated phase rotation diag(e^{2 pi i m / k_bar})."""
    d = spec.trunc_dim
    gen = np.diag(np.exp(2j * np.pi * np.arange(d) / spec.k_bar))
    warns = []
    tail = truncation_tail(spec.alpha, d)
    if tail > 1e-6:
        warns.append(f"truncation at {d} discards Poisson mass {tail:.3e}")
    return build_gu_family(gen, coherent_state(spec.alpha, d), spec.k_bar, tol, warns)


# -- optimal USD -----------------------------------------------------------

@dataclass(frozen=True)
class _Spectral:
    basis: Optional[ComplexMatrix]    # None means the standard basis
    classes: np.ndarray               # eigenspace index k of each basis vector
    coeffs: np.ndarray                # seed in the eigenbasis
    weights: np.ndarray               # c_k = |P_k seed|^2


def _spectral(family: GUFamily, tol: Tolerance) -> _Spectral:
    u = family.generator
    off = u - np.diag(np.diag(u))
    if max_abs(off) <= tol.validation_eps:
        basis, lam = None, np.diag(u)
        coeffs = family.seed.copy()
    else:
        t, z = scipy.linalg.schur(u, output="complex")
        basis, lam = z, np.diag(t)
        coeffs = dagger(z) @ family.seed
    k_bar = family.k_bar
    classes = np.mod(np.rint(np.angle(lam) * k_bar / (2 * np.pi)).astype(int), k_bar)
    roots = np.exp(2j * np.pi * classes / k_bar)
    if max_abs(lam - roots) > GROUP_EPS:
        raise DomainError("generator eigenvalues are not k_bar-th roots of unity",
                          code="bad_generator_order")
    weights = np.zeros(k_bar)
    np.add.at(weights, classes, np.abs(coeffs) ** 2)
    floor = 0.0 if basis is None else tol.validation_eps ** 2
    if np.any(weights <= floor):
        raise DomainError("states are linearly dependent (seed misses an eigenspace)",
                          code="linearly_dependent")
    return _Spectral(basis, classes, coeffs, weights)


@dataclass(frozen=True)
class UsdPovm:
    povm: Povm
    p: float
    phi_matrix: ComplexMatrix = field(repr=False)
    tilde_states: ComplexMatrix = field(repr=False)   # columns |phi~_i>, unnormalized
    warnings: Tuple[str, ...] = ()


def _conclusive_vectors(family: GUFamily, tol: Tolerance):
    """Columns sqrt(p) |phi~_i>, plus p."""
    if family.generator is not None:
        sp = _spectral(family, tol)
        c = sp.weights
        c_min = float(c.min())
        k = sp.classes
        # sqrt(p) a_m / (k_bar c_k) rewritten with bounded factors
        base = (sp.coeffs / np.sqrt(c[k])) * np.sqrt(c_min / c[k]) / math.sqrt(family.k_bar)
        phases = np.exp(2j * np.pi * np.outer(k, np.arange(family.k_bar)) / family.k_bar)
        cols = base[:, None] * phases
        if sp.basis is not None:
            cols = sp.basis @ cols
        return cols, family.k_bar * c_min
    phi = family.states
    smin = float(singular_values(phi)[-1])
    if smin <= tol.validation_eps:
        raise DomainError(f"states are linearly dependent (sigma_min = {smin:.3e})",
                          code="linearly_dependent")
    p = smin ** 2
    tilde = pinv(phi @ dagger(phi), tol) @ family.seed
    cols = math.sqrt(p) * np.column_stack([g @ tilde for g in family.group])
    return cols, p


def optimal_usd_povm(family: GUFamily, tol: Optional[Tolerance] = None) -> UsdPovm:
    """Minimum-inconclusive USD POVM: M_i = p |phi~_i><phi~_i|, M_K = I - sum M_i."""
    tol = _tol(tol)
    cols, p = _conclusive_vectors(family, tol)
    n = family.n
    elems = [np.outer(cols[:, i], cols[:, i].conj()) for i in range(family.k_bar)]
    rest = np.eye(n, dtype=np.complex128) - sum(elems)
    rest = (rest + dagger(rest)) / 2
    lo = float(np.linalg.eigvalsh(rest)[0])
    if lo < -tol.validation_eps:
        raise DomainError(f"inconclusive element is not PSD (min eigenvalue {lo:.3e})",
                          code="not_psd")
    povm = validate_povm(elems + [rest], tol)
    tilde = cols / math.sqrt(p)
    warns = list(family.warnings) + _inconclusive_spectrum_warnings(rest, n, family.k_bar)
    usd = UsdPovm(povm=povm, p=p, phi_matrix=family.states, tilde_states=tilde,
                  warnings=tuple(warns))
    laws = usd_laws(usd, family)
    if laws["p_vs_sigma_min"] > 1e-9 or laws["equal_probability"] > 1e-7:
        raise DomainError(f"USD POVM invariants violated: {laws}", code="usd_invariant")
    return usd


def _inconclusive_spectrum_warnings(rest: ComplexMatrix, n: int, k_bar: int) -> List[str]:
    vals = np.linalg.eigvalsh(rest)
    warns = []
    ones = int(np.sum(np.abs(vals - 1.0) <= 1e-6))
    zeros = int(np.sum(np.abs(vals) <= 1e-6))
    if ones < n - k_bar:
        warns.append(f"inconclusive element has {ones} unit eigenvalues, expected >= {n - k_bar}")
    if zeros < 1:
        warns.append("inconclusive element has no zero eigenvalue")
    return warns


def usd_laws(usd: UsdPovm, family: GUFamily) -> dict:
    """Maximum deviations of the structural laws of the optimal USD POVM."""
    phi = family.states
    k_bar = family.k_bar
    elems = usd.povm.elements
    probs = np.array([[np.vdot(phi[:, j], elems[i] @ phi[:, j]).real for j in range(k_bar)]
                      for i in range(k_bar)])
    off = probs - np.diag(np.diag(probs))
    smin = float(singular_values(phi)[-1])
    cov = 0.0
    if family.generator is not None:
        u = family.generator
        for i in range(k_bar - 1):
            cov = max(cov, max_abs(elems[i + 1] - u @ elems[i] @ dagger(u)))
    return {
        "completeness": max_abs(sum(elems) - np.eye(family.n)),
        "equal_probability": float(np.max(np.abs(np.diag(probs) - usd.p))),
        "wrong_state": float(np.max(np.abs(off))) if k_bar > 1 else 0.0,
        "p_vs_sigma_min": abs(usd.p - smin ** 2),
        "covariance": cov,
    }


def usd_cost_lower_bound(family: GUFamily, tol: Optional[Tolerance] = None) -> float:
    """arccos[sigma_min(Phi) sqrt(<phi|(Phi Phi^H)^{-2}|phi>)]."""
    tol = _tol(tol)
    if family.generator is not None:
        c = _spectral(family, tol).weights
        return safe_acos(math.sqrt(float(np.sum(c.min() / c)) / family.k_bar))
    phi = family.states
    smin = float(singular_values(phi)[-1])
    if smin <= tol.validation_eps:
        raise DomainError(f"states are linearly dependent (sigma_min = {smin:.3e})",
                          code="linearly_dependent")
    gp = pinv(phi @ dagger(phi), tol)
    v = gp @ family.seed
    return safe_acos(smin * math.sqrt(float(np.vdot(v, v).real)))


# -- sweeps and JSON -------------------------------------------------------

DEFAULT_INTENSITIES = (0.1, 0.5, 1.0, 3.0)
DEFAULT_K_BARS = tuple(range(2, 31))


def fig5_rows(intensities: Iterable[float] = DEFAULT_INTENSITIES,
              k_bars: Iterable[int] = DEFAULT_K_BARS, trunc_dim: int = 50,
              tol: Optional[Tolerance] = None):
    """Returns (rows, warnings); a failed point has bound None."""
    rows, warns = [], []
    k_bars = list(k_bars)
    for inten in intensities:
        for k in k_bars:
            if not 2 <= k <= trunc_dim:
                raise DomainError(f"k_bar {k} outside [2, {trunc_dim}]", code="bad_k_bar")
            try:
                fam = coherent_family(CoherentFamilySpec(math.sqrt(inten), k, trunc_dim), tol)
                bound = usd_cost_lower_bound(fam, tol)
                warns.extend(f"intensity={inten} k_bar={k}: {w}" for w in fam.warnings)
            except DomainError as exc:
                bound = None
                warns.append(f"intensity={inten} k_bar={k}: {exc}")
            rows.append((float(inten), int(k), bound))
    return rows, warns


def fig5_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["intensity", "k_bar", "bound_rad"])
    for inten, k, b in rows:
        writer.writerow([f"{inten:.12g}", k, "" if b is None else f"{b:.12g}"])
    return buf.getvalue()


def family_from_json(obj: dict, tol: Optional[Tolerance] = None) -> GUFamily:
    try:
        if "coherent" in obj:
            c = obj["coherent"]
            a = c["alpha"]
            alpha = complex(a[0], a[1]) if isinstance(a, (list, tuple)) else complex(a)
            spec = CoherentFamilySpec(alpha, int(c["k_bar"]), int(c.get("trunc_dim", 50)))
            return coherent_family(spec, tol)
        if "group" in obj:
            return build_gu_family_from_group([matrix_from_json(g) for g in obj["group"]],
                                              vector_from_json(obj["seed"]), tol)
        return build_gu_family(matrix_from_json(obj["generator"]),
                               vector_from_json(obj["seed"]), int(obj["k_bar"]), tol)
    except (KeyError, TypeError, IndexError) as exc:
        raise DomainError(f"bad family JSON: {exc}", code="bad_json") from exc
