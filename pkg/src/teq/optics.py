"""Linear-optics cost models: beam splitters, polarizing beam splitters,
Bell analyzers and the energy cost of sequential optical elements.

Time and energy are in reciprocal arbitrary units with hbar = 1, so a cost
angle is an energy-time product.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np

from .matcore import DomainError, Tolerance, _tol, safe_acos
from .povm import Povm, validate_povm
from .ucost import maxnorm_unitary


@dataclass(frozen=True)
class BeamSplitter:
    chi: float
    r: complex
    t: complex

    def __post_init__(self):
        dev = abs(abs(self.r) ** 2 + abs(self.t) ** 2 - 1.0)
        if dev > _tol(None).validation_eps:
            raise DomainError(f"|r|^2 + |t|^2 deviates from 1 by {dev:.3e}",
                              code="bad_amplitudes")


def bs_unitary(bs: BeamSplitter) -> np.ndarray:
    r, t = complex(bs.r), complex(bs.t)
    return cmath.exp(1j * bs.chi) * np.array(
        [[r, 1j * t.conjugate()], [1j * t, r.conjugate()]], dtype=np.complex128
    )


def bs_optimal_cost(reflectivity: float) -> float:
    """Cheapest beam splitter with the given |r| (chi = 0, r real)."""
    if not 0.0 <= reflectivity <= 1.0:
        raise DomainError(f"reflectivity {reflectivity} outside [0, 1]", code="bad_reflectivity")
    return safe_acos(reflectivity)


def pbs_unitary(chi: float) -> np.ndarray:
    """PBS on two spatial modes a, b with basis (aV, aH, bV, bH): vertical
    light stays in its mode, horizontal light swaps modes."""
    u = np.array(
        [[1, 0, 0, 0],
         [0, 0, 0, 1],
         [0, 0, 1, 0],
         [0, 1, 0, 0]],
        dtype=np.complex128,
    )
    return cmath.exp(1j * chi) * u


def pbs_optimal_cost() -> float:
    # eigenvalues e^{i chi} (x3) and -e^{i chi}; best at chi = pi/2
    return math.pi / 2


def chi_grid(points: int = 100) -> np.ndarray:
    """Uniform grid -pi + 2 pi k / points, k = 1..points, covering (-pi, pi]."""
    return -math.pi + 2 * math.pi * np.arange(1, points + 1) / points


def pbs_grid_cost(points: int = 100) -> float:
    return min(maxnorm_unitary(pbs_unitary(c)) for c in chi_grid(points))


def bell_two_state_unitary() -> np.ndarray:
    """|0><Psi-| + |1><Psi+| + |2><VV| + |3><HH| in the basis (VH, HV, VV, HH)."""
    s = 1 / math.sqrt(2)
    return np.array(
        [[s, -s, 0, 0],
         [s, s, 0, 0],
         [0, 0, 1, 0],
         [0, 0, 0, 1]],
        dtype=np.complex128,
    )


def bell_states() -> dict:
    """Bell vectors in the basis (VH, HV, VV, HH)."""
    s = 1 / math.sqrt(2)
    return {
        "psi-": np.array([s, -s, 0, 0], dtype=np.complex128),
        "psi+": np.array([s, s, 0, 0], dtype=np.complex128),
        "phi+": np.array([0, 0, s, s], dtype=np.complex128),
        "phi-": np.array([0, 0, s, -s], dtype=np.complex128),
    }


def singlet_povm() -> Povm:
    """{|Psi-><Psi-|, I - |Psi-><Psi-|}: the one-BS singlet detector."""
    v = bell_states()["psi-"]
    proj = np.outer(v, v.conj())
    return validate_povm([proj, np.eye(4) - proj], Tolerance(validation_eps=1e-12))


def two_bell_povm() -> Povm:
    """Projections onto |Psi->, |Psi+> and the remaining subspace."""
    b = bell_states()
    p1 = np.outer(b["psi-"], b["psi-"].conj())
    p2 = np.outer(b["psi+"], b["psi+"].conj())
    return validate_povm([p1, p2, np.eye(4) - p1 - p2], Tolerance(validation_eps=1e-12))


def rank2_povm(phi: float) -> Povm:
    """M_1 = diag(cos^2 phi, sin^2 phi), M_2 = diag(sin^2 phi, cos^2 phi) in the
    (m+, m-) basis."""
    if not 0.0 <= phi <= math.pi / 2:
        raise DomainError(f"phi={phi} outside [0, pi/2]", code="bad_phi")
    c2, s2 = math.cos(phi) ** 2, math.sin(phi) ** 2
    return validate_povm([np.diag([c2, s2]), np.diag([s2, c2])],
                         Tolerance(validation_eps=1e-12))


@dataclass(frozen=True)
class ElementCosts:
    items: Tuple[Tuple[str, float], ...]

    @classmethod
    def of(cls, *pairs: Tuple[str, float]) -> "ElementCosts":
        for label, c in pairs:
            if not 0.0 <= c <= math.pi:
                raise DomainError(f"cost of {label!r} = {c} outside [0, pi]", code="bad_cost")
        return cls(tuple((str(lbl), float(c)) for lbl, c in pairs))

    @property
    def costs(self) -> np.ndarray:
        return np.array([c for _, c in self.items])


@dataclass(frozen=True)
class EnergySplit:
    total_time: float
    times: Tuple[float, ...]
    total_energy: float
    degenerate: bool = False


def optimal_time_split(costs: ElementCosts, total_time: float) -> EnergySplit:
    """Minimize sum c_i / t_i subject to sum t_i = T.

    Closed form t_i = T sqrt(c_i) / sum_j sqrt(c_j), giving energy
    (sum_j sqrt(c_j))^2 / T. Zero-cost elements get no time.
    """
    if not total_time > 0:
        raise DomainError(f"total_time must be positive, got {total_time}", code="bad_time")
    c = costs.costs
    if c.size == 0 or np.any(c < 0):
        raise DomainError("costs must be a nonempty nonnegative sequence", code="bad_cost")
    roots = np.sqrt(c)
    total = float(roots.sum())
    if total == 0.0:
        times = tuple([total_time / c.size] * c.size)
        return EnergySplit(total_time, times, 0.0, degenerate=True)
    times = tuple(float(x) for x in total_time * roots / total)
    return EnergySplit(total_time, times, total ** 2 / total_time)


def split_energy(costs: Sequence[float], times: Sequence[float]) -> float:
    """sum c_i / t_i for an arbitrary split; elements with c_i = 0 contribute 0."""
    return float(sum(c / t for c, t in zip(costs, times) if c > 0))


def rank2_ideal_cost(phi: float) -> float:
    return phi if phi < math.pi / 4 else math.pi / 2 - phi


def implementation_energy_ratio(phi: float, total_time: float = 1.0) -> float:
    """E_impl / E_ideal for the PBS + BS implementation of the rank-2 POVM."""
    if not 0.0 < phi < math.pi / 2:
        raise DomainError(f"phi={phi} must lie strictly inside (0, pi/2)", code="bad_phi")
    impl = optimal_time_split(ElementCosts.of(("PBS", pbs_optimal_cost()), ("BS", phi)),
                              total_time)
    ideal = rank2_ideal_cost(phi) / total_time
    return impl.total_energy / ideal


def default_phi_grid(points: int = 100) -> np.ndarray:
    return np.linspace(0.05, math.pi / 2 - 0.05, points)


def fig4_rows(phi_grid: Iterable[float], total_time: float = 1.0):
    return [(float(p), implementation_energy_ratio(float(p), total_time)) for p in phi_grid]


def fig4_sweep(phi_grid: Iterable[float], out: Optional[io.TextIOBase] = None,
               total_time: float = 1.0) -> str:
    """Write the ratio sweep as CSV (``phi_rad,ratio``) and return the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["phi_rad", "ratio"])
    for phi, ratio in fig4_rows(phi_grid, total_time):
        writer.writerow([f"{phi:.12g}", f"{ratio:.12g}"])
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text
