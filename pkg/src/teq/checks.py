"""Randomized invariant suites run by ``teq check``.

Each suite draws from its own generator spawned from the top-level seed, so
the report is reproducible and independent of suite order.
"""

from __future__ import annotations

import math
from typing import Callable, Dict, List, Tuple

import numpy as np

from . import matcore as mc
from . import optics, povm as pv, ucost, usd

# (passed, trials, worst deviation)
SuiteResult = Tuple[bool, int, float]


def _svd_vs_eig(rng) -> SuiteResult:
    worst = 0.0
    for _ in range(20):
        r, c = rng.integers(1, 17, size=2)
        m = rng.standard_normal((r, c)) + 1j * rng.standard_normal((r, c))
        s = mc.svd(m).singular_values
        ev = np.sqrt(np.clip(np.linalg.eigvalsh(mc.dagger(m) @ m), 0, None))[::-1][: s.size]
        worst = max(worst, float(np.max(np.abs(s - ev))))
    return worst <= 1e-8, 20, worst


def _pinv_penrose(rng) -> SuiteResult:
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 9))
        rank = int(rng.integers(1, n))
        a = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
        b = rng.standard_normal((rank, n)) + 1j * rng.standard_normal((rank, n))
        m = a @ b
        p = mc.pinv(m)
        for dev in (m @ p @ m - m, p @ m @ p - p,
                    m @ p - mc.dagger(m @ p), p @ m - mc.dagger(p @ m)):
            worst = max(worst, mc.max_abs(dev))
    return worst <= 1e-7, 20, worst


def _sqrt_square(rng) -> SuiteResult:
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 9))
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        m = a @ mc.dagger(a)
        root = mc.principal_sqrt(m)
        worst = max(worst, mc.max_abs(root @ root - m) / max(1.0, mc.max_abs(m)))
    return worst <= 1e-8, 20, worst


def _maxnorm_conjugation(rng) -> SuiteResult:
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(1, 7))
        u, v = mc.random_unitary(n, rng), mc.random_unitary(n, rng)
        worst = max(worst, abs(ucost.maxnorm_unitary(u) - ucost.maxnorm_unitary(v @ u @ mc.dagger(v))))
    return worst <= 1e-9, 20, worst


def _partial_u_dominance(rng) -> SuiteResult:
    worst = 0.0
    trials = 0
    for _ in range(10):
        n, K = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        stack = ucost.random_stack(n, K, rng)
        best = ucost.partial_u_bounds(stack).best
        for _ in range(10):
            u = ucost.random_completion(stack.stacked, rng)
            worst = max(worst, best - ucost.maxnorm_unitary(u))
            trials += 1
    return worst <= 1e-9, trials, max(worst, 0.0)


def _sv_conjugation(rng) -> SuiteResult:
    worst = 0.0
    for _ in range(20):
        n, K = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        stack = ucost.random_stack(n, K, rng)
        q = mc.random_unitary(n, rng)
        a = ucost.partial_u_bounds(stack).sv
        b = ucost.partial_u_bounds(ucost.conjugate_stack(stack, q)).sv
        worst = max(worst, abs(a - b))
    return worst <= 1e-9, 20, worst


def _canonical_ordering(rng) -> SuiteResult:
    worst = -math.inf
    for _ in range(20):
        n, K = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        b = ucost.partial_u_bounds(ucost.canonical_stack(ucost.random_stack(n, K, rng)))
        worst = max(worst, b.sv - b.diag1)
    return worst <= 1e-12, 20, max(worst, 0.0)


def _diagonal_completion(rng) -> SuiteResult:
    worst = 0.0
    for _ in range(20):
        n, K = int(rng.integers(1, 5)), int(rng.integers(2, 4))
        stack = ucost.random_diagonal_stack(n, K, rng)
        u = ucost.complete_unitary_diagonal(stack)
        d = np.diag(stack.top).real
        expected = max(mc.safe_acos(x) for x in d)
        worst = max(worst, abs(ucost.maxnorm_unitary(u) - expected),
                    mc.max_abs(u[:, :n] - stack.stacked))
    return worst <= 1e-9, 20, worst


def _povm_soundness(rng) -> SuiteResult:
    # compared on cosines: acos turns 1e-16 noise near angle 0 into 1e-8 rad
    worst = 0.0
    trials = 0
    for t in range(10):
        n, K = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        P = pv.random_povm(n, K, rng, kind="diagonal" if t % 2 else "wishart")
        rep = pv.povm_cost(P, pv.EnumerationBudget(20000))
        worst = max(worst, math.cos(rep.upper) - math.cos(rep.lower))
        g = pv.embed_kraus(P).stacked
        for _ in range(5):
            vs = [mc.random_unitary(n, rng) for _ in range(K)]
            gv = np.vstack([v @ g[i * n:(i + 1) * n] for i, v in enumerate(vs)])
            u = ucost.random_completion(gv, rng)[rng.permutation(n * K)]
            worst = max(worst, math.cos(ucost.maxnorm_unitary(u)) - math.cos(rep.lower))
            trials += 1
    return worst <= 1e-9, trials, max(worst, 0.0)


def _povm_covariance(rng) -> SuiteResult:
    worst = 0.0
    for _ in range(10):
        n, K = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        P = pv.random_povm(n, K, rng)
        w = mc.random_unitary(n, rng)
        Q = pv.validate_povm([w @ m @ mc.dagger(w) for m in P.elements], mc.Tolerance(1e-8))
        worst = max(worst,
                    abs(pv.sigma_n_bound(P) - pv.sigma_n_bound(Q)),
                    abs(pv.element_order_cost(P) - pv.element_order_cost(Q)))
    return worst <= 1e-7, 10, worst


def _bs_unitary(rng) -> SuiteResult:
    worst = 0.0
    for _ in range(50):
        chi = rng.uniform(-math.pi, math.pi)
        a = rng.uniform(0, math.pi / 2)
        ph1, ph2 = rng.uniform(-math.pi, math.pi, 2)
        bs = optics.BeamSplitter(chi, math.cos(a) * np.exp(1j * ph1), math.sin(a) * np.exp(1j * ph2))
        worst = max(worst, mc.unitarity_deviation(optics.bs_unitary(bs)))
    return worst <= 1e-10, 50, worst


def _time_split(rng) -> SuiteResult:
    worst = -math.inf
    for _ in range(10):
        k = int(rng.integers(1, 5))
        c = rng.uniform(0, math.pi, k)
        T = float(rng.uniform(0.1, 10))
        opt = optics.optimal_time_split(optics.ElementCosts.of(*[(str(i), x) for i, x in enumerate(c)]), T)
        for t in rng.dirichlet(np.ones(k), size=200) * T:
            worst = max(worst, opt.total_energy - optics.split_energy(c, t))
    return worst <= 1e-9, 2000, max(worst, 0.0)


def _usd_laws(rng) -> SuiteResult:
    worst = 0.0
    for _ in range(5):
        inten = float(rng.choice(usd.DEFAULT_INTENSITIES))
        k = int(rng.integers(2, 31))
        fam = usd.coherent_family(usd.CoherentFamilySpec(math.sqrt(inten), k))
        laws = usd.usd_laws(usd.optimal_usd_povm(fam), fam)
        worst = max(worst, laws["completeness"], laws["equal_probability"], laws["wrong_state"])
    return worst <= 1e-7, 5, worst


SUITES: Dict[str, Callable] = {
    "matcore.svd_vs_eig": _svd_vs_eig,
    "matcore.pinv_penrose": _pinv_penrose,
    "matcore.sqrt_square": _sqrt_square,
    "ucost.maxnorm_conjugation": _maxnorm_conjugation,
    "ucost.partial_u_dominance": _partial_u_dominance,
    "ucost.sv_conjugation": _sv_conjugation,
    "ucost.canonical_ordering": _canonical_ordering,
    "ucost.diagonal_completion": _diagonal_completion,
    "povm.soundness": _povm_soundness,
    "povm.basis_covariance": _povm_covariance,
    "optics.bs_unitary": _bs_unitary,
    "optics.time_split": _time_split,
    "usd.structural_laws": _usd_laws,
}


def run_checks(seed: int = 0) -> dict:
    children = np.random.SeedSequence(seed).spawn(len(SUITES))
    details: List[dict] = []
    for (name, suite), child in zip(SUITES.items(), children):
        try:
            ok, trials, worst = suite(np.random.default_rng(child))
            details.append({"name": name, "passed": bool(ok), "trials": trials,
                            "worst": float(worst)})
        except mc.TeqError as exc:
            details.append({"name": name, "passed": False, "trials": 0, "error": str(exc)})
    passed = sum(d["passed"] for d in details)
    return {"seed": seed, "passed": passed, "failed": len(details) - passed, "details": details}
