import cmath
import io
import math

import numpy as np
import pytest

from oracles import time_split_energy
from teq import matcore as mc
from teq import optics, povm as pv
from teq.ucost import maxnorm_unitary

S = 1 / math.sqrt(2)


# -- beam splitters --------------------------------------------------------

def test_bs_unitary_examples():
    assert np.allclose(optics.bs_unitary(optics.BeamSplitter(0, 1, 0)), np.eye(2))
    u = optics.bs_unitary(optics.BeamSplitter(0, S, S))
    vals = np.linalg.eigvals(u)
    assert sorted(vals, key=lambda z: z.imag) == pytest.approx([(1 - 1j) * S, (1 + 1j) * S])
    assert maxnorm_unitary(u) == pytest.approx(math.pi / 4, abs=1e-12)
    swap = optics.bs_unitary(optics.BeamSplitter(0, 0, 1))
    assert np.allclose(swap, [[0, 1j], [1j, 0]])
    assert maxnorm_unitary(swap) == pytest.approx(math.pi / 2, abs=1e-12)


def test_bs_rejects_bad_amplitudes():
    with pytest.raises(mc.DomainError):
        optics.BeamSplitter(0, 0.5, 0.5)


def test_bs_unitary_random_parameters():
    rng = np.random.default_rng(20)
    for _ in range(200):
        a = rng.uniform(0, math.pi / 2)
        r = math.cos(a) * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        t = math.sin(a) * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        u = optics.bs_unitary(optics.BeamSplitter(rng.uniform(-math.pi, math.pi), r, t))
        assert mc.unitarity_deviation(u) <= 1e-10


def test_bs_optimal_cost_examples():
    assert optics.bs_optimal_cost(1.0) == 0.0
    assert optics.bs_optimal_cost(S) == pytest.approx(math.pi / 4, abs=1e-12)
    assert optics.bs_optimal_cost(math.cos(0.3)) == pytest.approx(0.3, abs=1e-12)
    with pytest.raises(mc.DomainError):
        optics.bs_optimal_cost(1.2)


@pytest.mark.parametrize("mag", [0.2, 0.5, S, 0.9])
def test_bs_optimal_cost_is_grid_minimum(mag):
    grid = optics.chi_grid(100)
    t = math.sqrt(1 - mag ** 2)
    best = min(
        maxnorm_unitary(optics.bs_unitary(optics.BeamSplitter(chi, mag * cmath.exp(1j * th), t)))
        for chi in grid for th in grid
    )
    assert best == pytest.approx(optics.bs_optimal_cost(mag), abs=1e-6)


# -- PBS and Bell analyzers -------------------------------------------------

def test_pbs_costs():
    assert optics.pbs_optimal_cost() == pytest.approx(math.pi / 2, abs=1e-12)
    assert maxnorm_unitary(optics.pbs_unitary(math.pi / 2)) == pytest.approx(math.pi / 2, abs=1e-12)
    assert maxnorm_unitary(optics.pbs_unitary(0.0)) == pytest.approx(math.pi, abs=1e-12)
    assert optics.pbs_grid_cost(100) == pytest.approx(math.pi / 2, abs=1e-6)


def test_pbs_spectrum_at_optimum():
    vals = np.linalg.eigvals(optics.pbs_unitary(math.pi / 2))
    assert sorted(vals.imag) == pytest.approx([-1, 1, 1, 1])


def test_chi_grid_covers_half_open_interval():
    g = optics.chi_grid(100)
    assert g.size == 100 and g[-1] == pytest.approx(math.pi) and g[0] > -math.pi


def test_bell_two_state_unitary():
    u = optics.bell_two_state_unitary()
    b = optics.bell_states()
    assert mc.is_unitary(u)
    assert np.allclose(u[0], b["psi-"].conj()) and np.allclose(u[1], b["psi+"].conj())
    assert np.allclose(u @ b["psi-"], [1, 0, 0, 0])
    assert maxnorm_unitary(u) == pytest.approx(math.pi / 4, abs=1e-12)


def test_bell_povms_are_valid():
    assert optics.singlet_povm().K == 2
    assert optics.two_bell_povm().K == 3
    assert pv.povm_cost(optics.two_bell_povm()).lower == pytest.approx(math.pi / 4, abs=1e-7)


def test_rank2_povm_domain():
    with pytest.raises(mc.DomainError):
        optics.rank2_povm(2.0)


# -- time split ------------------------------------------------------------

def test_time_split_closed_form_example():
    split = optics.optimal_time_split(
        optics.ElementCosts.of(("PBS", math.pi / 2), ("BS", math.pi / 4)), 1.0)
    expected = (math.sqrt(math.pi / 2) + math.sqrt(math.pi / 4)) ** 2
    assert split.total_energy == pytest.approx(expected, abs=1e-12)
    assert split.total_energy == pytest.approx(4.577, abs=1e-3)
    assert split.total_energy == pytest.approx(
        time_split_energy([math.pi / 2, math.pi / 4], 1.0), rel=1e-8)
    assert sum(split.times) == pytest.approx(1.0, abs=1e-12)


def test_time_split_single_and_zero_cost():
    one = optics.optimal_time_split(optics.ElementCosts.of(("a", 0.7)), 2.0)
    assert one.total_energy == pytest.approx(0.35) and one.times == (2.0,)
    pair = optics.optimal_time_split(optics.ElementCosts.of(("a", 0.7), ("b", 0.0)), 2.0)
    assert pair.times == (2.0, 0.0) and pair.total_energy == pytest.approx(0.35)


def test_time_split_degenerate_and_errors():
    z = optics.optimal_time_split(optics.ElementCosts.of(("a", 0.0), ("b", 0.0)), 1.0)
    assert z.degenerate and z.total_energy == 0.0
    with pytest.raises(mc.DomainError):
        optics.optimal_time_split(optics.ElementCosts.of(("a", 1.0)), 0.0)
    with pytest.raises(mc.DomainError):
        optics.ElementCosts.of(("a", 4.0))


def test_time_split_beats_random_splits():
    rng = np.random.default_rng(21)
    for _ in range(5):
        c = rng.uniform(0, math.pi, int(rng.integers(2, 5)))
        opt = optics.optimal_time_split(optics.ElementCosts.of(*[(str(i), x) for i, x in enumerate(c)]), 3.0)
        trials = rng.dirichlet(np.ones(c.size), size=10_000) * 3.0
        energies = np.sum(c / trials, axis=1)
        assert np.min(energies) >= opt.total_energy - 1e-9


def test_energy_time_product_invariant():
    costs = optics.ElementCosts.of(("a", 1.1), ("b", 0.4), ("c", 2.0))
    e1 = optics.optimal_time_split(costs, 1.0).total_energy
    e7 = optics.optimal_time_split(costs, 7.0).total_energy * 7.0
    assert e7 == pytest.approx(e1, rel=1e-12)


# -- ratio and sweep -------------------------------------------------------

def test_ratio_at_quarter_pi():
    r = optics.implementation_energy_ratio(math.pi / 4)
    assert r == pytest.approx((1 + math.sqrt(2)) ** 2, rel=1e-12)
    assert r == pytest.approx(5.828, abs=1e-3)


def test_ratio_independent_of_total_time():
    for phi in optics.default_phi_grid(20):
        assert optics.implementation_energy_ratio(phi, 1.0) == pytest.approx(
            optics.implementation_energy_ratio(phi, 10.0), abs=1e-12)


def test_ratio_diverges_at_small_phi():
    assert optics.implementation_energy_ratio(0.01) > optics.implementation_energy_ratio(0.1)
    assert optics.implementation_energy_ratio(1e-6) > 1e5


def test_ratio_domain():
    for bad in (0.0, math.pi / 2, -1.0):
        with pytest.raises(mc.DomainError):
            optics.implementation_energy_ratio(bad)


def test_fig4_sweep_small_grid():
    grid = [math.pi / 8, math.pi / 4, 3 * math.pi / 8]
    buf = io.StringIO()
    text = optics.fig4_sweep(grid, out=buf)
    assert buf.getvalue() == text
    lines = text.split("\n")
    assert lines[0] == "phi_rad,ratio" and lines[-1] == "" and len(lines) == 5
    ratios = [float(line.split(",")[1]) for line in lines[1:4]]
    assert all(math.isfinite(r) and r > 0 for r in ratios)
    assert ratios[0] > ratios[1] < ratios[2]
    assert "\r" not in text


def test_fig4_sweep_empty_grid():
    assert optics.fig4_sweep([]) == "phi_rad,ratio\n"


def test_default_phi_grid():
    g = optics.default_phi_grid()
    assert g.size == 100 and g[0] == pytest.approx(0.05) and g[-1] == pytest.approx(math.pi / 2 - 0.05)
