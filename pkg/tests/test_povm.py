import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import best_row_selection, pooled_sigma_n
from teq import matcore as mc
from teq import optics, ucost
from teq import povm as pv

S = 1 / math.sqrt(2)
PHI = math.pi / 6

IDENTITY = pv.validate_povm([np.eye(2)])
PROJECTIVE = pv.validate_povm([np.diag([1.0, 0]), np.diag([0, 1.0])])


# -- validation and JSON ---------------------------------------------------

def test_validate_accepts_identity_and_projective():
    assert IDENTITY.K == 1 and IDENTITY.n == 2
    assert PROJECTIVE.K == 2


def test_validate_reports_completeness_magnitude():
    with pytest.raises(pv.PovmValidationError) as exc:
        pv.validate_povm([np.eye(2) * 0.6, np.eye(2) * 0.6])
    assert exc.value.code == "invalid_povm"
    assert any("2.000e-01" in v for v in exc.value.violations)


def test_validate_lists_every_violation():
    with pytest.raises(pv.PovmValidationError) as exc:
        pv.validate_povm([np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])])
    assert len(exc.value.violations) == 1
    with pytest.raises(pv.PovmValidationError) as exc:
        pv.validate_povm([np.diag([1.0, 1.0]), np.eye(3)])
    assert "shape" in exc.value.violations[0]
    with pytest.raises(pv.PovmValidationError):
        pv.validate_povm([])
    with pytest.raises(pv.PovmValidationError):
        pv.validate_povm([np.array([[0.5, 0.2], [0.0, 0.5]]), np.array([[0.5, -0.2], [0, 0.5]])])


def test_povm_json_round_trip():
    p = optics.rank2_povm(0.4)
    back = pv.Povm.from_json(p.to_json())
    assert back.n == 2 and all(np.allclose(a, b) for a, b in zip(back.elements, p.elements))
    with pytest.raises(mc.DomainError):
        pv.Povm.from_json({"n": 3, "elements": p.to_json()["elements"]})
    with pytest.raises(mc.DomainError):
        pv.Povm.from_json({"n": 2})


# -- embedding and element ordering ---------------------------------------

def test_embed_examples():
    assert np.allclose(pv.embed_kraus(IDENTITY).stacked, np.eye(2))
    blocks = pv.embed_kraus(PROJECTIVE).blocks
    assert np.allclose(blocks[0], np.diag([1, 0])) and np.allclose(blocks[1], np.diag([0, 1]))
    r2 = pv.embed_kraus(optics.rank2_povm(PHI)).blocks
    assert np.allclose(r2[0], np.diag([math.sqrt(3) / 2, 0.5]))
    assert np.allclose(r2[1], np.diag([0.5, math.sqrt(3) / 2]))


def test_embed_order_and_errors():
    swapped = pv.embed_kraus(PROJECTIVE, order=[1, 0]).blocks
    assert np.allclose(swapped[0], np.diag([0, 1]))
    with pytest.raises(mc.DomainError):
        pv.embed_kraus(PROJECTIVE, order=[0, 0])


def test_element_order_cost_examples():
    assert pv.element_order_cost(IDENTITY) == 0.0
    assert pv.element_order_cost(optics.singlet_povm()) == pytest.approx(math.pi / 2, abs=1e-12)
    assert pv.element_order_cost(optics.rank2_povm(PHI)) == pytest.approx(math.pi / 3, abs=1e-12)


def test_element_order_cost_equals_best_embedding():
    p = optics.rank2_povm(0.3)
    costs = []
    for order in ([0, 1], [1, 0]):
        costs.append(ucost.exact_cost_hermitian(pv.embed_kraus(p, order)))
    assert pv.element_order_cost(p) == pytest.approx(min(costs), abs=1e-12)


# -- lower bounds ----------------------------------------------------------

def test_method1_examples():
    assert pv.method1_bound(IDENTITY) == 0.0
    assert pv.method1_bound(optics.singlet_povm()) == pytest.approx(math.pi / 4, abs=1e-12)


def test_corollary_examples():
    assert pv.column_corollary_bound(optics.singlet_povm()) == pytest.approx(math.pi / 4, abs=1e-12)
    assert pv.column_corollary_bound(IDENTITY) == 0.0
    trine_like = pv.validate_povm([np.eye(2) / 3] * 3)
    assert pv.column_corollary_bound(trine_like) is None


def test_corollary_never_beats_method1():
    rng = np.random.default_rng(8)
    for _ in range(20):
        p = pv.random_povm(3, 3, rng)
        c = pv.column_corollary_bound(p)
        if c is not None:
            assert c <= pv.method1_bound(p) + 1e-12


def test_sigma_n_examples():
    assert pv.sigma_n_bound(PROJECTIVE) == 0.0
    assert pv.sigma_n_bound(IDENTITY) == 0.0
    for phi in (0.1, 0.5, 0.7):
        assert pv.sigma_n_bound(optics.rank2_povm(phi)) == pytest.approx(phi, abs=1e-12)


def test_sigma_n_matches_mpmath_pool():
    rng = np.random.default_rng(9)
    for _ in range(5):
        p = pv.random_povm(3, 3, rng)
        assert pv.sigma_n(p) == pytest.approx(pooled_sigma_n(p.sqrt_elements(), p.n), abs=1e-12)


# -- canonical rows and certificates --------------------------------------

def test_canonical_row_norms():
    rng = np.random.default_rng(10)
    for _ in range(10):
        cr = pv.canonical_rows(pv.random_povm(4, 3, rng))
        assert np.max(np.abs(np.linalg.norm(cr.rows, axis=1) - cr.norms)) <= 1e-9


def test_certificate_rank2_small_phi():
    res = pv.certificate_search(optics.rank2_povm(PHI))
    cert = res.certificate
    assert cert.hermitian and cert.reaches_sigma_n
    assert sorted(cert.rows) == [(0, 0), (1, 0)]
    assert np.allclose(cert.block, math.cos(PHI) * np.eye(2))


def test_certificate_rank2_large_phi():
    phi = math.pi / 3
    cert = pv.certificate_search(optics.rank2_povm(phi)).certificate
    assert cert.hermitian and np.allclose(cert.block, math.sin(phi) * np.eye(2))
    assert mc.safe_acos(cert.sigma_min) == pytest.approx(math.pi / 2 - phi, abs=1e-12)


def test_certificate_projective_is_identity():
    cert = pv.certificate_search(PROJECTIVE).certificate
    assert cert.hermitian and np.allclose(cert.block, np.eye(2))


def test_certificate_found_through_phased_permutation():
    rng = np.random.default_rng(12)
    for _ in range(20):
        # one dominant element per column puts the top n pooled values in
        # distinct columns, so sigma_n is reachable by a diagonal selection
        w = rng.random((3, 3))
        w = 0.2 * w / w.sum(axis=0)
        w[rng.integers(0, 3, size=3), np.arange(3)] += 0.8
        perm = np.eye(3)[rng.permutation(3)] * np.exp(2j * np.pi * rng.random(3))
        p = pv.validate_povm([perm @ np.diag(x) @ mc.dagger(perm) for x in w])
        rep = pv.povm_cost(p)
        cert = rep.certificate
        assert rep.exact and cert.hermitian and cert.reaches_sigma_n
        assert mc.is_psd(cert.block, mc.Tolerance(1e-9))
        assert rep.cost == pytest.approx(pv.sigma_n_bound(p), abs=1e-9)


def test_search_matches_brute_force_optimum():
    rng = np.random.default_rng(13)
    for t in range(25):
        n, K = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        p = pv.random_povm(n, K, rng, kind="diagonal" if t % 2 else "wishart")
        res = pv.certificate_search(p)
        rows = pv.canonical_rows(p).rows
        brute = best_row_selection(rows, n)
        assert not res.exhausted
        assert res.certificate.sigma_min == pytest.approx(brute, abs=1e-7)
        # no n-row selection beats the nth pooled singular value
        assert brute <= pv.sigma_n(p) + 1e-9


def test_budget_exhaustion_is_flagged():
    p = pv.random_povm(4, 4, np.random.default_rng(14))
    res = pv.certificate_search(p, pv.EnumerationBudget(3))
    assert res.exhausted
    rep = pv.povm_cost(p, pv.EnumerationBudget(3))
    assert rep.exhausted and rep.lower <= rep.upper + 1e-9


def test_budget_validation():
    with pytest.raises(mc.DomainError):
        pv.EnumerationBudget(0)


# -- reports ---------------------------------------------------------------

@pytest.mark.parametrize("phi", [0.1 * k for k in range(1, 16)])
def test_rank2_exact_law(phi):
    rep = pv.povm_cost(optics.rank2_povm(phi))
    expected = phi if phi < math.pi / 4 else math.pi / 2 - phi
    assert rep.exact and rep.cost == pytest.approx(expected, abs=1e-9)


def test_identity_report():
    rep = pv.povm_cost(IDENTITY)
    assert rep.lower == rep.upper == 0.0 and rep.exact


def test_singlet_report():
    rep = pv.povm_cost(optics.singlet_povm())
    assert rep.lower >= math.pi / 4 - 1e-9
    assert rep.method1 == pytest.approx(math.pi / 4, abs=1e-12)
    assert rep.upper == pytest.approx(math.pi / 2, abs=1e-12)
    assert not rep.exact and rep.cost is None


def test_report_json_schema():
    obj = pv.povm_cost(optics.rank2_povm(PHI)).to_json()
    assert set(obj) == {"lower_rad", "upper_rad", "exact", "cost_rad", "method1_rad",
                        "sigma_n_rad", "element_order_rad", "certificate", "exhausted"}
    assert set(obj["certificate"]) == {"rows", "sigma_min", "hermitian"}
    assert obj["lower_rad"] == pytest.approx(0.5235987755982988, abs=1e-9)


def test_report_invariants_on_random_povms():
    rng = np.random.default_rng(15)
    for t in range(40):
        p = pv.random_povm(int(rng.integers(1, 5)), int(rng.integers(1, 5)), rng,
                           kind="diagonal" if t % 2 else "wishart")
        rep = pv.povm_cost(p)
        assert rep.lower == pytest.approx(max(rep.method1, rep.sigma_n_bound), abs=1e-12) or (
            rep.exact and rep.certificate is not None)
        assert math.cos(rep.upper) <= math.cos(rep.lower) + 1e-9
        if rep.exact and rep.certificate is not None and rep.certificate.hermitian:
            assert mc.safe_acos(rep.certificate.sigma_min) == pytest.approx(rep.lower, abs=1e-7)


# -- properties ------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 4), K=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_lower_bound_dominated_by_relabeled_completions(n, K, seed):
    rng = np.random.default_rng(seed)
    p = pv.random_povm(n, K, rng, kind="diagonal")
    lower = pv.povm_cost(p, pv.EnumerationBudget(20000)).lower
    g = pv.embed_kraus(p).stacked
    for _ in range(8):
        vs = [mc.random_unitary(n, rng) for _ in range(K)]
        gv = np.vstack([v @ g[i * n:(i + 1) * n] for i, v in enumerate(vs)])
        u = ucost.random_completion(gv, rng)[rng.permutation(n * K)]
        # compared on cosines to keep acos ill-conditioning at 0 out of it
        assert math.cos(ucost.maxnorm_unitary(u)) <= math.cos(lower) + 1e-9


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 4), K=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_basis_covariance(n, K, seed):
    rng = np.random.default_rng(seed)
    p = pv.random_povm(n, K, rng)
    w = mc.random_unitary(n, rng)
    q = pv.validate_povm([w @ m @ mc.dagger(w) for m in p.elements], mc.Tolerance(1e-8))
    assert pv.sigma_n(q) == pytest.approx(pv.sigma_n(p), abs=1e-9)
    best = lambda x: max(mc.sigma_min(r) for r in x.sqrt_elements())
    assert best(q) == pytest.approx(best(p), abs=1e-9)
