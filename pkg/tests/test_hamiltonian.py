import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import SU2_A, SU2_B, SU2_C, SymbolicHamiltonian, random_polynomial_system, su2_chart
from saa.errors import SingularDegenerate
from saa.field_dsl import builtin_system, system_from_config
from saa.hamiltonian import (
    BracketBundle, CotangentPoint, bracket_bundle, classify_point, geometry, lift, poisson_pair, regular_control,
    singular_control, singular_feedback,
)

_PARAMS = {"alpha": 0.6, "beta": 0.8, "gamma": 1.3}
_POINTS = [((0.1, -0.2, 0.3), (0.4, -0.7, 1.1)), ((0.0, 0.0, 0.0), (-0.6, -0.8, 1.0)), ((0.5, 0.3, -0.4), (1.0, 0.2, -0.5))]


@pytest.mark.parametrize("preset", ["heisenberg_drift", "martinet_drift", "su2_left_invariant"])
@pytest.mark.parametrize("q,p", _POINTS)
def test_brackets_against_symbolic(preset, q, p):
    # [DERIVED] canonical Poisson brackets of the lifted Hamiltonians, by sympy
    sys_ = builtin_system(preset, _PARAMS)
    ref = SymbolicHamiltonian(sys_)
    b = bracket_bundle(sys_, CotangentPoint(q, p))
    g = geometry(sys_, np.array(q), np.array(p))
    for key, val in ref.aggregates(q, p).items():
        assert getattr(b, key) == pytest.approx(val, rel=1e-10, abs=1e-12), key
    for i in range(3):
        for j in range(3):
            assert b.hij[i, j] == pytest.approx(ref.pair(i, j, q, p), abs=1e-12)
    for a in range(3):
        for i in range(1, 3):
            assert g.nested[a, i - 1] == pytest.approx(ref.nested(a, i, q, p), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_brackets_random_polynomial_systems(seed):
    rng = np.random.default_rng(100 + seed)
    sys_ = system_from_config(random_polynomial_system(rng))
    ref = SymbolicHamiltonian(sys_)
    q, p = rng.normal(size=3), rng.normal(size=3)
    b = bracket_bundle(sys_, CotangentPoint(q, p))
    for key, val in ref.aggregates(q, p).items():
        assert getattr(b, key) == pytest.approx(val, rel=1e-10, abs=1e-12), key


def test_poisson_pair_matches_bundle():
    sys_ = builtin_system("su2_left_invariant", _PARAMS)
    lam = CotangentPoint((0.2, 0.1, -0.3), (0.5, -1.0, 0.7))
    b = bracket_bundle(sys_, lam)
    for i in range(3):
        assert lift(sys_, lam, i) == pytest.approx(b.hI[i - 1] if i else b.h0)
        for j in range(3):
            assert poisson_pair(sys_, lam, i, j) == pytest.approx(b.hij[i, j], abs=1e-14)
            assert poisson_pair(sys_, lam, i, j) == pytest.approx(-poisson_pair(sys_, lam, j, i), abs=1e-14)
    with pytest.raises(IndexError):
        lift(sys_, lam, 3)


# ------------------------------------------------------------------- SU(2)

@pytest.mark.parametrize("q", [(0.0, 0.0, 0.0), (0.3, -0.4, 1.2), (-1.0, 0.7, 2.5)])
def test_su2_chart_fields_are_left_invariant(q):
    # [DERIVED] d/ds chart(q + s X(q)) = chart(q) E for X the field of E
    sys_ = builtin_system("su2_left_invariant", {"alpha": 0.0, "beta": 0.0, "gamma": 1.0})
    F = sys_.jets(np.array(q))[0]
    U = su2_chart(q)
    eps = 1e-6
    for X, E in ((F[1], SU2_A), (F[2], SU2_B), (F[0], SU2_C)):
        dU = (su2_chart(np.add(q, eps * X)) - su2_chart(np.subtract(q, eps * X))) / (2 * eps)
        np.testing.assert_allclose(dU, U @ E, atol=1e-9)


def test_su2_commutators():
    # [TRIVIAL] [A, B] = C, [B, C] = A, [C, A] = B
    comm = lambda X, Y: X @ Y - Y @ X
    np.testing.assert_allclose(comm(SU2_A, SU2_B), SU2_C, atol=1e-15)
    np.testing.assert_allclose(comm(SU2_B, SU2_C), SU2_A, atol=1e-15)
    np.testing.assert_allclose(comm(SU2_C, SU2_A), SU2_B, atol=1e-15)


@given(st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3), st.lists(st.floats(-2, 2), min_size=3, max_size=3),
       st.floats(-1, 1), st.floats(-1, 1), st.floats(-2, 2))
def test_su2_bracket_table(q, p, alpha, beta, gamma):
    # lifted table {h_A, h_B} = h_C, {h_B, h_C} = h_A, {h_C, h_A} = h_B with h_C = p_z
    sys_ = builtin_system("su2_left_invariant", {"alpha": alpha, "beta": beta, "gamma": gamma})
    b = bracket_bundle(sys_, CotangentPoint(q, p))
    hA, hB, hC = b.hI[0], b.hI[1], p[2]
    assert b.hij[1, 2] == pytest.approx(hC, abs=1e-12)
    assert b.hij[0, 1] == pytest.approx(beta * -hC + gamma * hB, abs=1e-10)
    assert b.hij[0, 2] == pytest.approx(alpha * hC - gamma * hA, abs=1e-10)


# -------------------------------------------------------- closed-form values

@given(st.floats(0.05, 1.0), st.floats(0.05, 1.0), st.floats(-2, 2), st.floats(-2, 2))
def test_heisenberg_hc0c_on_locus(alpha, beta, gamma, hz):
    # [DERIVED] h_c0c = -h_Z^2 sqrt(alpha^2 + beta^2) where |h_I| = 1 and h_0c = 0;
    # with h_Z = 1 this is the closed form -sqrt(alpha^2 + beta^2) [PAPER]
    sys_ = builtin_system("heisenberg_drift", {"alpha": alpha, "beta": beta, "gamma": gamma})
    d = np.hypot(alpha, beta)
    hI = np.array([-alpha, -beta]) / d  # makes h_0c = 0 at q = 0
    b = bracket_bundle(sys_, CotangentPoint((0, 0, 0), (hI[0], hI[1], hz)))
    assert b.h0c == pytest.approx(0.0, abs=1e-12)
    assert b.hc0c == pytest.approx(-hz * hz * d, rel=1e-12, abs=1e-14)
    b1 = bracket_bundle(sys_, CotangentPoint((0, 0, 0), (hI[0], hI[1], 1.0)))
    assert b1.hc0c == pytest.approx(-d, rel=1e-12)


@given(st.floats(0.05, 0.95), st.floats(0, 2 * np.pi))
def test_martinet_hc0c_closed_form(alpha, theta):
    # [PAPER] h_c0c = (alpha / 2) |sin 2 theta| on the seed covector with p_z = -1
    sys_ = builtin_system("martinet_drift", {"alpha": alpha, "beta": 0.3, "gamma": 0.2})
    b = bracket_bundle(sys_, CotangentPoint((0, 0, 0), (np.cos(theta), np.sin(theta), -1.0)))
    assert b.norm_hI == pytest.approx(1.0)
    assert abs(b.hc0c) == pytest.approx(0.5 * alpha * abs(np.sin(2 * theta)), abs=1e-12)


# ------------------------------------------------------- classification

def _bundle(hI, hc0c=1.0, h00c=-0.5):
    hI = np.asarray(hI, dtype=float)
    return BracketBundle(hI, 0.0, np.zeros((3, 3)), 0.0, h00c, hc0c, np.zeros(2))


@pytest.mark.parametrize("hI,kind", [((0.6, 0.8), "SingularCandidate"), ((1.0, 0.1), "Boundary"),
                                     ((0.3, 0.0), "Inactive"), ((1.0 + 5e-10, 0.0), "SingularCandidate")])
def test_classify_point(hI, kind):
    assert classify_point(_bundle(hI)).kind == kind


def test_regular_control():
    np.testing.assert_allclose(regular_control(_bundle((3.0, 4.0))), [0.6, 0.8])
    np.testing.assert_allclose(regular_control(_bundle((0.3, 0.4))), [0.0, 0.0])
    assert regular_control(_bundle((0.6, 0.8))) is None


def test_singular_feedback():
    b = _bundle((0.6, 0.8), hc0c=2.0, h00c=-1.0)
    assert singular_feedback(b) == 0.5
    np.testing.assert_allclose(singular_control(b), [0.3, 0.4])
    with pytest.raises(SingularDegenerate):
        singular_feedback(_bundle((0.6, 0.8), hc0c=1e-12))


def test_cotangent_point_validation():
    lam = CotangentPoint([1, 2], [3, 4])
    np.testing.assert_array_equal(lam.z, [1, 2, 3, 4])
    back = CotangentPoint.from_z(lam.z)
    np.testing.assert_array_equal(back.q, lam.q)
    np.testing.assert_array_equal(back.p, lam.p)
    with pytest.raises(ValueError):
        CotangentPoint([1, 2], [3])
    with pytest.raises(ValueError):
        CotangentPoint([np.nan, 0], [0, 0])
    with pytest.raises(ValueError):
        lam.q[0] = 5.0
