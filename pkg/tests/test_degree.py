import numpy as np
import pytest

from nilcoh import algebra
from nilcoh.degree import (
    BoundaryTooClose,
    area_formula_check,
    asymptotic_degree,
    local_degree,
    qi_distortion_probe,
)
from nilcoh.group import BallSpec
from nilcoh.maps import map_from_texts, normalize_to_y0

R1 = algebra.abelian(1)
R2 = algebra.abelian(2)
H3 = algebra.heisenberg3()


def test_identity_degree():
    ident = map_from_texts(R2, R2, ["x1", "x2"])
    res = local_degree(ident, 2.0, (0.3, -0.1))
    assert res.value == 1
    assert res.preimage_count == 1
    assert res.stable_under_refinement
    assert res.min_jacobian_margin == pytest.approx(1.0)


def test_negation_degree():
    neg = map_from_texts(R1, R1, ["-x1"])
    res = local_degree(neg, 2.0, (0.5,))
    assert res.value == -1
    assert res.preimage_count == 1


def test_monotone_perturbed_identity_degree():
    m = map_from_texts(R1, R1, ["x1 + sin(x1)"])
    res = local_degree(m, 10.0, (0.5,))
    assert res.value == 1
    assert res.preimage_count == 1
    # bisection oracle for the unique preimage
    lo, hi = -10.0, 10.0
    for _ in range(80):
        mid = (lo + hi) / 2
        if mid + np.sin(mid) < 0.5:
            lo = mid
        else:
            hi = mid
    assert res.preimages[0][0] == pytest.approx(lo, abs=1e-6)


def test_folding_map_has_multiple_preimages():
    # x^3 - 2x has three preimages of 0.1 in (-2, 2): signs +, -, + -> degree 1
    m = map_from_texts(R1, R1, ["x1^3 - 2*x1"])
    res = local_degree(m, 2.0, (0.1,), grid_density=16)
    assert res.preimage_count == 3
    assert res.value == 1
    assert abs(res.value) <= res.preimage_count
    roots = sorted(np.roots([1.0, 0.0, -2.0, -0.1]).real)
    got = sorted(p[0] for p in res.preimages)
    assert np.allclose(got, roots, atol=1e-6)


def test_dimension_mismatch_rejected():
    m = map_from_texts(R1, R2, ["x1", "x1"])
    with pytest.raises(ValueError):
        local_degree(m, 1.0, (0.0, 0.0))


def test_boundary_too_close():
    ident = map_from_texts(R1, R1, ["x1"])
    with pytest.raises(BoundaryTooClose):
        local_degree(ident, 2.0, (2.0,))


def test_homotopy_invariance_small_perturbation():
    # straight-line homotopy between the identity and a 0.1-perturbation
    for t in np.linspace(0.0, 1.0, 5):
        m = map_from_texts(R1, R1, [f"x1 + {0.1 * t}*sin(x1)"])
        res = local_degree(m, 2.0, (0.5,))
        assert res.value == 1


def test_basepoint_invariance_same_component():
    m = map_from_texts(R1, R1, ["x1 + sin(x1)"])
    d1 = local_degree(m, 10.0, (0.5,)).value
    d2 = local_degree(m, 10.0, (1.5,)).value
    assert d1 == d2 == 1


def test_excision_shrinking_window():
    m = map_from_texts(R1, R1, ["x1 + sin(x1)"])
    big = local_degree(m, 10.0, (0.5,))
    small = local_degree(m, 2.0, (0.5,))
    assert {tuple(np.round(p, 6)) for p in big.preimages} == {
        tuple(np.round(p, 6)) for p in small.preimages
    }
    assert big.value == small.value


def test_area_formula_cube():
    m = map_from_texts(R1, R1, ["x1^3"])
    out = area_formula_check(m, 1.0, samples=40000, seed=11)
    assert out["signed_integral"] == pytest.approx(2.0, abs=3 * out["signed_integral_stderr"])
    assert abs(out["residual"]) <= 3.0 * max(out["combined_stderr"], 1e-6)


def test_area_formula_identity_and_negation():
    ident = map_from_texts(R1, R1, ["x1"])
    out = area_formula_check(ident, 1.5, samples=5000, seed=3)
    assert out["signed_integral"] == pytest.approx(3.0, abs=1e-9)
    assert out["degree_integral"] == pytest.approx(3.0, rel=1e-3)

    neg = map_from_texts(R1, R1, ["-x1"])
    out = area_formula_check(neg, 1.0, samples=5000, seed=3)
    assert out["signed_integral"] == pytest.approx(-2.0, abs=1e-9)
    assert out["degree_integral"] == pytest.approx(-2.0, rel=1e-3)
    assert out["unsigned_integral"] == pytest.approx(2.0, abs=1e-9)


def test_unsigned_bound():
    m = map_from_texts(R1, R1, ["sin(x1)"])
    out = area_formula_check(m, 5.0, samples=40000, seed=7)
    assert out["unsigned_integral"] >= abs(out["signed_integral"]) - 3 * out["combined_stderr"]


def test_asymptotic_degree_identity():
    ident = map_from_texts(H3, H3, ["x1", "x2", "x3"])
    tr = asymptotic_degree(ident, radii=[2.0, 4.0, 8.0], samples=2000, seed=1)
    assert tr.ratios == [1.0, 1.0, 1.0]
    assert tr.stderrs == [0.0, 0.0, 0.0]
    assert tr.verdict == "positive-asymptotic-degree"
    assert tr.tau[0] == pytest.approx(tr.ball_volumes[0])


def test_asymptotic_degree_doubling_automorphism():
    m = map_from_texts(H3, H3, ["2*x1", "x2", "2*x3"])
    tr = asymptotic_degree(m, radii=[2.0, 4.0, 8.0, 16.0, 32.0], samples=5000, seed=1)
    for ratio, se in zip(tr.ratios, tr.stderrs):
        assert abs(ratio - 4.0) <= 3.0 * se
    assert tr.verdict == "positive-asymptotic-degree"


def test_asymptotic_degree_sine_vanishes():
    # the true ratio is sin(R)/R -> 0; the verdict is a finite-schedule
    # heuristic and is not asserted here, only the magnitude bound
    m = map_from_texts(R1, R1, ["sin(x1)"])
    tr = asymptotic_degree(m, radii=[4.0, 8.0, 16.0, 32.0, 64.0], samples=40000, seed=1)
    want = np.sin(64.0) / 64.0
    assert tr.ratios[-1] == pytest.approx(want, abs=4 * tr.stderrs[-1])
    assert abs(tr.ratios[-1]) <= 0.05


def test_asymptotic_degree_requires_equal_dims():
    m = map_from_texts(R1, R2, ["x1", "x1"])
    with pytest.raises(ValueError):
        asymptotic_degree(m, radii=[2.0], samples=10, seed=0)


def test_qi_distortion_probe_identity():
    ident = map_from_texts(H3, H3, ["x1", "x2", "x3"])
    out = qi_distortion_probe(ident, radius=4.0, pairs=500, seed=0)
    assert out["ratio_min"] == pytest.approx(1.0, abs=1e-9)
    assert out["ratio_max"] == pytest.approx(1.0, abs=1e-9)


def test_degree_result_window_field():
    ident = map_from_texts(R1, R1, ["x1"])
    res = local_degree(ident, BallSpec(3.0), (0.25,))
    assert res.window.radius == 3.0
    assert res.requested_target == (0.25,)
