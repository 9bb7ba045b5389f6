"""Series-solver tests: exact recursion, constraint propagation, oracles."""

from fractions import Fraction as Fr

import numpy as np
import pytest

from spinorlab import cauchy, geometry
from spinorlab.cauchy import (
    CauchyData,
    JetSeries,
    bracket_series,
    cauchy_data,
    cauchy_data_from_spec,
    constraint_residual,
    ricci_series,
    series_to_function,
    series_to_spec,
    solve_ricci_ivp,
    verify_ricci_flat,
)


def _potential_tables(phi_terms, x_extra, order):
    """Divergence-free symmetric tables from a scalar potential in (y1, y2).

    a_11 = phi_y2y2, a_12 = -phi_y1y2, a_22 = phi_y1y1 kill both divergence
    rows identically; x-only extras never touch the constraint.
    """
    phi = JetSeries.from_table(5, order + 2, phi_terms)
    picks = (phi.diff(4).diff(4), -phi.diff(3).diff(4), phi.diff(3).diff(3))
    tables = []
    for s, extra in zip(picks, x_extra):
        t = {e[1:]: c for e, c in s.terms.items()}
        for e, c in extra.items():
            t[e] = t.get(e, 0) + c
        tables.append(t)
    return tables


def _generic_data(order=6):
    phi = {
        (0, 1, 0, 2, 1): Fr(1, 2),
        (0, 0, 1, 1, 2): Fr(1, 3),
        (0, 0, 0, 2, 2): Fr(1, 5),
        (0, 1, 1, 3, 0): Fr(-1, 4),
        (0, 0, 0, 0, 4): Fr(1, 7),
    }
    a_extra = [{(2, 0, 0, 0): Fr(1, 2)}, {(1, 1, 0, 0): Fr(1, 3)},
               {(0, 2, 0, 0): Fr(-1, 5)}]
    psi = {(0, 0, 1, 2, 0): Fr(1, 6), (0, 1, 0, 1, 1): Fr(-1, 2)}
    b_extra = [{}, {(0, 1, 0, 0): Fr(1, 9)}, {}]
    return cauchy_data(2, order, _potential_tables(phi, a_extra, order),
                       _potential_tables(psi, b_extra, order))


class TestJetSeries:
    def test_rational_coercion_and_lookup(self):
        s = JetSeries.from_table(2, 4, {(1, 0): "1/3", (0, 2): 2})
        assert s.coefficient((1, 0)) == Fr(1, 3)
        assert s.coefficient((0, 2)) == Fr(2)
        assert s.coefficient((5, 5)) == 0

    def test_construction_drops_high_degree_terms(self):
        s = JetSeries(2, 2, {(3, 0): Fr(1), (1, 1): Fr(1)})
        assert s.coefficient((3, 0)) == 0 and s.coefficient((1, 1)) == 1

    def test_multiplication_truncates_by_total_degree(self):
        s = JetSeries.from_table(2, 3, {(1, 0): 1, (0, 1): 1})
        sq = s * s
        cube = sq * s
        assert cube.coefficient((2, 1)) == 3
        assert (cube * s).coefficient((2, 2)) == 0  # degree 4 > order 3

    def test_diff_lowers_order_by_one(self):
        s = JetSeries.from_table(3, 5, {(2, 1, 0): Fr(1, 2)})
        ds = s.diff(0)
        assert ds.order == 4
        assert ds.coefficient((1, 1, 0)) == 1

    def test_mixed_partials_commute(self):
        s = JetSeries.from_table(2, 6, {(3, 2): Fr(5, 7), (1, 1): 2})
        assert s.diff(0).diff(1) == s.diff(1).diff(0)

    def test_z_slice_and_shift_roundtrip(self):
        s = JetSeries.from_table(3, 4, {(2, 1, 0): 3, (0, 0, 1): 1})
        sl = s.z_coefficient(2)
        assert sl.coefficient((0, 1, 0)) == 3
        back = sl.times_z_power(2)
        assert back.coefficient((2, 1, 0)) == 3

    def test_evaluation_matches_free_function(self):
        s = JetSeries.from_table(2, 4, {(2, 1): Fr(1, 4), (0, 3): "-2/3"})
        f = series_to_function(s)
        pt = np.array([0.3, -0.7])
        assert s.evaluate(pt) == pytest.approx(f.value(pt))

    def test_exponent_validation(self):
        with pytest.raises(ValueError):
            JetSeries(2, 3, {(1,): Fr(1)})
        with pytest.raises(ValueError):
            JetSeries(2, 3, {(-1, 0): Fr(1)})

    def test_variable_count_mismatch_rejected(self):
        a = JetSeries.from_table(2, 3, {(1, 0): 1})
        b = JetSeries.from_table(3, 3, {(1, 0, 0): 1})
        with pytest.raises(ValueError):
            a + b


class TestCauchyData:
    def test_order_floor(self):
        with pytest.raises(ValueError):
            cauchy_data(1, 1, [{}])

    def test_pair_count_checked(self):
        with pytest.raises(ValueError):
            cauchy_data(2, 6, [{}, {}])

    def test_data_must_not_depend_on_z(self):
        s = JetSeries.from_table(3, 6, {(1, 0, 0): 1})
        z = JetSeries.zero(3, 6)
        with pytest.raises(ValueError):
            CauchyData(1, 6, (s,), (z,))

    def test_potential_data_satisfies_constraints_exactly(self):
        assert _generic_data().max_constraint_residual() == 0.0

    def test_violation_is_visible_in_residuals(self):
        bad = cauchy_data(2, 6, [{(0, 0, 1, 0): 1}, {}, {}])
        assert bad.max_constraint_residual() == 1.0


class TestSolver:
    def test_zero_data_gives_zero_profile(self):
        f = solve_ricci_ivp(cauchy_data(2, 6, [{}, {}, {}]))
        assert all(s.is_zero() for s in f)

    def test_p1_reduces_to_linear_profile(self):
        # constraint kills y-dependence, so the bracket vanishes identically
        data = cauchy_data(1, 6, [{(2, 0): Fr(1, 3), (1, 0): Fr(-1, 2)}],
                           [{(3, 0): Fr(2, 7)}])
        f, = solve_ricci_ivp(data)
        assert f == data.a[0] + data.b[0].times_z_power(1).truncate(6)

    def test_constraint_propagation_is_exact(self):
        f = solve_ricci_ivp(_generic_data())
        for a_l in constraint_residual(f, 2):
            assert a_l.is_zero()
            assert a_l.order == 5

    def test_ricci_series_vanishes_identically(self):
        f = solve_ricci_ivp(_generic_data())
        for r in ricci_series(f, 2):
            assert r.is_zero()
            assert r.order == 4

    def test_z2_coefficient_by_brute_force_substitution(self):
        data = _generic_data()
        f = solve_ricci_ivp(data)
        for t, b_a in enumerate(bracket_series(data.a, 2)):
            assert (f[t].z_coefficient(2) + b_a).is_zero()

    def test_z2_coefficient_ignores_initial_velocity(self):
        # triangularity: the first recursion step sees only the z^0 slice
        data = _generic_data()
        still = cauchy_data(2, 6,
                            [{e[1:]: c for e, c in s.terms.items()} for s in data.a])
        f1 = solve_ricci_ivp(data)
        f2 = solve_ricci_ivp(still)
        for t in range(3):
            assert f1[t].z_coefficient(2) == f2[t].z_coefficient(2)

    def test_violating_data_is_rejected_by_default(self):
        bad = cauchy_data(2, 6, [{(0, 0, 1, 0): 1}, {}, {}])
        with pytest.raises(ValueError):
            solve_ricci_ivp(bad)

    def test_violating_data_breaks_propagation_at_order_zero(self):
        bad = cauchy_data(2, 6, [{(0, 0, 1, 0): 1}, {}, {}])
        f = solve_ricci_ivp(bad, check_constraints=False)
        a_1 = constraint_residual(f, 2)[0]
        assert a_1.z_coefficient(0).max_abs() == 1.0

    def test_truncation_consistency(self):
        f6 = solve_ricci_ivp(_generic_data(order=6))
        f8 = solve_ricci_ivp(_generic_data(order=8))
        for t in range(3):
            assert f8[t].truncate(6) == f6[t]

    def test_solver_is_deterministic(self):
        data = _generic_data()
        f1 = solve_ricci_ivp(data)
        f2 = solve_ricci_ivp(data)
        assert all(s1 == s2 for s1, s2 in zip(f1, f2))


class TestResidualReport:
    def test_report_is_exactly_zero_on_solved_data(self):
        f = solve_ricci_ivp(_generic_data())
        rep = verify_ricci_flat(f, 2)
        assert rep == {"odd_ricci": 0.0, "even_bracket": 0.0, "constraint": 0.0}

    def test_even_bracket_detects_wrong_recursion_constant(self):
        f = solve_ricci_ivp(_generic_data())
        tampered = [s + s.z_coefficient(2).times_z_power(2) for s in f]
        rep = verify_ricci_flat(tampered, 2)
        assert rep["even_bracket"] > 0.0

    def test_float_cross_validation_against_geometry(self):
        f = solve_ricci_ivp(_generic_data())
        funcs = [series_to_function(s) for s in f]
        m = geometry.build_metric("PUREODD(2)", funcs)
        rng = np.random.default_rng(5)
        for _ in range(4):
            pt = rng.uniform(-0.01, 0.01, 5)
            num = geometry.ricci_numeric(m, pt)
            form = geometry.ricci_paper("PUREODD", funcs, pt, p=2)
            assert np.abs(num - form).max() < 1e-12
            # series Ricci is zero to order 4; only the truncation tail remains
            assert np.abs(num).max() < 1e-8


class TestSpecRoundTrip:
    def test_data_from_spec_and_back(self):
        d = {"p": 2, "order": 6,
             "a": [{"coefficients": {"2,0,0,0": "1/2"}},
                   {"coefficients": {"1,1,0,0": "1/3"}},
                   {"coefficients": {"0,2,0,0": "-1/5"}}],
             "b": [{"coefficients": {}}, {"coefficients": {}},
                   {"coefficients": {}}]}
        data = cauchy_data_from_spec(d)
        assert data.p == 2 and data.order == 6
        assert data.a[0].coefficient((0, 2, 0, 0, 0)) == Fr(1, 2)
        assert data.max_constraint_residual() == 0.0
        f = solve_ricci_ivp(data)
        spec = series_to_spec(f[0])
        rebuilt = JetSeries.from_table(5, 6, {
            tuple(int(v) for v in k.split(",")): c
            for k, c in spec["coefficients"].items()})
        assert rebuilt == f[0]
