"""Clifford generator relations, algebra types, reflections, spinor modules."""

import numpy as np
import pytest

from spinorlab.clifford import (
    classify,
    classify_even,
    clifford_generators,
    even_generators,
    signature_eta,
    spin_representation,
    twisted_reflection,
    vector_embedding,
    volume_element,
)
from spinorlab.linalg import span_dimension

# Independent oracle for the algebra type: classical table for definite
# signatures plus the tensor steps that double the block size.
_BASE_DEFINITE = {
    0: ("R", 1, False),
    1: ("C", 1, False),
    2: ("H", 1, False),
    3: ("H", 1, True),
    4: ("H", 2, False),
    5: ("C", 4, False),
    6: ("R", 8, False),
    7: ("R", 8, True),
    8: ("R", 16, False),
}


def expected_type(p, q):
    if p >= 1 and q >= 1:
        f, k, s = expected_type(p - 1, q - 1)
        return f, 2 * k, s
    if q == 0:
        if p <= 8:
            return _BASE_DEFINITE[p]
        f, k, s = expected_type(p - 8, 0)
        return f, 16 * k, s
    if q == 1:
        return "R", 1, True
    f, k, s = expected_type(q - 2, 0)
    return f, 2 * k, s


def expected_label(p, q):
    f, k, s = expected_type(p, q)
    base = f"{f}({k})"
    return f"{base}+{base}" if s else base


_SMALL = [(p, n - p) for n in range(0, 6) for p in range(n + 1)]


class TestGenerators:
    @pytest.mark.parametrize("p,q", [s for s in _SMALL if s != (0, 0)] + [(4, 3), (10, 1)])
    def test_anticommutation_relations(self, p, q):
        gens = clifford_generators(p, q)
        eta = signature_eta(p, q)
        n = gens[0].shape[0]
        for i, gi in enumerate(gens):
            for j, gj in enumerate(gens):
                want = -2.0 * eta[i, j] * np.eye(n)
                assert np.allclose(gi @ gj + gj @ gi, want, atol=1e-12)

    @pytest.mark.parametrize("p,q", [(3, 0), (0, 5), (2, 2), (10, 1)])
    def test_generators_are_orthogonal_signed_permutations(self, p, q):
        for g in clifford_generators(p, q):
            assert np.allclose(g.T @ g, np.eye(g.shape[0]), atol=1e-14)
            assert np.all(np.isin(g, [-1.0, 0.0, 1.0]))
            assert np.all(np.sum(np.abs(g), axis=0) == 1)

    def test_matrix_sizes_stay_modest(self):
        assert clifford_generators(10, 1)[0].shape == (256, 256)
        assert clifford_generators(4, 3)[0].shape == (16, 16)
        for n in range(1, 12):
            for p in range(n + 1):
                size = clifford_generators(p, n - p)[0].shape[0]
                assert size <= 512


class TestClassification:
    @pytest.mark.parametrize("p,q", _SMALL)
    def test_small_signatures_match_classical_table(self, p, q):
        assert classify(p, q).label == expected_label(p, q)

    @pytest.mark.parametrize(
        "p,q", [(6, 0), (0, 6), (3, 3), (7, 0), (0, 7), (8, 0), (0, 8), (4, 4)]
    )
    def test_eight_dimensional_band(self, p, q):
        assert classify(p, q).label == expected_label(p, q)

    def test_octave_periodicity_and_lorentzian_case(self):
        assert classify(9, 0).label == expected_label(9, 0)  # C(16)
        assert classify(10, 1).label == "C(32)"

    def test_commutant_dim_matches_field(self):
        for p, q in [(2, 0), (1, 0), (0, 2), (3, 1)]:
            c = classify(p, q)
            assert c.commutant_dim == {"R": 1, "C": 2, "H": 4}[c.field]
            assert c.module_dim == c.k * c.commutant_dim

    def test_classification_is_deterministic(self):
        assert classify(5, 2) == classify(5, 2)


class TestEvenSubalgebra:
    @pytest.mark.parametrize("p,q", [s for s in _SMALL if s[0] >= 1])
    def test_even_part_drops_one_spacelike_direction(self, p, q):
        assert classify_even(p, q).label == expected_label(p - 1, q)

    @pytest.mark.parametrize("p,q", [(0, 2), (0, 3), (0, 4), (1, 2), (2, 3)])
    def test_even_part_swaps_roles_from_timelike_side(self, p, q):
        assert classify_even(p, q).label == expected_label(q - 1, p)

    def test_even_generators_generate_even_monomials(self):
        gens = clifford_generators(2, 2)
        pairs = even_generators(gens)
        # pair products reach every even-degree monomial
        got = span_dimension(
            [np.eye(4)]
            + pairs
            + [a @ b for a in pairs for b in pairs]
            + [pairs[0] @ pairs[1] @ pairs[2]],
            "even span",
        )
        assert got == 8  # half of dim Cl(2,2) = 16


class TestTwistedReflection:
    @pytest.mark.parametrize("p,q", [(2, 1), (3, 1), (2, 2), (4, 3)])
    def test_matches_reflection_formula(self, p, q):
        rng = np.random.default_rng(41 + p + 10 * q)
        gens = clifford_generators(p, q)
        eta = signature_eta(p, q)
        for _ in range(20):
            v = rng.standard_normal(p + q)
            w = rng.standard_normal(p + q)
            vv = v @ eta @ v
            if abs(vv) < 0.1:
                continue
            got = twisted_reflection(p, q, v, w, gens=gens)
            want = w - 2.0 * (v @ eta @ w) / vv * v
            assert np.allclose(got, want, atol=1e-10)

    def test_null_vector_is_rejected(self):
        v = np.array([1.0, 0.0, 1.0])  # null in signature (2,1)
        with pytest.raises(ValueError):
            twisted_reflection(2, 1, v, np.array([1.0, 0.0, 0.0]))

    def test_reflection_is_involutive(self):
        v = np.array([0.3, -1.2, 0.4, 0.0])
        w = np.array([1.0, 2.0, -0.5, 0.7])
        once = twisted_reflection(2, 2, v, w)
        twice = twisted_reflection(2, 2, v, once)
        assert np.allclose(twice, w, atol=1e-10)


_SPIN_DIMS = {
    (2, 1): 2,
    (3, 1): 4,
    (3, 2): 4,
    (4, 2): 8,
    (4, 3): 8,
    (10, 1): 32,
}


class TestSpinRepresentation:
    @pytest.mark.parametrize("p,q", sorted(_SPIN_DIMS))
    def test_module_dimensions(self, p, q):
        rep = spin_representation(p, q)
        assert rep.dim == _SPIN_DIMS[p, q]
        assert rep.halved == ((p - q) % 8 in (1, 2))

    @pytest.mark.parametrize("p,q", [(2, 1), (3, 2), (4, 3), (2, 2), (3, 3)])
    def test_rotation_generators_act_faithfully(self, p, q):
        rep = spin_representation(p, q)
        n = p + q
        assert span_dimension(rep.so_basis, "so image") == n * (n - 1) // 2

    @pytest.mark.parametrize("p,q", [(2, 2), (3, 3), (1, 1)])
    def test_vector_equivariance_at_generator_level(self, p, q):
        # [a, v.] = (ad_a v).  with a = (1/2) g_i g_j acting on vectors by
        # e_i -> eta_ii e_j, e_j -> -eta_jj e_i
        rep = spin_representation(p, q)
        eta = signature_eta(p, q)
        rng = np.random.default_rng(7)
        for a, (i, j) in zip(rep.so_basis, rep.so_index):
            v = rng.standard_normal(p + q)
            rv = np.zeros(p + q)
            rv[j] = eta[i, i] * v[i]
            rv[i] = -eta[j, j] * v[j]
            lhs = a @ rep.vector_action(v) - rep.vector_action(v) @ a
            assert np.allclose(lhs, rep.vector_action(rv), atol=1e-12)

    @pytest.mark.parametrize("p,q", [(2, 2), (3, 3)])
    def test_chirality_operator(self, p, q):
        rep = spin_representation(p, q)
        w = rep.chirality()
        d = rep.dim
        assert np.allclose(w @ w, np.eye(d), atol=1e-12)
        for a in rep.so_basis:
            assert np.allclose(w @ a - a @ w, 0.0, atol=1e-12)
        v = np.arange(1.0, p + q + 1.0)
        gv = rep.vector_action(v)
        assert np.allclose(w @ gv + gv @ w, 0.0, atol=1e-12)
        plus, minus = rep.chiral_projectors()
        assert int(round(np.trace(plus))) == d // 2
        assert int(round(np.trace(minus))) == d // 2

    def test_halved_module_refuses_vector_action(self):
        rep = spin_representation(2, 1)
        with pytest.raises(ValueError):
            rep.vector_action(np.array([1.0, 0.0, 0.0]))

    def test_invariant_form_in_signature_4_3(self):
        rep = spin_representation(4, 3)
        forms = rep.invariant_forms()
        assert len(forms) == 1
        ev = np.linalg.eigvalsh(forms[0])
        assert int(np.sum(ev > 1e-10)) == 4
        assert int(np.sum(ev < -1e-10)) == 4
        # invariance under the full rotation image, not just the generators
        rng = np.random.default_rng(3)
        coeffs = rng.standard_normal(len(rep.so_basis))
        a = sum(c * b for c, b in zip(coeffs, rep.so_basis))
        assert np.linalg.norm(a.T @ forms[0] + forms[0] @ a) < 1e-10
