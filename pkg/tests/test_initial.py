import numpy as np
import pytest

from nsmlab.initial import XorShift64Star, canonical_noise, initial_fields, splitmix64
from nsmlab.spectral import (SpectralField, hermitian_defect, l2_norm, make_grid, max_divergence,
                             sobolev_norm)


class TestGenerator:
    def test_splitmix_known_value(self):
        # first output of splitmix64 seeded with 0
        assert splitmix64(0) == 0xE220A8397B1DCDAF

    def test_reproducible(self):
        a, b = XorShift64Star(7), XorShift64Star(7)
        np.testing.assert_array_equal(a.uniform(50), b.uniform(50))
        assert not np.array_equal(XorShift64Star(8).uniform(5), XorShift64Star(7).uniform(5))

    def test_normal_moments(self):
        x = XorShift64Star(1).normal(40000)
        assert abs(x.mean()) < 0.02 and abs(x.std() - 1) < 0.02


class TestInitialFields:
    @pytest.mark.parametrize("dim,n", [(2, 32), (3, 16)])
    def test_targets_and_constraints(self, dim, n):
        g = make_grid(dim, n)
        u, E, B = initial_fields(g, "random", 3, 1.0, 0.2, 0.5)
        en = 0.5 * (l2_norm(u) ** 2 + l2_norm(E) ** 2 + l2_norm(B) ** 2)
        assert en == pytest.approx(1.0, rel=1e-12)
        assert np.hypot(sobolev_norm(E, 0.5), sobolev_norm(B, 0.5)) == pytest.approx(0.2, rel=1e-12)
        for f in (u, E, B):
            assert max_divergence(f) < 1e-12
            assert hermitian_defect(f) < 1e-14
            assert not np.any(f.coeffs[(slice(None),) + (0,) * dim])

    def test_2d_component_layout(self):
        g = make_grid(2, 32)
        u, E, B = initial_fields(g, "random", 0, 1.0, 0.2, 0.5)
        assert not np.any(u.coeffs[2]) and not np.any(E.coeffs[2])
        assert not np.any(B.coeffs[:2])

    def test_same_low_modes_across_grids(self):
        a = initial_fields(make_grid(2, 32), "random", 5, 1.0, 0.2, 0.5)[0]
        b = initial_fields(make_grid(2, 64), "random", 5, 1.0, 0.2, 0.5)[0]
        np.testing.assert_allclose(a.coeffs[:, 3, 2], b.coeffs[:, 3, 2], rtol=1e-12)
        np.testing.assert_allclose(a.coeffs[:, -4, 7], b.coeffs[:, -4, 7], rtol=1e-12)

    def test_canonical_noise_is_hermitian(self):
        g = make_grid(3, 16)
        assert hermitian_defect(SpectralField(g, canonical_noise(g, XorShift64Star(0)))) < 1e-15

    def test_recipes(self):
        g = make_grid(2, 16)
        u, E, B = initial_fields(g, "zero", 0, 1.0, 0.2, 0.5)
        assert l2_norm(u) == l2_norm(E) == l2_norm(B) == 0.0
        u, E, B = initial_fields(g, "velocity", 0, 1.0, 0.2, 0.5)
        assert l2_norm(E) == l2_norm(B) == 0.0 and l2_norm(u) > 0
        with pytest.raises(ValueError, match="recipe"):
            initial_fields(g, "spiral", 0, 1.0, 0.2, 0.5)

    def test_em_energy_above_target(self):
        with pytest.raises(ValueError, match="exceeds"):
            initial_fields(make_grid(2, 16), "random", 0, 1e-4, 5.0, 0.5)
