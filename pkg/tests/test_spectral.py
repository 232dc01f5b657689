import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsmlab.spectral import (Grid, SpectralField, convective_term, cross_product, curl,
                             divergence, gradient, hermitian_defect, inverse_transform, l2_norm,
                             laplacian, leray_project, linf_norm, make_grid, max_divergence,
                             physical_l2_norm, product, sobolev_norm, transform, truncate,
                             truncation_mask)


def plane_wave(grid, m, comp=0, amp=1.0):
    """``amp cos(k . x)`` in one component."""
    x = grid.coordinates()
    phase = sum(grid.k0 * mi * xi for mi, xi in zip(m, x))
    out = np.zeros((3,) + grid.shape)
    out[comp] = amp * np.cos(phase)
    return out


class TestGrid:
    @pytest.mark.parametrize("dim,n", [(1, 16), (4, 16), (2, 12), (2, 4), (3, 0)])
    def test_rejects_bad_shapes(self, dim, n):
        with pytest.raises(ValueError):
            make_grid(dim, n)

    def test_rejects_nonpositive_length(self):
        with pytest.raises(ValueError, match="length"):
            Grid(2, 16, -1.0)

    def test_wavenumbers(self):
        g = make_grid(2, 16, 4 * np.pi)
        assert g.k0 == pytest.approx(0.5)
        assert g.k.shape == (3, 16, 16)
        assert np.all(g.k[2] == 0)
        assert g.k2[0, 0] == 0 and g.inv_k2[0, 0] == 0

    def test_dealias_band(self):
        g = make_grid(2, 32)
        m = np.abs(g.index)
        assert np.all(m[:, g.dealias] <= 32 / 3)
        assert not np.any(g.dealias & g.nyquist)

    def test_frozen(self):
        g = make_grid(2, 16)
        with pytest.raises(Exception):
            g.n = 32


class TestTransforms:
    @pytest.mark.parametrize("dim,n", [(2, 32), (3, 16)])
    def test_round_trip_spectral_first(self, dim, n, field_factory):
        g = make_grid(dim, n)
        f = field_factory(g, 3, seed=dim)
        back = transform(inverse_transform(f), g)
        np.testing.assert_allclose(back.coeffs, f.coeffs, atol=1e-13)

    def test_transform_projects_on_band(self, grid2):
        x = np.random.default_rng(0).standard_normal(grid2.shape)
        f = transform(x, grid2)
        assert not np.any(f.coeffs[0][~grid2.dealias])
        assert hermitian_defect(f) < 1e-15

    @pytest.mark.parametrize("dim,n", [(2, 32), (3, 16)])
    def test_parseval(self, dim, n, field_factory):
        f = field_factory(make_grid(dim, n), 3, seed=7)
        assert l2_norm(f) == pytest.approx(physical_l2_norm(f), rel=1e-12)

    def test_plane_wave_amplitude(self, grid2):
        f = transform(plane_wave(grid2, (2, 1)), grid2)
        assert l2_norm(f) == pytest.approx(np.sqrt(0.5 * grid2.volume), rel=1e-13)
        assert linf_norm(f) == pytest.approx(1.0, rel=1e-12)

    def test_shape_mismatch(self, grid2):
        with pytest.raises(ValueError, match="does not match"):
            transform(np.zeros((3, 8, 8)), grid2)


class TestOperators:
    def test_derivatives_of_plane_wave(self, grid2):
        f = transform(plane_wave(grid2, (3, 0), comp=1), grid2)
        lap = laplacian(f)
        np.testing.assert_allclose(lap.coeffs, -9 * f.coeffs, atol=1e-13)
        # curl of (0, cos 3x, 0) is (0, 0, -3 sin 3x)
        x = grid2.coordinates()
        np.testing.assert_allclose(inverse_transform(curl(f))[2], -3 * np.sin(3 * x[0]), atol=1e-12)

    def test_gradient_is_curl_free(self, grid3, field_factory):
        phi = field_factory(grid3, 1, seed=1)
        assert l2_norm(curl(gradient(phi))) < 1e-12

    def test_div_curl_vanishes(self, grid3, field_factory):
        assert l2_norm(divergence(curl(field_factory(grid3, 3, seed=2)))) < 1e-12

    @pytest.mark.parametrize("dim", [2, 3])
    def test_leray_idempotent_and_solenoidal(self, dim, field_factory):
        g = make_grid(dim, 16)
        f = field_factory(g, 3, seed=dim)
        p = leray_project(f)
        assert max_divergence(p) < 1e-12
        np.testing.assert_allclose(leray_project(p).coeffs, p.coeffs, atol=1e-14)
        grad = gradient(field_factory(g, 1, seed=5))
        assert l2_norm(leray_project(grad)) < 1e-12 * l2_norm(grad)

    def test_leray_keeps_mean(self, grid2):
        c = np.zeros((3,) + grid2.shape, complex)
        c[:, 0, 0] = [1.0, 2.0, 3.0]
        np.testing.assert_array_equal(leray_project(SpectralField(grid2, c)).coeffs, c)

    def test_truncation_mask(self, grid2):
        m = truncation_mask(grid2, 2)
        assert np.all(grid2.kmag[m] <= 4) and np.all(grid2.kmag[~m] > 4)
        assert truncation_mask(grid2, None).all()

    def test_truncate_is_projection(self, grid2, field_factory):
        f = field_factory(grid2)
        t = truncate(f, 2)
        np.testing.assert_array_equal(truncate(t, 2).coeffs, t.coeffs)


class TestProducts:
    def test_product_of_modes(self, grid2):
        a = transform(plane_wave(grid2, (1, 0))[:1], grid2)
        b = transform(plane_wave(grid2, (0, 2))[:1], grid2)
        x = grid2.coordinates()
        expect = np.cos(x[0]) * np.cos(2 * x[1])
        np.testing.assert_allclose(inverse_transform(product(a, b))[0], expect, atol=1e-12)

    def test_cross_product_orthogonal(self, grid3, field_factory):
        a, b = field_factory(grid3, 3, seed=1, kmax=2), field_factory(grid3, 3, seed=2, kmax=2)
        c = inverse_transform(cross_product(a, b))
        dot = np.sum(c * inverse_transform(a), axis=0)
        assert np.max(np.abs(dot)) < 1e-10

    def test_convective_term_energy_neutral(self, grid2, field_factory):
        u = leray_project(field_factory(grid2, 3, seed=3, kmax=4))
        nl = convective_term(u)
        # <(u.grad)u, u> vanishes for solenoidal u when products are resolved
        inner = np.sum((nl.coeffs * np.conj(u.coeffs)).real) * grid2.volume
        assert abs(inner) < 1e-10 * l2_norm(u) ** 3

    def test_grid_mismatch(self, grid2, grid3):
        with pytest.raises(ValueError):
            product(SpectralField.zeros(grid2, 1), SpectralField.zeros(grid3, 1))


class TestSobolev:
    @given(st.floats(min_value=-1.5, max_value=2.5))
    @settings(max_examples=25, deadline=None)
    def test_single_mode_scaling(self, s):
        g = make_grid(2, 16)
        f = transform(plane_wave(g, (3, 4)), g)
        assert sobolev_norm(f, s) == pytest.approx(5.0 ** s * l2_norm(f), rel=1e-12)

    def test_mean_excluded(self, grid2):
        c = np.zeros((3,) + grid2.shape, complex)
        c[0, 0, 0] = 1.0
        assert sobolev_norm(SpectralField(grid2, c), 0.0) == 0.0


class TestFieldArithmetic:
    def test_linear_ops(self, grid2, field_factory):
        a, b = field_factory(grid2, seed=1), field_factory(grid2, seed=2)
        np.testing.assert_allclose(((a + b) - b).coeffs, a.coeffs, atol=1e-15)
        np.testing.assert_allclose((a * 2.0).coeffs, 2 * a.coeffs)
        np.testing.assert_allclose((-a).coeffs, -a.coeffs)

    def test_scalar_field_promotion(self, grid2):
        f = SpectralField(grid2, np.zeros(grid2.shape))
        assert f.n_comp == 1
