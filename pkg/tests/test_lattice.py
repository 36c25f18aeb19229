"""Discrete-lattice oracles: construction, direct sums, commutator identity."""

import numpy as np
import pytest

from cslheat import (
    CONSTANTS,
    CslParams,
    Cuboid,
    Layer,
    LayeredStack,
    Lattice,
    Material,
    PointMass,
    QuadratureSpec,
    Sphere,
    TooManySites,
    build_lattice,
    f_double_commutator,
    gamma_cm,
    gamma_cm_discrete,
    gamma_cm_discrete_separable,
    gamma_total,
    gamma_total_discrete,
    lattice_check,
    mu_tilde,
    mu_tilde_discrete,
    total_mass,
)

R_C = 1e-7
CSL = CslParams(1e-16, R_C)
SILICON = Material("silicon", 2329.0)


def random_lattice(rng, n, scale=1e-7):
    return Lattice(
        masses=rng.uniform(0.5, 2.0, n) * 1e-18,
        positions=rng.uniform(-scale, scale, (n, 3)),
        cell_volume=scale**3,
    )


class TestBuildLattice:
    def test_exact_octants(self):
        a = 1e-6
        lat = build_lattice(Cuboid(a, a, a, SILICON), a / 2)
        assert lat.n_cells == 8
        np.testing.assert_allclose(
            lat.masses, total_mass(Cuboid(a, a, a, SILICON)) / 8, rtol=1e-12
        )

    def test_site_count_1mm_cube(self):
        lat = build_lattice(Cuboid(1e-3, 1e-3, 1e-3, SILICON), 20e-6)
        assert lat.n_cells == 125_000

    def test_sphere_mass_rescaled_exactly(self):
        sph = Sphere(2e-7, SILICON)
        lat = build_lattice(sph, 1e-8)
        assert lat.total_mass == pytest.approx(total_mass(sph), rel=1e-14)
        assert np.all(np.linalg.norm(lat.positions, axis=1) <= 2e-7)

    def test_stack_density_profile(self):
        heavy, light = Material("h", 2000.0), Material("l", 200.0)
        stack = LayeredStack(4e-7, 4e-7, (Layer(heavy, 2e-7), Layer(light, 2e-7)))
        lat = build_lattice(stack, 5e-8)
        lower = lat.positions[:, 2] < 0
        ratio = lat.masses[lower].sum() / lat.masses[~lower].sum()
        assert ratio == pytest.approx(10.0, rel=1e-9)

    def test_site_cap(self):
        with pytest.raises(TooManySites):
            build_lattice(Cuboid(1e-3, 1e-3, 1e-3, SILICON), 1e-6, site_cap=10_000)

    def test_point_mass_single_site(self):
        lat = build_lattice(PointMass(1e-9, (1e-7, 0.0, 0.0)), 1e-8)
        assert lat.n_cells == 1
        assert lat.total_mass == 1e-9

    def test_spacing_larger_than_body_rejected(self):
        with pytest.raises(ValueError):
            build_lattice(Cuboid(1e-7, 1e-7, 1e-7, SILICON), 2e-7)


class TestMuTildeDiscrete:
    def test_zero_wavevector(self, rng):
        lat = random_lattice(rng, 50)
        assert mu_tilde_discrete(lat, np.zeros(3)) == pytest.approx(
            lat.total_mass, rel=1e-14
        )

    def test_single_site_phase(self):
        lat = Lattice(
            masses=np.array([2e-9]),
            positions=np.array([[1e-7, -1e-7, 2e-7]]),
            cell_volume=1e-24,
        )
        k = np.array([3e6, -1e6, 2e6])
        expected = 2e-9 * np.exp(-1j * (k @ lat.positions[0]))
        assert mu_tilde_discrete(lat, k) == pytest.approx(expected, rel=1e-14)
        assert abs(mu_tilde_discrete(lat, k)) == pytest.approx(2e-9, rel=1e-14)

    def test_bound(self, rng):
        lat = random_lattice(rng, 200)
        k = rng.normal(0.0, 1.0 / R_C, (100, 3))
        assert np.all(
            np.abs(mu_tilde_discrete(lat, k)) <= lat.total_mass * (1 + 1e-12)
        )

    def test_convergence_to_continuum(self):
        cube = Cuboid(2 * R_C, 2 * R_C, 2 * R_C, SILICON)
        k = np.array([1.0, 0.0, 0.0]) / R_C
        exact = mu_tilde(cube, k)
        mass = total_mass(cube)
        lat = build_lattice(cube, 2 * R_C / 50)
        assert abs(mu_tilde_discrete(lat, k) - exact) / mass <= 1e-3

    def test_convergence_order(self):
        cube = Cuboid(2 * R_C, 2 * R_C, 2 * R_C, SILICON)
        k = np.array([0.6, -0.64, 0.48]) / R_C  # |k| = 1/r_c
        exact = mu_tilde(cube, k)
        mass = total_mass(cube)
        errs, ds = [], []
        for n in (16, 32, 64, 128):
            d = 2 * R_C / n
            lat = build_lattice(cube, d)
            errs.append(abs(mu_tilde_discrete(lat, k) - exact) / mass)
            ds.append(d)
        slope = np.polyfit(np.log(ds), np.log(errs), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.3)


class TestDoubleCommutator:
    def test_zero_wavevector(self, rng):
        lat = random_lattice(rng, 30)
        assert f_double_commutator(lat, np.zeros(3)) == 0.0

    def test_single_site(self):
        m = 3e-9
        lat = Lattice(
            masses=np.array([m]),
            positions=np.array([[2e-7, 0.0, -1e-7]]),
            cell_volume=1e-24,
        )
        k = np.array([1e7, 0.0, 0.0])
        expected = -CONSTANTS.hbar**2 * m * 1e14
        assert f_double_commutator(lat, k) == pytest.approx(expected, rel=1e-14)

    def test_identity_random_lattices(self, rng):
        for _ in range(100):
            lat = random_lattice(rng, int(rng.integers(1, 80)))
            k = rng.normal(0.0, 1.0 / R_C, 3)
            expected = -CONSTANTS.hbar**2 * lat.total_mass * float(k @ k)
            assert f_double_commutator(lat, k) == pytest.approx(expected, rel=1e-14)

    def test_position_independence(self, rng):
        lat = random_lattice(rng, 60)
        k = rng.normal(0.0, 1.0 / R_C, 3)
        ref = f_double_commutator(lat, k)
        for _ in range(10):
            shuffled = Lattice(
                masses=lat.masses,
                positions=rng.uniform(-5e-7, 5e-7, lat.positions.shape),
                cell_volume=lat.cell_volume,
            )
            assert f_double_commutator(shuffled, k) == pytest.approx(ref, rel=1e-14)

    def test_sign(self, rng):
        lat = random_lattice(rng, 10)
        k = np.array([1e6, 2e6, -3e6])
        assert f_double_commutator(lat, k) < 0.0


class TestGammaTotalDiscrete:
    def test_lambda_zero(self, rng):
        lat = random_lattice(rng, 10)
        assert gamma_total_discrete(lat, CslParams(0.0, R_C)) == 0.0

    def test_mass_doubling(self, rng):
        lat = random_lattice(rng, 25)
        doubled = Lattice(
            masses=2.0 * lat.masses,
            positions=lat.positions,
            cell_volume=lat.cell_volume,
        )
        assert gamma_total_discrete(doubled, CSL) == pytest.approx(
            2.0 * gamma_total_discrete(lat, CSL), rel=1e-14
        )

    def test_regression_value(self):
        lat = Lattice(
            masses=np.array([1.0]),
            positions=np.zeros((1, 3)),
            cell_volume=1.0,
        )
        assert gamma_total_discrete(lat, CslParams(1e-16, 1e-7)) == pytest.approx(
            2.98e-17, rel=1e-3
        )

    def test_exact_match_with_continuum(self, rng):
        lat = random_lattice(rng, 17)
        assert gamma_total_discrete(lat, CSL) == gamma_total(lat.total_mass, CSL)


class TestGammaCmDiscrete:
    def test_point_equals_total(self):
        lat = build_lattice(PointMass(1e-9), 1e-9)
        assert gamma_cm_discrete(lat, CSL) == pytest.approx(
            gamma_total(1e-9, CSL), rel=1e-14
        )

    def test_pairwise_matches_marginal_factorization(self):
        cube = Cuboid(2 * R_C, 2 * R_C, 2 * R_C, SILICON)
        full = gamma_cm_discrete(build_lattice(cube, R_C / 6), CSL)
        marg = gamma_cm_discrete_separable(cube, CSL, R_C / 6)
        assert marg == pytest.approx(full, rel=1e-12)

    def test_converges_to_quadrature(self):
        quad = QuadratureSpec()
        cube = Cuboid(2 * R_C, 2 * R_C, 2 * R_C, SILICON)
        target = gamma_cm(cube, CSL, quad).value
        errs = []
        for d in (R_C / 10, R_C / 20, R_C / 40):
            errs.append(
                abs(gamma_cm_discrete_separable(cube, CSL, d) - target) / target
            )
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] <= 1e-3
        # O(d^2): each halving divides the error by about 4
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.4)

    def test_banded_path_matches_direct(self):
        # wide body exercises the banded uniform-grid branch in x and y
        plate = Cuboid(60 * R_C, 60 * R_C, 2 * R_C, SILICON)
        coarse = gamma_cm_discrete_separable(plate, CSL, R_C / 2)
        # same spacing via the direct O(n^2) branch (n below the threshold)
        from cslheat.lattice import _axis_marginals, _axis_pair_sums

        mx, my, mz = _axis_marginals(plate, R_C / 2)
        direct = []
        for pos, w, pitch in (mx, my, mz):
            direct.append(_axis_pair_sums(pos, w, R_C, None))
        banded = []
        for pos, w, pitch in (mx, my, mz):
            banded.append(_axis_pair_sums(pos, w, R_C, pitch))
        for (qd, pd), (qb, pb) in zip(direct, banded):
            assert qb == pytest.approx(qd, rel=1e-12)
            assert pb == pytest.approx(pd, rel=1e-12)
        assert coarse > 0

    def test_pair_cap(self, rng):
        lat = random_lattice(rng, 100)
        with pytest.raises(TooManySites):
            gamma_cm_discrete(lat, CSL, max_pairs=100)

    def test_stack_matches_quadrature(self):
        heavy, light = Material("h", 2000.0), Material("l", 200.0)
        layers = tuple(
            Layer(heavy if i % 2 == 0 else light, R_C) for i in range(16)
        )
        stack = LayeredStack(10 * R_C, 10 * R_C, layers)
        quad_val = gamma_cm(stack, CSL, QuadratureSpec()).value
        lat_val = gamma_cm_discrete_separable(stack, CSL, R_C / 40)
        assert lat_val == pytest.approx(quad_val, rel=1e-3)


def test_lattice_check_suite():
    report = lattice_check(seed=0)
    assert report["all_passed"] is True
    names = {c["name"] for c in report["checks"]}
    assert "double_commutator_identity" in names
    assert "discrete_continuum_convergence" in names
