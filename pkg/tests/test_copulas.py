import numpy as np
import pytest
from scipy import stats

from conftest import gl_nodes, midpoint_grid
from copspline.copulas import CopulaModel, l2_error
from copspline.exceptions import DomainError, EvaluationError, UnsupportedOperationError
from copspline.quadrature import QuadratureRule

RHO3 = [[1.0, 0.5, 0.2], [0.5, 1.0, -0.3], [0.2, -0.3, 1.0]]

MODELS_2D = [
    CopulaModel("independence"),
    CopulaModel("fgm", theta=0.6),
    CopulaModel("fgm", theta=-1.0),
    CopulaModel("clayton", theta=1.5),
    CopulaModel("gaussian", rho=0.7),
    CopulaModel("gaussian", rho=-0.4),
]


class TestConstruction:
    @pytest.mark.parametrize("kwargs", [
        dict(family="fgm", theta=1.5),
        dict(family="clayton", theta=0.0),
        dict(family="clayton"),
        dict(family="fgm", theta=0.5, d=3),
        dict(family="gaussian", rho=[[1, 2], [2, 1]]),
        dict(family="gaussian", rho=[[1, 0.2], [0.3, 1]]),
        dict(family="gaussian", d=3, rho=0.5),
        dict(family="gumbel", theta=2.0),
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(DomainError):
            CopulaModel(**kwargs)

    def test_dict_round_trip(self):
        model = CopulaModel("gaussian", d=3, rho=RHO3)
        again = CopulaModel.from_dict(model.to_dict())
        assert again == model
        assert CopulaModel.from_dict({"family": "fgm", "theta": 1}) == CopulaModel("fgm", theta=1)
        assert CopulaModel.from_dict({"family": "gaussian", "rho": RHO3}).d == 3


class TestDensity:
    def test_examples(self):
        assert CopulaModel("independence", d=3).density([0.1, 0.2, 0.3]) == 1.0
        assert CopulaModel("fgm", theta=1.0).density([0.0, 0.0]) == 2.0
        assert CopulaModel("fgm", theta=0.5).density([0.25, 0.75]) == pytest.approx(0.875)

    def test_gaussian_matches_scipy(self, rng):
        model = CopulaModel("gaussian", d=3, rho=RHO3)
        U = rng.uniform(0.01, 0.99, (20, 3))
        z = stats.norm.ppf(U)
        expected = stats.multivariate_normal(cov=RHO3).pdf(z) / np.prod(stats.norm.pdf(z), axis=1)
        np.testing.assert_allclose(model.density(U), expected, rtol=1e-10)

    def test_clayton_matches_mixed_derivative(self):
        theta, u, v, eps = 2.0, 0.3, 0.6, 1e-4

        def cdf(a, b):
            return (a ** -theta + b ** -theta - 1) ** (-1 / theta)

        numeric = (cdf(u + eps, v + eps) - cdf(u + eps, v - eps)
                   - cdf(u - eps, v + eps) + cdf(u - eps, v - eps)) / (4 * eps ** 2)
        assert CopulaModel("clayton", theta=theta).density([u, v]) == pytest.approx(numeric,
                                                                                    rel=1e-6)

    @pytest.mark.parametrize("model", [CopulaModel("clayton", theta=1.0),
                                       CopulaModel("gaussian", rho=0.3)])
    def test_boundary_is_domain_error(self, model):
        with pytest.raises(DomainError):
            model.density([0.0, 0.5])
        with pytest.raises(DomainError):
            model.density([0.5, 1.0])

    @pytest.mark.parametrize("model", MODELS_2D, ids=lambda m: "%s-%s" % (m.family, m.theta))
    def test_integrates_to_one(self, model):
        assert model.quadrature_rule().integrate(model.density) == pytest.approx(1.0, abs=1e-4)

    @pytest.mark.parametrize("model", MODELS_2D, ids=lambda m: "%s-%s" % (m.family, m.theta))
    def test_uniform_marginals(self, model):
        # integrate out the other coordinate with a boundary-graded rule
        breaks = np.unique(np.concatenate([np.linspace(0, 1, 9), 2.0 ** -np.arange(1, 30),
                                           1 - 2.0 ** -np.arange(1, 30)]))
        y, wy = gl_nodes(breaks, 8)
        for x in (0.1, 0.5, 0.83):
            for axis in (0, 1):
                pts = np.empty((len(y), 2))
                pts[:, axis], pts[:, 1 - axis] = x, y
                assert np.sum(wy * model.density(pts)) == pytest.approx(1.0, abs=1e-4)


class TestSampling:
    @pytest.mark.parametrize("model", MODELS_2D + [CopulaModel("gaussian", d=3, rho=RHO3)],
                             ids=lambda m: "%s-%s-%d" % (m.family, m.theta, m.d))
    def test_marginals_pass_ks(self, model):
        n = 10_000
        X = model.sample(n, seed=11)
        assert X.shape == (n, model.d)
        for j in range(model.d):
            assert stats.kstest(X[:, j], "uniform").statistic < 1.63 / np.sqrt(n)

    def test_deterministic(self):
        model = CopulaModel("clayton", theta=2.0)
        np.testing.assert_array_equal(model.sample(50, seed=4), model.sample(50, seed=4))
        assert not np.array_equal(model.sample(50, seed=4), model.sample(50, seed=5))

    def test_fgm_spearman(self):
        # Spearman's rho of FGM is theta / 3: 12 * integral of C - 3, checked numerically
        P, vol = midpoint_grid(1000)
        C = P[:, 0] * P[:, 1] * (1 + (1 - P[:, 0]) * (1 - P[:, 1]))
        assert 12 * np.sum(C) * vol - 3 == pytest.approx(1 / 3, abs=1e-5)
        n = 10_000
        X = CopulaModel("fgm", theta=1.0).sample(n, seed=2)
        rho_s = stats.spearmanr(X[:, 0], X[:, 1]).statistic
        assert abs(rho_s - 1 / 3) < 3 / np.sqrt(n - 1)

    def test_clayton_kendall_tau(self):
        X = CopulaModel("clayton", theta=2.0).sample(5000, seed=8)
        tau = stats.kendalltau(X[:, 0], X[:, 1]).statistic
        assert tau == pytest.approx(2.0 / 4.0, abs=0.03)

    def test_gaussian_normal_scores(self):
        X = CopulaModel("gaussian", d=3, rho=RHO3).sample(20_000, seed=1)
        np.testing.assert_allclose(np.corrcoef(stats.norm.ppf(X).T), RHO3, atol=0.03)


class TestBivariateMarginal:
    def test_d2_is_identity(self):
        model = CopulaModel("fgm", theta=0.3)
        assert model.bivariate_marginal((0, 1)) is model

    def test_gaussian_d3(self):
        sub = CopulaModel("gaussian", d=3, rho=RHO3).bivariate_marginal((0, 1))
        assert sub.d == 2 and sub.rho[0, 1] == 0.5

    def test_independence_d3(self):
        assert CopulaModel("independence", d=3).bivariate_marginal((1, 2)) == \
            CopulaModel("independence")

    def test_invalid_axes(self):
        with pytest.raises(DomainError):
            CopulaModel("independence", d=3).bivariate_marginal((2, 1))

    def test_unsupported_family(self):
        # FGM/Clayton are restricted to d=2, so exercise the guard directly
        model = CopulaModel("fgm", theta=0.3)
        object.__setattr__(model, "d", 3)
        with pytest.raises(UnsupportedOperationError):
            model.bivariate_marginal((0, 2))

    def test_gaussian_matches_marginalization(self):
        model = CopulaModel("gaussian", d=3, rho=RHO3)
        breaks = np.unique(np.concatenate([np.linspace(0, 1, 9), 2.0 ** -np.arange(1, 30),
                                           1 - 2.0 ** -np.arange(1, 30)]))
        z, wz = gl_nodes(breaks, 8)
        for axes in [(0, 1), (0, 2), (1, 2)]:
            other = ({0, 1, 2} - set(axes)).pop()
            sub = model.bivariate_marginal(axes)
            for u, v in [(0.2, 0.3), (0.5, 0.9), (0.75, 0.1)]:
                pts = np.empty((len(z), 3))
                pts[:, axes[0]], pts[:, axes[1]], pts[:, other] = u, v, z
                marg = np.sum(wz * model.density(pts))
                assert marg == pytest.approx(sub.density([u, v]), abs=1e-6)


class TestL2Error:
    def test_identical(self):
        model = CopulaModel("fgm", theta=0.4)
        assert l2_error(model, model, QuadratureRule.uniform((4, 4))) == 0.0

    def test_constants(self):
        one = lambda p: np.ones(len(p))  # noqa: E731
        two = lambda p: np.full(len(p), 2.0)  # noqa: E731
        assert l2_error(one, two, QuadratureRule.uniform((2, 2))) == pytest.approx(1.0)

    def test_fgm_closed_form_and_riemann(self):
        model = CopulaModel("fgm", theta=1.0)
        one = CopulaModel("independence")
        value = l2_error(one, model, model.quadrature_rule())
        assert value == pytest.approx(1 / 3, abs=1e-12)
        P, vol = midpoint_grid(1000)
        riemann = np.sqrt(np.sum((model.density(P) - 1) ** 2) * vol)
        assert value == pytest.approx(riemann, abs=1e-4)

    def test_symmetric(self):
        a, b = CopulaModel("fgm", theta=0.2), CopulaModel("gaussian", rho=0.3)
        rule = b.quadrature_rule()
        assert l2_error(a, b, rule) == pytest.approx(l2_error(b, a, rule), rel=1e-14)

    def test_non_finite(self):
        with pytest.raises(EvaluationError):
            l2_error(lambda p: np.full(len(p), np.nan), CopulaModel("independence"),
                     QuadratureRule.uniform((1, 1)))


class TestSquaredNorm:
    def test_simple_families(self):
        assert CopulaModel("independence", d=4).squared_norm() == 1.0
        assert CopulaModel("fgm", theta=0.6).squared_norm() == pytest.approx(1.04)
        assert CopulaModel("clayton", theta=1.0).squared_norm() is None

    @staticmethod
    def normal_space_norm(rho, nodes, width):
        # integral of (mvn(z) / prod phi(z_i))^2 prod phi(z_i) dz, smooth in z
        d = len(rho)
        x, w = np.polynomial.legendre.leggauss(nodes)
        z, wz = width * x, width * w
        Z = np.column_stack([g.ravel() for g in np.meshgrid(*([z] * d), indexing="ij")])
        W = np.prod(np.meshgrid(*([wz] * d), indexing="ij"), axis=0).ravel()
        log_phi = np.sum(stats.norm.logpdf(Z), axis=1)
        return W @ np.exp(2 * stats.multivariate_normal(cov=rho).logpdf(Z) - log_phi)

    @pytest.mark.parametrize("rho", [0.3, -0.8])
    def test_gaussian_2d(self, rho):
        model = CopulaModel("gaussian", rho=rho)
        assert model.squared_norm() == pytest.approx(1 / (1 - rho ** 2), rel=1e-12)
        oracle = self.normal_space_norm(model.rho, 600, 40.0)
        assert model.squared_norm() == pytest.approx(oracle, rel=1e-8)

    def test_gaussian_3d(self):
        rho = [[1.0, 0.3, 0.1], [0.3, 1.0, -0.2], [0.1, -0.2, 1.0]]
        model = CopulaModel("gaussian", d=3, rho=rho)
        oracle = self.normal_space_norm(rho, 80, 15.0)
        assert model.squared_norm() == pytest.approx(oracle, rel=1e-8)

    def test_gaussian_divergent(self):
        # largest correlation eigenvalue 1 + 2 * 0.6 > 2
        model = CopulaModel("gaussian", d=3, rho=0.6 + 0.4 * np.eye(3))
        assert model.squared_norm() == np.inf
