import itertools
import math

import numpy as np
import pytest

from psodesign import (
    ConfigError,
    Design,
    Factor,
    FactorSpace,
    ModelSpec,
    SingularDesignError,
    d_efficiency,
    efficiency_lower_bound,
    information_matrix,
    log_det,
    model_vector,
    mu,
    psi,
    sensitivity,
    uniform_design,
)
from psodesign.glm import LINKS, NEG_INF, log_det_batch, model_matrix


def fd_psi(link, eta, h=1e-6):
    """Finite-difference oracle for the information weight, built on mu only."""
    m = mu(link, eta)
    dm = (mu(link, eta + h) - mu(link, eta - h)) / (2 * h)
    return dm * dm / (m * (1 - m))


class TestMu:
    def test_logit_center(self):
        assert mu("logit", 0.0) == 0.5

    def test_probit_center(self):
        assert mu("probit", 0.0) == pytest.approx(0.5, abs=1e-12)

    def test_cloglog_center(self):
        assert mu("cloglog", 0.0) == pytest.approx(1 - math.exp(-1), abs=1e-9)

    def test_monotone_directions(self):
        # within the float64-representable range; beyond |eta| ~ 3.6 the
        # log-log-family means saturate to 1.0 exactly and go flat
        eta = np.linspace(-3, 3, 400)
        for link, sign in (("logit", 1), ("probit", 1), ("cloglog", -1), ("loglog", -1)):
            vals = mu(link, eta)
            assert np.all(sign * np.diff(vals) > 0), link

    def test_clipping(self):
        assert 0 < mu("logit", -800.0) <= 1e-12
        assert 1 - 1e-12 <= mu("logit", 800.0) < 1

    def test_nonfinite_rejected(self):
        with pytest.raises(ConfigError):
            mu("logit", np.nan)
        with pytest.raises(ConfigError):
            psi("probit", np.inf)

    def test_unknown_link(self):
        with pytest.raises(ConfigError):
            mu("identity", 0.0)


class TestPsi:
    def test_logit_center(self):
        assert psi("logit", 0.0) == pytest.approx(0.25, abs=1e-15)

    def test_logit_closed_form(self):
        want = math.exp(2) / (1 + math.exp(2)) ** 2
        assert psi("logit", 2.0) == pytest.approx(want, rel=1e-12)
        assert want == pytest.approx(0.1049936, abs=1e-7)

    def test_probit_center(self):
        assert psi("probit", 0.0) == pytest.approx(2 / math.pi, rel=1e-12)

    def test_cloglog_fd_example(self):
        assert psi("cloglog", 0.7) == pytest.approx(fd_psi("cloglog", 0.7), rel=1e-6)

    def test_symmetry_logit_probit(self):
        eta = np.linspace(-10, 10, 501)
        np.testing.assert_allclose(psi("logit", eta), psi("logit", -eta), atol=1e-12)
        np.testing.assert_allclose(psi("probit", eta), psi("probit", -eta), atol=1e-12)

    def test_fd_consistency_all_links(self):
        # ranges stay clear of the mean's approach to 1.0, where float64
        # spacing (~2e-16 absolute) makes a central difference of the mean
        # catastrophically cancel; the cloglog mean is within 5e-6 of 1.0
        # already at eta = -2.5 (loglog mirrored)
        ranges = {
            "logit": (-5, 5),
            "probit": (-4, 4),
            "cloglog": (-2.5, 5),
            "loglog": (-5, 2.5),
        }
        rng = np.random.default_rng(42)
        for link in LINKS:
            lo, hi = ranges[link]
            eta = rng.uniform(lo, hi, 1000)
            got = psi(link, eta)
            want = fd_psi(link, eta)
            np.testing.assert_allclose(got, want, rtol=1e-5, err_msg=link)

    def test_positive_and_bounded(self):
        eta = np.linspace(-30, 30, 2001)
        for link in LINKS:
            vals = np.asarray(psi(link, eta))
            assert np.all(vals > 0), link
            assert np.all(vals <= 1.0), link

    def test_loglog_mirror_of_cloglog(self):
        # the two log-log-family links share one weight profile up to a sign
        # flip of eta; this is what keeps their optimal designs distinct
        eta = np.linspace(-3, 3, 301)
        np.testing.assert_allclose(psi("cloglog", eta), psi("loglog", -eta), rtol=1e-6)


class TestModelVector:
    def test_intercept_only(self, one_factor):
        space, _, _ = one_factor
        model = ModelSpec(intercept=True, main_effects=())
        np.testing.assert_array_equal(model_vector(model, space, [1.3]), [1.0])

    def test_odor_coding(self, odor_problem):
        p = odor_problem
        x = model_vector(p.model, p.space, [-1, -1, -1, -1, 29.67])
        np.testing.assert_allclose(x, [1, -1, -1, -1, -1, 29.67])

    def test_esd_interaction_term(self, esd_problem):
        p = esd_problem
        x = model_vector(p.model, p.space, [1, -1, 1, -1, 30.0])
        assert len(x) == 7
        assert x[-1] == pytest.approx(1 * -1)  # esd * pulse is the last term

    def test_term_ordering(self, mixed_space):
        model = ModelSpec(intercept=True, main_effects=(1, 0), interactions=((0, 1),))
        x = model_vector(model, mixed_space, [-1, 0.5])
        np.testing.assert_allclose(x, [1.0, 0.5, -1.0, -0.5])

    def test_out_of_domain(self, odor_problem):
        p = odor_problem
        with pytest.raises(ConfigError):
            model_vector(p.model, p.space, [-1, -1, -1, -1, 99.0])
        with pytest.raises(ConfigError):
            model_vector(p.model, p.space, [0.5, -1, -1, -1, 20.0])  # off-level

    def test_interaction_must_be_distinct(self):
        with pytest.raises(ConfigError):
            ModelSpec(intercept=True, main_effects=(0,), interactions=((0, 0),))


class TestInformationMatrix:
    def test_single_point_rank_one(self, one_factor):
        space, model, beta = one_factor
        design = Design(np.array([[2.0]]), np.array([1.0]))
        m = information_matrix(design, model, space, beta)
        x = np.array([1.0, 2.0])
        np.testing.assert_allclose(m, psi("logit", 2.0) * np.outer(x, x), rtol=1e-12)
        assert np.linalg.matrix_rank(m) == 1

    def test_published_designs_agree(self, stufken_problem, stufken_8pt, stufken_4pt):
        p = stufken_problem
        ld8 = log_det(information_matrix(stufken_8pt, p.model, p.space, p.beta))
        ld4 = log_det(information_matrix(stufken_4pt, p.model, p.space, p.beta))
        assert ld4 == pytest.approx(ld8, abs=5e-3)

    def test_weight_rescaling_invariance(self, stufken_problem, stufken_8pt):
        p = stufken_problem
        m1 = information_matrix(stufken_8pt, p.model, p.space, p.beta)
        rescaled = Design(stufken_8pt.settings, stufken_8pt.weights * 7.0).normalized()
        m2 = information_matrix(rescaled, p.model, p.space, p.beta)
        np.testing.assert_allclose(m1, m2, rtol=1e-12)

    def test_mixture_additivity(self, one_factor):
        space, model, beta = one_factor
        rng = np.random.default_rng(3)
        d1 = uniform_design(rng.uniform(-4, 4, (5, 1)))
        d2 = uniform_design(rng.uniform(-4, 4, (3, 1)))
        alpha = 0.3
        mix = Design(
            np.vstack([d1.settings, d2.settings]),
            np.concatenate([alpha * d1.weights, (1 - alpha) * d2.weights]),
        )
        m_mix = information_matrix(mix, model, space, beta)
        m1 = information_matrix(d1, model, space, beta)
        m2 = information_matrix(d2, model, space, beta)
        np.testing.assert_allclose(m_mix, alpha * m1 + (1 - alpha) * m2, atol=1e-12)

    def test_symmetry(self, odor_problem, odor_reference):
        p = odor_problem
        m = information_matrix(odor_reference, p.model, p.space, p.beta)
        np.testing.assert_allclose(m, m.T, atol=1e-12)

    def test_dimension_mismatch(self, one_factor):
        space, model, _ = one_factor
        design = Design(np.array([[0.0]]), np.array([1.0]))
        with pytest.raises(ConfigError):
            information_matrix(design, model, space, np.array([1.0, 2.0, 3.0]))


class TestLogDet:
    def test_identity(self):
        assert log_det(np.eye(3)) == pytest.approx(0.0, abs=1e-14)

    def test_rank_deficient(self):
        x = np.array([1.0, 2.0])
        assert log_det(np.outer(x, x)) == NEG_INF

    def test_zero_matrix(self):
        assert log_det(np.zeros((2, 2))) == NEG_INF

    def test_eigenvalue_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            a = rng.normal(size=(4, 4))
            m = a @ a.T + 0.1 * np.eye(4)
            want = float(np.sum(np.log(np.linalg.eigvalsh(m))))
            assert log_det(m) == pytest.approx(want, rel=1e-9)

    def test_loewner_monotone(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = rng.normal(size=(4, 4))
            m = a @ a.T + 0.05 * np.eye(4)
            v = rng.normal(size=4)
            assert log_det(m) <= log_det(m + np.outer(v, v)) + 1e-12

    def test_batch_matches_scalar(self):
        rng = np.random.default_rng(13)
        mats = []
        for _ in range(20):
            a = rng.normal(size=(3, 3))
            mats.append(a @ a.T + 0.01 * np.eye(3))
        mats.append(np.zeros((3, 3)))
        batch = log_det_batch(np.array(mats))
        for m, got in zip(mats, batch):
            assert got == log_det(m)


class TestSensitivity:
    def test_intercept_only_single_point(self, one_factor):
        space, _, _ = one_factor
        model = ModelSpec(intercept=True, main_effects=())
        design = Design(np.array([[0.7]]), np.array([1.0]))
        val = sensitivity([0.7], design, model, space, np.array([0.4]))
        assert val == pytest.approx(0.0, abs=1e-12)

    def test_four_point_design_support(self, stufken_problem, stufken_4pt):
        p = stufken_problem
        for row in stufken_4pt.settings:
            val = sensitivity(row, stufken_4pt, p.model, p.space, p.beta)
            assert val == pytest.approx(0.0, abs=1e-2)

    def test_esd_reference_support(self, esd_problem, esd_reference):
        # the published table is rounded to 4 decimals, which moves support
        # residuals as far as 0.019 from zero
        p = esd_problem
        for row in esd_reference.settings:
            val = sensitivity(row, esd_reference, p.model, p.space, p.beta)
            assert val == pytest.approx(0.0, abs=2e-2)

    def test_trace_identity(self, one_factor):
        space, model, beta = one_factor
        rng = np.random.default_rng(5)
        for _ in range(10):
            settings = rng.uniform(-4, 4, (6, 1))
            w = rng.random(6)
            design = Design(settings, w / w.sum())
            total = sum(
                p * (sensitivity(s, design, model, space, beta) + model.k)
                for s, p in zip(design.settings, design.weights)
            )
            assert total == pytest.approx(model.k, abs=1e-9)

    def test_singular_design_raises(self, one_factor):
        space, model, beta = one_factor
        design = Design(np.array([[1.0], [1.0]]), np.array([0.5, 0.5]))
        with pytest.raises(SingularDesignError):
            sensitivity([0.0], design, model, space, beta)


def odor_factorial(step: float) -> Design:
    temps = np.arange(5.0, 35.0 + 1e-9, step)
    combos = list(itertools.product([-1.0, 1.0], repeat=4))
    return uniform_design(np.array([c + (t,) for c in combos for t in temps]))


class TestDEfficiency:
    def test_self_efficiency(self, stufken_problem, stufken_4pt):
        p = stufken_problem
        val = d_efficiency(stufken_4pt, stufken_4pt, p.model, p.space, p.beta)
        assert val == pytest.approx(1.0, abs=1e-12)

    def test_odor_one_unit_factorial(self, odor_problem, odor_reference):
        p = odor_problem
        fact = odor_factorial(1.0)
        assert fact.n_points == 496
        val = d_efficiency(fact, odor_reference, p.model, p.space, p.beta)
        assert val == pytest.approx(0.5610, abs=0.005)

    def test_esd_factorial(self, esd_problem, esd_reference):
        p = esd_problem
        combos = list(itertools.product([-1.0, 1.0], repeat=4))
        fact = uniform_design(
            np.array([c + (v,) for c in combos for v in (25.0, 30.0, 35.0, 40.0, 45.0)])
        )
        assert fact.n_points == 80
        val = d_efficiency(fact, esd_reference, p.model, p.space, p.beta)
        assert val == pytest.approx(0.3285, abs=0.005)

    def test_decomposition_invariance(self, odor_problem, odor_reference):
        # the packaged route must agree with an eigenvalue-based recomputation
        p = odor_problem
        fact = odor_factorial(10.0)
        val = d_efficiency(fact, odor_reference, p.model, p.space, p.beta)
        ld_f = np.sum(np.log(np.linalg.eigvalsh(
            information_matrix(fact, p.model, p.space, p.beta))))
        ld_r = np.sum(np.log(np.linalg.eigvalsh(
            information_matrix(odor_reference, p.model, p.space, p.beta))))
        assert val == pytest.approx(np.exp((ld_f - ld_r) / p.model.k), rel=1e-9)

    def test_singular_design_gives_zero(self, one_factor):
        space, model, beta = one_factor
        good = uniform_design(np.array([[-1.5], [1.5]]))
        flat = Design(np.array([[1.0], [1.0]]), np.array([0.5, 0.5]))
        assert d_efficiency(flat, good, model, space, beta) == 0.0

    def test_singular_reference_rejected(self, one_factor):
        space, model, beta = one_factor
        good = uniform_design(np.array([[-1.5], [1.5]]))
        flat = Design(np.array([[1.0], [1.0]]), np.array([0.5, 0.5]))
        with pytest.raises(ConfigError):
            d_efficiency(good, flat, model, space, beta)


class TestEfficiencyLowerBound:
    def test_zero_theta(self):
        assert efficiency_lower_bound(0.0, 4) == 1.0

    def test_half(self):
        assert efficiency_lower_bound(3 * math.log(2), 3) == pytest.approx(0.5, rel=1e-12)

    def test_stopping_rule_value(self):
        # theta solving exp(-theta/6) = 0.99
        assert efficiency_lower_bound(0.0603, 6) == pytest.approx(0.99, abs=1e-4)

    def test_negative_theta_rejected(self):
        with pytest.raises(ConfigError):
            efficiency_lower_bound(-0.1, 3)
