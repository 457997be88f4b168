import itertools
import math

import numpy as np
import pytest

from newtonmr.linalg import spectral_norm
from newtonmr.objectives import (DataParseError, Dataset, DomainError, GmmGroundTruth, SampleSelector,
                                 estimation_error, gen_gmm_data, gen_softmax_data, load_csv,
                                 make_fraction, make_gmm, make_quadratic, make_softmax,
                                 subsampled_operator)
from newtonmr.perturb import measure_diagnostics

from fd import grad_fd_error, hvp_fd_error, hvp_symmetry_defect


def small_softmax(seed=0, n=60, p=4, C=3):
    return make_softmax(gen_softmax_data(n, p, C, seed), C)


def small_gmm(seed=0, p=3, n=40, cond=10.0):
    data, truth = gen_gmm_data(p, n, cond, seed)
    return make_gmm(data, truth.sigma1, truth.sigma2), truth


# softmax

def test_softmax_at_zero():
    P = small_softmax()
    assert P.eval_f(np.zeros(P.dim)) == pytest.approx(60 * math.log(3), rel=1e-14)


def test_softmax_single_point():
    P = make_softmax(Dataset(np.array([[1.0, 0.0]]), np.array([1])), 2)
    x = np.zeros(2)
    assert P.eval_f(x) == pytest.approx(math.log(2), rel=1e-15)
    np.testing.assert_allclose(P.eval_g(x), [-0.5, 0.0], atol=1e-15)


def test_softmax_label_out_of_range():
    with pytest.raises(ValueError):
        make_softmax(Dataset(np.ones((2, 2)), np.array([0, 3])), 3)
    with pytest.raises(ValueError):
        make_softmax(Dataset(np.ones((2, 2)), np.array([0, 1])), 1)


def test_softmax_hvp_matches_finite_differences(rng):
    P = small_softmax()
    x = 0.3 * rng.standard_normal(P.dim)
    v = rng.standard_normal(P.dim)
    h = 1e-5
    fd = (P.eval_g(x + h * v) - P.eval_g(x - h * v)) / (2 * h)
    assert np.linalg.norm(P.hvp(x, v) - fd) <= 1e-4 * np.linalg.norm(fd)


def test_softmax_gnvp_equals_hvp(rng):
    P = small_softmax()
    x, v = rng.standard_normal((2, P.dim))
    np.testing.assert_allclose(P.gnvp(x, v), P.hvp(x, v), rtol=1e-13)


def test_softmax_nu_is_one(rng):
    P = small_softmax(n=30, p=3, C=4)
    for _ in range(20):
        x = rng.standard_normal(P.dim)
        H = P.hessian(x)
        d = measure_diagnostics(H, H, P.eval_g(x))
        assert abs(d.nu - 1.0) <= 1e-6


# gmm

def test_gmm_collapsed_instance():
    P = make_gmm(Dataset(np.zeros((1, 1))), np.eye(1), np.eye(1))
    x = np.zeros(3)
    assert P.eval_f(x) == pytest.approx(0.5 * math.log(2 * math.pi), rel=1e-14)
    assert P.eval_f(x) == pytest.approx(0.91894, abs=1e-5)
    assert P.eval_g(x)[0] == 0.0


def test_gmm_rejects_indefinite_sigma():
    with pytest.raises(ValueError):
        make_gmm(Dataset(np.zeros((2, 2))), np.diag([1.0, -1.0]), np.eye(2))
    with pytest.raises(ValueError):
        make_gmm(Dataset(np.zeros((2, 2))), np.eye(3), np.eye(2))


def test_gmm_gradient_random_p3(rng):
    P, truth = small_gmm()
    for _ in range(5):
        x = truth.x_star + 0.5 * rng.standard_normal(P.dim)
        assert grad_fd_error(P, x) <= 1e-5


def test_gmm_gauss_newton_drops_cross_term(rng):
    P, truth = small_gmm()
    x = truth.x_star + 0.3 * rng.standard_normal(P.dim)
    G = np.column_stack([P.gnvp(x, e) for e in np.eye(P.dim)])
    assert np.min(np.linalg.eigvalsh(0.5 * (G + G.T))) >= -1e-8 * np.linalg.norm(G, 2)


def test_gen_gmm_data():
    data, truth = gen_gmm_data(2, 50, 100.0, 7)
    for S in (truth.sigma1, truth.sigma2):
        lam = np.linalg.eigvalsh(S)
        assert abs(lam[-1] / lam[0] - 100.0) <= 1.0
    again, truth2 = gen_gmm_data(2, 50, 100.0, 7)
    np.testing.assert_array_equal(data.features, again.features)
    np.testing.assert_array_equal(truth.x_star, truth2.x_star)
    big, _ = gen_gmm_data(100, 1000, 1e8, 0)
    assert make_gmm(big, _.sigma1, _.sigma2).dim == 201


def test_estimation_error():
    truth = GmmGroundTruth(2.0, np.array([1.0, -1.0]), np.array([3.0, 4.0]), np.eye(2), np.eye(2))
    assert estimation_error(truth.x_star, truth) == 0.0
    x = truth.x_star.copy()
    x[0] = 4.0
    assert estimation_error(x, truth) == pytest.approx(0.5)
    rng = np.random.default_rng(3)
    x = rng.standard_normal(5)
    means = np.array([1.0, -1.0, 3.0, 4.0])
    oracle = 0.5 * (abs(x[0] - 2.0) / 2.0 + np.linalg.norm(x[1:] - means) / np.linalg.norm(means))
    assert estimation_error(x, truth) == pytest.approx(oracle, rel=1e-15)
    zero = GmmGroundTruth(0.0, truth.u_star, truth.v_star, np.eye(2), np.eye(2))
    with pytest.raises(ValueError):
        estimation_error(truth.x_star, zero)
    # a negative w* still gives a non-negative error
    neg = GmmGroundTruth(-2.0, truth.u_star, truth.v_star, np.eye(2), np.eye(2))
    assert estimation_error(truth.x_star, neg) == pytest.approx(1.0)


# fraction

def test_fraction_values():
    P = make_fraction(100, 1)
    assert P.eval_f([1.0, 0.0]) == 100.0
    np.testing.assert_allclose(P.eval_g([1.0, 0.0]), [200.0, 100.0])
    for x2 in (-3.0, 0.5, 7.0):
        assert P.eval_f([0.0, x2]) == 0.0
        np.testing.assert_array_equal(P.eval_g([0.0, x2]), [0.0, 0.0])
    with pytest.raises(DomainError):
        P.eval_f([1.0, 1.0])
    assert not P.domain_check([0.0, 1.0])


def test_fraction_nu_lower_bound(rng):
    # nu(x) = (2 + t)^2 / ((1 + t)(4 + t)) with t = x1^2 / (b - x2)^2; minimum 8/9 at t = 2
    P = make_fraction(100, 1)
    for _ in range(100):
        x = rng.standard_normal(2)
        H = P.hessian(x)
        nu = measure_diagnostics(H, H, P.eval_g(x)).nu
        t = x[0] ** 2 / (1 - x[1]) ** 2
        assert nu == pytest.approx((2 + t) ** 2 / ((1 + t) * (4 + t)), abs=1e-10)
        assert nu >= 8 / 9 - 1e-6
    x = np.array([math.sqrt(2.0), 0.0])
    H = P.hessian(x)
    assert abs(measure_diagnostics(H, H, P.eval_g(x)).nu - 8 / 9) <= 1e-6


# quadratic

def test_quadratic_examples():
    P = make_quadratic(np.eye(2), np.zeros(2))
    assert P.eval_f([3.0, 4.0]) == 12.5
    np.testing.assert_allclose(P.eval_g([3.0, 4.0]), [3.0, 4.0])
    A = np.diag([4.0, 1.0])
    Q = make_quadratic(A, np.ones(2))
    d = measure_diagnostics(A, A, Q.eval_g(np.zeros(2)))
    assert d.gamma == 1.0
    with pytest.raises(ValueError):
        make_quadratic(np.diag([1.0, 0.0]), np.zeros(2))


# shared derivative checks

def all_problems():
    rng = np.random.default_rng(0)
    from newtonmr.objectives import make_cubic_quadratic
    A = rng.standard_normal((4, 4))
    return [
        ("softmax", small_softmax(), lambda r, d: 0.5 * r.standard_normal(d)),
        ("gmm", small_gmm()[0], lambda r, d: small_gmm()[1].x_star + 0.5 * r.standard_normal(d)),
        ("fraction", make_fraction(), lambda r, d: np.array([r.standard_normal(), -abs(r.standard_normal()) - 0.2])),
        ("quadratic", make_quadratic(A @ A.T + np.eye(4), rng.standard_normal(4)),
         lambda r, d: r.standard_normal(d)),
        ("cubic", make_cubic_quadratic(A @ A.T + np.eye(4), rng.standard_normal(4), 0.7),
         lambda r, d: r.standard_normal(d)),
    ]


@pytest.mark.parametrize("name, problem, point", all_problems(), ids=lambda v: v if isinstance(v, str) else "")
def test_derivative_checks(name, problem, point):
    rng = np.random.default_rng(1)
    g_err = h_err = sym = 0.0
    for _ in range(20):
        x = point(rng, problem.dim)
        u, v = rng.standard_normal((2, problem.dim))
        g_err = max(g_err, grad_fd_error(problem, x))
        h_err = max(h_err, hvp_fd_error(problem, x, v))
        sym = max(sym, hvp_symmetry_defect(problem, x, u, v))
    assert g_err <= 1e-5 and h_err <= 1e-4 and sym <= 1e-10


# sub-sampling

def test_sample_selector():
    sel = SampleSelector(0.5, 3)
    first = sel.sample(10, 0)
    assert len(first) == 5 and np.all(np.diff(first) > 0)
    np.testing.assert_array_equal(first, SampleSelector(0.5, 3).sample(10, 0))
    assert SampleSelector(1.0, 0).sample(10, 0) is None
    with pytest.warns(RuntimeWarning):
        assert SampleSelector(0.01, 0).size(10) == 1
    with pytest.raises(ValueError):
        SampleSelector(0.0, 0)
    assert SampleSelector(0.05, 0).size(1000) == 50


def test_subsampled_full_fraction_matches_hvp(rng):
    P = small_softmax()
    x, v = rng.standard_normal((2, P.dim))
    op = subsampled_operator(P, x, SampleSelector(1.0, 0))
    assert np.linalg.norm(op(v) - P.hvp(x, v)) <= 1e-12 * np.linalg.norm(P.hvp(x, v))


def test_subsampled_unbiased_by_enumeration(rng):
    for P in (small_softmax(n=5, p=2, C=3), small_gmm(n=5, p=2)[0]):
        assert P.dim <= 6
        x = 0.3 * rng.standard_normal(P.dim)
        H = P.hessian(x)
        subsets = list(itertools.combinations(range(5), 2))
        avg = sum(P.hessian(x, np.array(S)) for S in subsets) / len(subsets)
        assert np.max(np.abs(avg - H)) <= 1e-10 * max(1.0, np.max(np.abs(H)))


def test_subsampling_error_shrinks_with_fraction():
    P = make_softmax(gen_softmax_data(200, 5, 3, 0), 3)
    x = np.full(P.dim, 0.1)
    H = P.hessian(x)
    med = []
    for frac in (0.1, 0.5, 1.0):
        errs = [spectral_norm(subsampled_operator(P, x, SampleSelector(frac, s)).to_dense() - H)
                for s in range(20)]
        med.append(np.median(errs))
    assert med[0] > med[1] > med[2]
    assert med[2] <= 1e-10 * spectral_norm(H)


# csv

def test_load_csv(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("1,2,0\n3,4,1\n5,6,0\n")
    d = load_csv(f, has_labels=True)
    assert (d.n, d.p) == (3, 2)
    np.testing.assert_array_equal(d.labels, [0, 1, 0])
    f.write_text("a,b,y\n1,2,0\n3,4,1\n5,6,0\n")
    assert load_csv(f, has_labels=True, header=True).n == 3
    s = load_csv(tmp_path / "d.csv", has_labels=True, header=True, scale=True)
    np.testing.assert_allclose(s.features[:, 0], [0.0, 0.5, 1.0])


@pytest.mark.parametrize("text, where", [
    ("", "no data"),
    ("1,2\n3\n", "row 2"),
    ("1,2\n3,x\n", "row 2, column 2"),
    ("1,2,0.5\n", "column 3"),
])
def test_load_csv_errors(tmp_path, text, where):
    f = tmp_path / "bad.csv"
    f.write_text(text)
    with pytest.raises(DataParseError, match=where):
        load_csv(f, has_labels=text.endswith("0.5\n"))
