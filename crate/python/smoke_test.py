"""Smoke test for the corrsamp_py extension module.

Build and install the module first, for example:

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/corrsamp_py-*.whl

then run `python python/smoke_test.py`.
"""

import math

import corrsamp_py as cs


def close(a, b, tol):
    return abs(a - b) <= tol


def check_constants():
    assert close(cs.log_gamma(0.5), 0.5 * math.log(math.pi), 1e-14)
    assert cs.log_gamma(1.0) == 0.0
    assert close(cs.log_multivariate_gamma(1, 3.7), math.lgamma(3.7), 1e-13)
    for t in (1, 2, 7, 30):
        for m in (t + 0.5, t + 1.0, t + 10.0):
            assert abs(cs.log_f_constant(t, m)) < 1e-7
    assert abs(cs.duplication_residual(17.25)) < 1e-11
    assert close(cs.log_lkj_constant(3, 1.0), math.log(math.pi ** 2 / 2), 1e-12)
    assert cs.eta_to_dof(5, 1.0) == 6.0
    assert cs.dof_to_eta(5, 6.0) == 1.0


def check_sampling():
    batch = cs.sample("rw", 4, dof=6.0, n=25, seed=3)
    assert len(batch) == 25 and batch.dim == 4 and batch.method == "rw"
    assert len(batch.variances) == 25
    for p in batch.matrices:
        assert all(p[i][i] == 1.0 for i in range(4))
        assert all(abs(p[i][j]) < 1 for i in range(4) for j in range(4) if i != j)
    again = cs.sample("rw", 4, eta=1.5, n=25, seed=3)
    assert again.matrices == batch.matrices
    onion = cs.sample("lkj", 4, eta=1.5, n=5, seed=3)
    assert onion.method == "onion" and onion.variances == []

    rng = cs.RandomStream(11)
    p = cs.sample_onion(6, 2.0, rng)
    assert len(p) == 6
    gap = cs.rw_log_density(p, cs.eta_to_dof(6, 2.0)) - cs.lkj_log_density(p, 2.0)
    assert abs(gap) < 1e-8
    assert len(cs.sample_riw(3, 4.0, rng)) == 3
    s = cs.sample_wishart(5.0, [[1.0, 0.2], [0.2, 2.0]], rng)
    corr, variances = cs.cov_to_corr(s)
    assert corr[0][0] == 1.0 and len(variances) == 2
    assert math.isfinite(cs.wishart_log_density(s, 5.0, [[1.0, 0.2], [0.2, 2.0]]))
    iw = cs.sample_inverse_wishart(6.0, [[1.0, 0.0], [0.0, 1.0]], rng)
    assert math.isfinite(cs.inverse_wishart_log_density(iw, 6.0, [[1.0, 0.0], [0.0, 1.0]]))

    a, b = cs.RandomStream(5).split(2), cs.RandomStream(5).split(2)
    assert [a.next_u64() for _ in range(3)] == [b.next_u64() for _ in range(3)]
    assert 0.0 < a.uniform() < 1.0 and a.gamma(2.0) > 0 and 0 < a.beta(2, 3) < 1


def check_errors():
    for call in (
        lambda: cs.sample("rw", 3, dof=1.0),
        lambda: cs.sample("rw", 3, dof=4.0, eta=1.0),
        lambda: cs.sample("gibbs", 3, dof=4.0),
        lambda: cs.lkj_log_density([[1.0, 1.2], [1.2, 1.0]], 1.0),
        lambda: cs.validate("nonsense"),
    ):
        try:
            call()
        except ValueError:
            continue
        raise AssertionError("expected ValueError")


def check_reports():
    report = cs.benchmark([5], n=20, repetitions=1)
    assert sorted(report) == ["environment", "rows", "seed"]
    assert len(report["rows"]) == 3 and all(r["wall_seconds"] > 0 for r in report["rows"])
    suite = cs.theorem_suite(dims=[3], etas=[1.0], n=2000, density_samples=20, seed=1)
    assert suite["passed"], suite
    broken = cs.theorem_suite(dims=[3], etas=[1.0], n=2000, density_samples=20, seed=1, constant_offset=1e-3)
    assert not broken["passed"]
    assert cs.validate("constants")["passed"]


if __name__ == "__main__":
    check_constants()
    check_sampling()
    check_errors()
    check_reports()
    print("corrsamp_py smoke test passed")
