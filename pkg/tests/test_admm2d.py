import csv

import numpy as np
import pytest

from truncreg import potentials as P
from truncreg.admm2d import (AdmmConfig, AdmmState, AdmmTrace, Mode, energy, lagrangian,
                             mu_update, q_update, run, u_update)
from truncreg.errors import ConfigurationError, DivergenceError
from truncreg.grid_ops import Convolution, gaussian_kernel, grad, grad_adjoint
from truncreg.pipeline.phantoms import checkerboard

import oracles

TRTV = P.truncate(P.l1(), 1.0)


def _random_state(rng, shape=(8, 9)):
    u = rng.uniform(size=shape)
    q = rng.normal(scale=0.3, size=(2,) + shape)
    mu = rng.normal(scale=0.3, size=(2,) + shape)
    return AdmmState(u=u, q=q, mu=mu, u_mean=u.copy(), q_mean=q.copy())


def test_config_validation():
    for kw in ({"alpha": 0.0, "beta": 1.0}, {"alpha": 1.0, "beta": 0.0},
               {"alpha": 1.0, "beta": 1.0, "tol": 0.0}, {"alpha": 1.0, "beta": 1.0, "max_iters": 0}):
        with pytest.raises(ConfigurationError):
            AdmmConfig(reg=P.l1(), **kw)
    assert AdmmConfig(1.0, 1.0, P.l1()).tol == 5e-5
    assert AdmmConfig(1.0, 1.0, P.l1()).max_iters == 2000


def test_constant_image_is_returned_quickly():
    f = np.full((16, 16), 0.4)
    for mode in Mode:
        res = run(f, None, AdmmConfig(5.0, 5.0, TRTV, mode))
        np.testing.assert_allclose(res.u, f, atol=1e-14)
        assert res.iterations <= 2 and res.converged


def test_q_update_examples():
    cfg = AdmmConfig(1.0, 1.0, TRTV, Mode.ISOTROPIC)
    st = AdmmState.initial(np.full((4, 4), 0.2))
    assert not np.any(q_update(st, cfg))
    u = np.zeros((1, 2))
    u[0, 1] = 2.0  # the x-difference at pixel (0, 0) is 2, the y-difference is 0
    st = AdmmState.initial(u)
    q = q_update(st, cfg)
    np.testing.assert_allclose(q[:, 0, 0], [2.0, 0.0])
    u = np.zeros((2, 2))
    u[0, 1], u[1, 0] = 1.2, 1.6
    st = AdmmState.initial(u)
    q = q_update(st, cfg)
    w = grad(u)[:, 0, 0]
    np.testing.assert_allclose(q[:, 0, 0], w)  # |w| = 2 is above the tie point
    assert abs(w[0] * q[1, 0, 0] - w[1] * q[0, 0, 0]) <= 1e-15


def test_anisotropic_q_update_restores_sign():
    rng = np.random.default_rng(0)
    st = _random_state(rng)
    cfg = AdmmConfig(1.0, 2.0, P.truncate(P.lp(0.5), 0.3))
    q = q_update(st, cfg)
    w = grad(st.u) - st.mu / cfg.beta
    assert np.all(q * w >= 0)
    st.mu = -st.mu
    st.u = -st.u
    np.testing.assert_array_equal(q_update(st, cfg), -q)


@pytest.mark.parametrize("mode", list(Mode))
@pytest.mark.parametrize("reg", [TRTV, P.truncate(P.log(10.0), 0.5), P.scad(0.5), P.truncate(P.quadratic(), 0.2)],
                         ids=lambda r: r.label())
def test_block_descent_on_random_states(mode, reg):
    rng = np.random.default_rng(1)
    A = Convolution(gaussian_kernel(3, 1.0))
    for _ in range(10):
        st = _random_state(rng)
        f = rng.uniform(size=st.u.shape)
        cfg = AdmmConfig(float(rng.uniform(1, 50)), float(rng.uniform(1, 50)), reg, mode)
        l0 = lagrangian(st.u, st.q, st.mu, f, A, cfg)
        st.q = q_update(st, cfg)
        l1 = lagrangian(st.u, st.q, st.mu, f, A, cfg)
        st.u = u_update(st, cfg, f, A)
        l2 = lagrangian(st.u, st.q, st.mu, f, A, cfg)
        tol = 1e-10 * max(1.0, abs(l0))
        assert l1 <= l0 + tol and l2 <= l1 + tol


def test_mu_update_examples():
    rng = np.random.default_rng(2)
    st = _random_state(rng)
    cfg = AdmmConfig(1.0, 3.0, TRTV)
    new = mu_update(st, cfg)
    assert np.linalg.norm(new - st.mu) == pytest.approx(3.0 * np.linalg.norm(st.q - grad(st.u)))
    st.q = grad(st.u)
    np.testing.assert_array_equal(mu_update(st, cfg), st.mu)


def test_energy_examples():
    cfg = AdmmConfig(2.0, 1.0, TRTV)
    f = np.full((4, 4), 0.3)
    assert energy(f, f, None, cfg) == 0.0
    z = np.zeros((4, 4))
    assert energy(z, z, None, cfg) == 0.0


@pytest.mark.parametrize("mode", list(Mode))
def test_energy_matches_loop_oracle(mode):
    rng = np.random.default_rng(3)
    for reg in (TRTV, P.truncate(P.frac(4.0), 0.7), P.scad(0.4), P.lp(0.5)):
        u, f = rng.uniform(size=(2, 4, 4))
        cfg = AdmmConfig(3.5, 1.0, reg, mode)
        ref = oracles.energy_2d_loops(u, f, 3.5, lambda s: float(reg.eval(s)),
                                      isotropic=mode is Mode.ISOTROPIC)
        assert energy(u, f, None, cfg) == pytest.approx(ref, rel=1e-12)


def test_one_row_images_agree_across_modes():
    rng = np.random.default_rng(4)
    f = np.repeat([0.0, 1.0, 0.2, 0.8], 8)[None, :] + rng.normal(scale=0.1, size=(1, 32))
    out = [run(f, None, AdmmConfig(20.0, 10.0, TRTV, m, max_iters=200)) for m in Mode]
    np.testing.assert_array_equal(out[0].u, out[1].u)
    assert out[0].iterations == out[1].iterations


def test_running_mean_and_trace():
    rng = np.random.default_rng(5)
    f = checkerboard(32, 8) + rng.normal(scale=0.1, size=(32, 32))
    seen = [f.copy()]

    def cb(st, trace):
        seen.append(st.u.copy())
        assert len(trace) == st.iter

    cfg = AdmmConfig(10.0, 10.0, TRTV, max_iters=30, tol=1e-12)
    res = run(f, None, cfg, callback=cb)
    assert res.iterations == 30 and not res.converged
    np.testing.assert_allclose(res.u, np.mean(seen, axis=0), atol=1e-12)
    tr = res.trace
    assert len(tr.energy) == len(tr.rel_u_mean) == len(tr.rel_q_gap) == len(tr.mu_drift) == 30
    fin = run(f, None, AdmmConfig(10.0, 10.0, TRTV, max_iters=30, tol=1e-12, final_iterate=True))
    np.testing.assert_array_equal(fin.u, seen[-1])


def test_stop_rules():
    rng = np.random.default_rng(6)
    f = checkerboard(32, 8) + rng.normal(scale=0.1, size=(32, 32))
    cfg = AdmmConfig(10.0, 10.0, TRTV, tol=1e-3)
    a = run(f, None, cfg)
    b = run(f, None, AdmmConfig(10.0, 10.0, TRTV, tol=1e-3, and_stop=True))
    assert a.converged and b.converged
    assert min(a.trace.rel_u_mean[-1], a.trace.rel_q_gap[-1]) <= 1e-3
    assert max(b.trace.rel_u_mean[-1], b.trace.rel_q_gap[-1]) <= 1e-3
    assert b.iterations >= a.iterations


def test_kkt_residuals_at_convergence():
    rng = np.random.default_rng(7)
    f = checkerboard(32, 8) + rng.normal(scale=0.1, size=(32, 32))
    cfg = AdmmConfig(10.0, 10.0, P.truncate(P.l1(), 0.5))
    res = run(f, None, cfg)
    st = res.state
    feas = np.linalg.norm(st.q - grad(st.u)) / np.linalg.norm(grad(f))
    stat = np.linalg.norm(cfg.alpha * (st.u - f) - grad_adjoint(st.mu)) / np.linalg.norm(cfg.alpha * f)
    assert res.converged
    assert feas <= 10 * cfg.tol and stat <= 10 * cfg.tol


def test_lagrangian_tracking():
    rng = np.random.default_rng(8)
    f = checkerboard(16, 4) + rng.normal(scale=0.1, size=(16, 16))
    res = run(f, Convolution(gaussian_kernel(3, 1.0)),
              AdmmConfig(50.0, 20.0, P.truncate(P.log(10.0), 0.5), max_iters=40, track_lagrangian=True))
    assert len(res.trace.lagrangian) == res.iterations
    for l0, l1, l2 in res.trace.lagrangian:
        assert l1 <= l0 + 1e-10 * abs(l0) and l2 <= l1 + 1e-10 * abs(l1)


def test_trace_csv(tmp_path):
    rng = np.random.default_rng(9)
    res = run(rng.uniform(size=(8, 8)), None, AdmmConfig(5.0, 5.0, TRTV, max_iters=5, tol=1e-14))
    path = tmp_path / "trace.csv"
    res.trace.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert tuple(rows[0]) == AdmmTrace.COLUMNS == ("iter", "energy", "rel_u_mean", "rel_q_gap", "mu_drift")
    assert len(rows) == 6 and [int(r[0]) for r in rows[1:]] == [1, 2, 3, 4, 5]
    assert float(rows[1][1]) == res.trace.energy[0]


class _Exploding:
    """A well-posed symbol whose forward map overflows."""

    def apply(self, u):
        return u * 1e308 * 10

    def adjoint(self, u):
        return u

    def symbol_sq(self, shape):
        return np.ones(shape)


def test_divergence_error_carries_trace():
    with pytest.raises(DivergenceError) as ei:
        with np.errstate(over="ignore", invalid="ignore"):
            run(np.full((4, 4), 0.5) + np.eye(4), _Exploding(), AdmmConfig(1.0, 1.0, TRTV))
    assert len(ei.value.trace) == 1


def test_run_input_validation():
    cfg = AdmmConfig(1.0, 1.0, TRTV)
    with pytest.raises(ConfigurationError):
        run(np.zeros(4), None, cfg)
    with pytest.raises(ConfigurationError):
        run(np.array([[np.nan, 0.0]]), None, cfg)
    with pytest.raises(ConfigurationError):
        run(np.zeros((2, 2)), None, None)
