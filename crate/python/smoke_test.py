"""Smoke test for the gibbslab Python module.

Run after building the extension, e.g.

    cargo build --release -p gibbslab-py --features extension-module
    cp target/release/libgibbslab.so python/gibbslab.so
    python3 python/smoke_test.py
"""

import math

import gibbslab


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    close(gibbslab.beta_c(3), 4 * math.log(2), 1e-6)
    close(gibbslab.beta_c(2), 2.0, 1e-6)
    bs = gibbslab.beta_s(3)
    assert bs < gibbslab.beta_c(3) - 1e-3

    m = gibbslab.Model(3, 0.9 * bs)
    assert (m.q, m.r) == (3, 2.0)
    g = m.g([0.5, 0.3, 0.2])
    close(sum(g), 1.0, 1e-12)
    close(m.hamiltonian([1 / 3, 1 / 3, 1 / 3]), -1 / 6, 1e-15)

    p = m.update_distribution([5, 3, 2], 0)
    close(sum(p), 1.0, 1e-12)

    eq = m.equilibrium()
    assert eq["phase"] == "unique" and eq["u"] == 0.0

    weights = gibbslab.Model(2, 1.0).gibbs_weights(2)
    by_state = {tuple(s): w for s, w in weights}
    close(by_state[(1, 1)], 1 / (1 + math.exp(0.5)), 1e-12)

    z = [0.6, 0.3, 0.1]
    close(m.aggregate_variation(z), m.aggregate_variation(z, quadrature=True), 1e-8)

    for rep in (
        gibbslab.check_contraction(m, grid_resolution=80),
        gibbslab.check_riemann(m, 0.05, grid_resolution=80),
        gibbslab.check_local(m),
    ):
        assert rep["holds"] and rep["sup_ratio"] < 1.0, rep

    t_mix, curve = gibbslab.mixing_time(gibbslab.Model(3, 1.0), 10)
    assert len(curve) == t_mix + 1 and curve[-1] <= 0.25

    times, counts = gibbslab.simulate(m, 20, 50, seed=1, record_every=10)
    assert times == [0, 10, 20, 30, 40, 50]
    assert all(sum(c) == 20 for c in counts)
    assert gibbslab.simulate(m, 20, 50, seed=1, record_every=10) == (times, counts)

    run = gibbslab.couple(gibbslab.Model(3, 1.0), 50, 20, seed=7)
    assert run["censored_fraction"] == 0.0 and len(run["coupling_times"]) == 20
    assert run == gibbslab.couple(gibbslab.Model(3, 1.0), 50, 20, seed=7)

    try:
        m.g([0.5, 0.5])
    except ValueError:
        pass
    else:
        raise AssertionError("dimension mismatch accepted")
    try:
        gibbslab.check_contraction(gibbslab.Model(3, 4.0))
    except gibbslab.ComputationError:
        pass
    else:
        raise AssertionError("ordered phase accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
