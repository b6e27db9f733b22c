"""Smoke test for the renewal_lab extension module.

Build and install with
    pip install --no-build-isolation -e crates/py
then run
    python3 crates/py/python/smoke_test.py
"""

import math

import renewal_lab as rl


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b} (tol {tol})"


def main():
    walk = rl.Chain.random_walk(q=0.75)
    assert walk.name == "random_walk" and walk.is_lattice
    close(walk.limit_mean, 0.5, 1e-15)

    g = rl.green_function(walk, 0, -60, 80)
    for n in range(1, 21):
        close(g.mass_at(n), 2.0, g.bracket_width + 1e-6)
    close(g.mass_at(-1), 2.0 / 3.0, g.bracket_width + 1e-6)

    m = rl.renewal_measure(walk, [(0, 1.0)], -60, 210, probe=(0, 160))
    rep = rl.limit_report(m, 1.0, 1.0, 0.5, (100, 150))
    assert rep["relative_error"] < 1e-3, rep
    assert rl.flatness_check(m, (100, 150)) < 1e-3

    tb = rl.Chain.three_branch(0.5)
    mt = rl.renewal_measure(tb, [(0, 1.0)], -60, 210, probe=(0, 160))
    rep = rl.limit_report(mt, 1.0, 0.5, 0.5, (100, 150))
    close(rep["target"], 1.0, 1e-12)
    close(rep["uncorrected_target"], 2.0, 1e-12)
    assert rep["relative_error"] < 2e-2 and rep["discrepancy"]

    p0 = rl.p0_exact(tb, [(0, 1.0)], -60, 210, 1000)
    assert p0["lower"] <= 0.5 <= p0["upper"] + 1e-12

    bound = rl.theorem2_bound(1.0, 1.0, "corollary", epsilon=0.5)
    close(bound["bound"], 8.0, 1e-12)
    table = rl.verify_bound(m, bound["bound"], list(range(10, 101)))
    assert table["all_pass"]

    cert = rl.check_domination(tb, "majorant", [(1, 1.0)])
    assert cert["valid"]
    cert = rl.check_domination(rl.Chain.counterexample(), "majorant", [(1, 1.0)])
    assert not cert["valid"]

    mc = rl.estimate_renewal(walk, [(0, 1.0)], [(50.0, 1.0)], 400, 2000, 7)
    est = mc["estimates"][0]["estimate"]
    close(est["value"], 2.0, 4 * est["stderr"])
    again = rl.estimate_renewal(walk, [(0, 1.0)], [(50.0, 1.0)], 400, 2000, 7)
    assert again == mc

    ce = rl.counterexample_growth(6, 8)
    assert len(ce["rows"]) == 3
    assert all(math.isfinite(r["ratio"]) for r in ce["rows"])

    try:
        rl.Chain.three_branch(1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid p accepted")

    print("renewal_lab smoke test: ok")


if __name__ == "__main__":
    main()
