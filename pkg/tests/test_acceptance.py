"""Full-scale acceptance criteria, one test per criterion.

Each test prints (and records for the terminal summary) a single
``PASS/FAIL criterion N: ...`` line.  Run alone with
``pytest tests/test_acceptance.py -v`` or ``python3 tests/test_acceptance.py``.
"""

import functools
import time

import pytest

from conftest import ACCEPTANCE_LINES
from robin_mc.verify import run_suite

pytestmark = pytest.mark.acceptance

SEED = 0


@functools.cache
def _suite(name):
    t0 = time.perf_counter()
    rep = run_suite(name, seed=SEED)
    return rep, time.perf_counter() - t0


def _checks(rep, prefix):
    return [c for c in rep.checks if c.name.startswith(prefix)]


def _report(number, passed, summary):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {summary}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert passed, line


def _failed(rep):
    return [c.name for c in rep.checks if not c.passed]


def test_criterion_1_neumann_conservation():
    rep, secs = _suite("conservation")
    sg = _checks(rep, "semigroup_")
    exact = all(c.observed == 1.0 and c.stderr == 0.0 for c in sg) and len(sg) == 3
    _report(1, rep.passed and exact and secs < 1.0,
            f"Neumann mean=1 stderr=0 on {len(sg)} domains, runtime {secs:.2f}s (< 1s)")


def test_criterion_2_robin_oracle():
    rep, secs = _suite("robin-oracle")
    parts, rel_ok = [], True
    for c in rep.checks:
        rel = c.tolerance / abs(c.reference)
        rel_ok &= rel <= 0.015
        parts.append(f"{c.name} |d|={abs(c.observed - c.reference):.4f} tol={c.tolerance:.4f} ({100 * rel:.2f}%)")
    _report(2, rep.passed and rel_ok and len(rep.checks) == 3, "; ".join(parts) + f"; {secs:.0f}s")


def test_criterion_3_dirichlet():
    rep, _ = _suite("dirichlet")
    on = _checks(rep, "bridge_on")[0]
    off = _checks(rep, "bridge_off_bias_positive")[0]
    bias = ", ".join(f"{b:+.4f}" for b in off.observed)
    _report(3, rep.passed, f"bridge on {on.observed:.5f} vs series {on.reference:.5f} (tol {on.tolerance:.4f}); "
                           f"bridge off bias {bias} for h=4e-4,1e-4,2.5e-5 ({_failed(rep) or 'all checks ok'})")


def test_criterion_4_sandwich():
    rep, _ = _suite("sandwich")
    pw = _checks(rep, "pathwise")
    n = pw[0].inputs["n"]
    _report(4, rep.passed and n >= 10_000 and all(c.observed == 0 for c in pw),
            f"{n} coupled paths, D<=R<=N violations {[c.observed for c in pw]}")


def test_criterion_5_monotone():
    rep, _ = _suite("monotone")
    pw = _checks(rep, "pathwise_monotone")[0]
    _report(5, rep.passed and pw.inputs["n"] >= 10_000 and pw.observed == 0,
            f"ladder 0,1/2,1,2,Dirichlet over {pw.inputs['n']} coupled paths, violations {pw.observed}")


def test_criterion_6_equivalence():
    rep, _ = _suite("equivalence")
    wk = [c for c in _checks(rep, "weight_vs_killed") if c.inputs["n"] >= 100_000]
    doms = sorted({c.inputs["domain"] for c in wk})
    _report(6, rep.passed and doms == ["Disk", "Interval"],
            "; ".join(f"{c.inputs['domain']} |w-k|={c.observed:.5f} <= {c.tolerance:.5f}" for c in wk))


def test_criterion_7_resolvent_identity():
    rep, _ = _suite("resolvent-identity")
    res = _checks(rep, "identity_residual")[0]
    sc = _checks(rep, "stderr_scaling")[0]
    ratios = ", ".join(f"{r:.3f}" for r in sc.observed)
    _report(7, rep.passed, f"residual {res.observed:+.5f} (tol {res.tolerance:.5f}); "
                           f"stderr ratios per 10x paths {ratios} vs {sc.reference[0]:.3f} (+-20%)")


def test_criterion_8_revuz():
    rep, _ = _suite("revuz")
    cons = _checks(rep, "constant_consistency")[0]
    c = _checks(rep, "scheme_constant")[0]
    _report(8, rep.passed, f"scheme constant c = {', '.join(f'{v:.4f}' for v in c.observed)} "
                           f"(Interval, Rectangle), rel. spread {abs(cons.observed - cons.reference) / cons.reference:.2%}"
                           f" (<= 5%)")


def test_criterion_9_mu_convergence():
    rep, _ = _suite("mu-convergence")
    g = _checks(rep, "gap_ratio")[0]
    top = _checks(rep, "grow_top")[0]
    _report(9, rep.passed, f"gap ratio k=16/k=1 {g.observed:.4f} vs oracle {g.reference:.4f}; "
                           f"k=1000 {top.observed:.4f} vs Dirichlet {top.reference:.4f} (tol {top.tolerance:.4f}); "
                           f"pathwise violations {[c.observed for c in _checks(rep, '') if 'pathwise' in c.name]}")


def test_criterion_10_oracle_self_checks():
    rep, _ = _suite("oracle")
    orders = [o for c in rep.checks if "_order" in c.name and "ordering" not in c.name for o in list(c.observed)]
    sep = _checks(rep, "separable")[0]
    _report(10, rep.passed and min(orders) >= 1.9 and sep.observed <= 1e-6,
            f"min observed order {min(orders):.3f} over {len(orders)} refinements; separable error {sep.observed:.1e}"
            + ("" if rep.passed else f"; failed {_failed(rep)}"))


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-s"]))
