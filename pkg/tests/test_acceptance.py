"""Acceptance criteria, one test each, at the stated tolerances.

Every test prints a ``criterion NN PASS/FAIL`` line (collected again in the
terminal summary).  Criteria that do not hold for this implementation are
marked ``xfail(strict=True)``: they are run in full and their assertion
fails, so an unexpected pass is reported too.

Run alone with ``python3 -m pytest tests/test_acceptance.py -v -s``.
"""
import sys
import time

import numpy as np
import pytest

from kfw.bench import (
    gen_cone_polygon,
    gen_group_lasso,
    gen_hypercube_projection,
    gen_lasso,
    gen_matrix_completion,
    gen_planted_group,
    gen_planted_nuclear,
    gen_planted_simplex,
    gen_planted_spectrahedron,
    gen_simplex_projection,
    gen_svm,
)
from kfw.certificates import certify, delta_gap, dilation_slack, sparsity_measure
from kfw.projections import (
    project_capped_simplex,
    project_group_domain,
    project_simplex,
    project_spectral_nuclear,
    project_spectral_simplex,
)
from kfw.sets import GroupNormBall, Hypercube, L1Ball, Simplex, SignedCoords, Vertices
from kfw.solvers import SolverConfig, solve
import kfw.solvers as solvers

from conftest import report
from oracles import (
    group_projection_by_bisection,
    hypercube_vertices,
    k_best_groups,
    l1_atoms,
    nuclear_projection_by_bisection,
    random_orthonormal,
    simplex_vertices,
    spectral_simplex_by_dykstra,
)

# Reference optima of the desk instances, from an accelerated projected
# gradient oracle (tests/oracles.py: quadratic_fista) run to 5e4 steps and
# the kFW solver with k at the solution sparsity; the lower value is kept.
# Both runs agree to 2e-11 relative.
LASSO_F_STAR = 0.14787119886571
LASSO_R_STAR = 86           # nonzeros of the reference solution
GROUP_F_STAR = 0.19547663407684013
GROUP_R_STAR = 11           # live groups of the reference solution
SVM_R_STAR = 25             # support of the reference dual solution


# ---------------------------------------------------------------- 1 oracle equivalence

def _atoms_of(fset, out):
    if isinstance(out, Vertices):
        return [np.asarray(p) for p in out.points]
    if isinstance(out, SignedCoords):
        return [fset.atom(i, s) for i, s in zip(out.indices, out.signs)]
    raise TypeError(type(out))


def _best_atoms(atoms, g, k):
    vals = np.array([a @ g for a in atoms])
    return [atoms[i] for i in np.argsort(vals, kind="stable")[:k]]


def _same_atoms(a, b):
    return sorted(map(tuple, np.round(a, 12))) == sorted(map(tuple, np.round(b, 12)))


def test_criterion_01_oracle_equivalence():
    rng = np.random.default_rng(101)
    failures = []
    start = time.perf_counter()
    cases = [("simplex", lambda n: Simplex(n), simplex_vertices, 100),
             ("l1", lambda n: L1Ball(n, 1.7), lambda n: l1_atoms(n, 1.7), 100),
             ("hypercube", lambda n: Hypercube(n), hypercube_vertices, 10)]
    for name, make, enum, n_max in cases:
        cache = {}
        for trial in range(100):
            n = int(rng.integers(2, n_max + 1))
            fset = make(n)
            if n not in cache:
                cache[n] = enum(n)
            atoms = cache[n]
            k = int(rng.integers(1, len(atoms) + 1))
            g = rng.standard_normal(n)
            got = _atoms_of(fset, fset.kloo(g, k))
            if not _same_atoms(got, _best_atoms(atoms, g, k)):
                failures.append((name, trial))
    for trial in range(100):
        n_groups = int(rng.integers(1, 13))
        fset = GroupNormBall.contiguous(n_groups, int(rng.integers(1, 5)), 1.0)
        k = int(rng.integers(1, n_groups + 1))
        g = rng.standard_normal(fset.shape)
        got = sorted(np.asarray(fset.kloo(g, k).ids).tolist())
        if got != sorted(k_best_groups(g, fset.groups, k)):
            failures.append(("group", trial))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 10.0
    report(1, "oracle equivalence (kloo vs exhaustive k-best)", ok,
           f"{len(failures)} mismatches / 400, {elapsed:.2f}s")
    assert ok, failures[:5]


# ---------------------------------------------------------------- 2 projections

def _group_op():
    groups = [np.array([0, 1]), np.array([2]), np.array([3, 4, 5])]

    def project(v):
        eta, lam = project_group_domain(v[0], v[1:], groups, 1.0)
        return np.concatenate([[eta], lam])

    def oracle(v):
        eta, lam = group_projection_by_bisection(v[0], v[1:], groups, 1.0)
        return np.concatenate([[eta], lam])

    return project, oracle, 7, False


def _spectral_op(kind):
    fn = project_spectral_simplex if kind == "simplex" else project_spectral_nuclear
    ref = spectral_simplex_by_dykstra if kind == "simplex" else nuclear_projection_by_bisection

    def project(v):
        eta, S = fn(v[0], v[1:].reshape(3, 3))
        return np.concatenate([[eta], S.ravel()])

    def oracle(v):
        eta, S = ref(v[0], v[1:].reshape(3, 3))
        return np.concatenate([[eta], S.ravel()])

    return project, oracle, 10, kind == "simplex"


def test_criterion_02_projection_correctness():
    rng = np.random.default_rng(202)
    ops = {
        "simplex": (project_simplex, None, 6, False),
        "capped_simplex": (project_capped_simplex, None, 6, False),
        "group_domain": _group_op(),
        "spectral_simplex": _spectral_op("simplex"),
        "spectral_nuclear": _spectral_op("nuclear"),
    }
    worst = {"idem": 0.0, "expand": -np.inf, "vi": -np.inf, "oracle": 0.0}
    for name, (project, oracle, dim, sym) in ops.items():
        def draw(scale=2.0):
            v = scale * rng.standard_normal(dim)
            if sym:
                S = v[1:].reshape(3, 3)
                v[1:] = (0.5 * (S + S.T)).ravel()
            return v

        for _ in range(20):
            z1, z2 = draw(), draw()
            p1, p2 = project(z1), project(z2)
            worst["idem"] = max(worst["idem"], np.max(np.abs(project(p1) - p1)))
            worst["expand"] = max(worst["expand"],
                                  np.linalg.norm(p1 - p2) - np.linalg.norm(z1 - z2))
            qs = np.array([project(draw(3.0)) for _ in range(1000)])
            worst["vi"] = max(worst["vi"], np.max((qs - p1) @ (z1 - p1)))
            if oracle is not None:
                worst["oracle"] = max(worst["oracle"], np.max(np.abs(p1 - oracle(z1))))
    ok = (worst["idem"] <= 1e-10 and worst["expand"] <= 1e-12
          and worst["vi"] <= 1e-8 and worst["oracle"] <= 1e-6)
    report(2, "projection correctness", ok,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))
    assert ok, worst


# ---------------------------------------------------------------- 3 envelope

def test_criterion_03_sublinear_envelope():
    cases = [(gen_lasso(), LASSO_F_STAR, LASSO_R_STAR),
             (gen_group_lasso(), GROUP_F_STAR, GROUP_R_STAR),
             (gen_matrix_completion(), 0.0, 3)]
    violations, checked = [], 0
    for prob, f_star, r_star in cases:
        L = prob.objective.lipschitz
        D = prob.feasible_set.diameter()
        runs = [("fw", 1)] + [("kfw", k) for k in (1, 5, r_star)]
        for alg, k in runs:
            _, tr = solve(prob, SolverConfig(algorithm=alg, k=k, max_iter=100))
            h = tr.objectives[1:] - f_star
            t = np.arange(1, h.size + 1)
            bad = np.flatnonzero(h > L * D**2 / t)
            checked += h.size
            if bad.size:
                violations.append((prob.name, alg, k, int(bad[0]) + 1))
    ok = not violations
    report(3, "f(x_t) - f* <= L D^2 / t for FW and kFW", ok,
           f"{len(violations)} violating runs, {checked} iterates checked")
    assert ok, violations


# ---------------------------------------------------------------- 4 finite convergence

def _first_exact(trace, tol=1e-9):
    hits = np.flatnonzero(trace.gaps < tol)
    return int(hits[0]) if hits.size else None


def test_criterion_04_finite_convergence():
    cfg = dict(algorithm="kfw", rel_change_tol=0.0, fw_gap_tol=1e-9)
    details, ok = [], True

    small = gen_simplex_projection([0.7, 0.5, -0.5], scale=0.5)
    x_ref = np.array([0.6, 0.4, 0.0])
    cert = certify(small, x_ref, samples=500)
    ok &= cert.r_star == 2 and abs(cert.delta - 0.6) <= 1e-12
    x, tr = solve(small, SolverConfig(k=2, max_iter=10, **cfg))
    t_exact = _first_exact(tr)
    ok &= t_exact is not None and t_exact <= 10 and t_exact <= cert.T_bound + 1
    ok &= np.allclose(x, x_ref, atol=1e-9)
    details.append(f"p-example delta {cert.delta:.3g}, exact at t={t_exact}, "
                   f"T_bound {cert.T_bound:.3g}")

    planted = gen_planted_simplex(n=50, r=5, seed=0)
    cert = certify(planted, planted.x_star, samples=500)
    ok &= cert.r_star == 5
    _, tr = solve(planted, SolverConfig(k=5, max_iter=40, **cfg))
    t_exact = _first_exact(tr)
    ok &= t_exact is not None and t_exact <= 40 and t_exact <= cert.T_bound + 1
    details.append(f"planted r*=5 exact at t={t_exact}, T_bound {cert.T_bound:.3g}")
    report(4, "finite convergence of kFW with k = r*", ok, "; ".join(details))
    assert ok


# ---------------------------------------------------------------- 5 linear convergence

def _suboptimality_history(prob, alg, k, max_iter, monkeypatch):
    """Accurate ``f(X_t) - f*`` for planted quadratics: ``||X - X*||^2 +
    <G*, X - X*>``, free of the cancellation in a plain difference."""
    xs = []
    orig = solvers._Runner._record

    def record(self, *args):
        xs.append(np.array(self.x))
        orig(self, *args)

    with monkeypatch.context() as m:
        m.setattr(solvers._Runner, "_record", record)
        solve(prob, SolverConfig(algorithm=alg, k=k, max_iter=max_iter, rel_change_tol=0.0))
    X0, G0 = prob.x_star, prob.objective.gradient(prob.x_star)
    return np.array([np.sum((x - X0) ** 2) + np.sum(G0 * (x - X0)) for x in xs])


def _median_ratio(h, window=20):
    # ratios past the rounding floor carry no information; stop there
    floor = 1e-12 * h[0]
    stop = np.flatnonzero(h <= floor)
    h = h[:stop[0]] if stop.size else h
    r = h[1:] / h[:-1]
    r = r[-window:]
    return float(np.median(r)), r.size


def test_criterion_05_linear_convergence(monkeypatch):
    ok, details = True, []
    for prob in (gen_planted_spectrahedron(n=60, rank=2, gap=0.2),
                 gen_planted_nuclear(n1=40, n2=50, rank=3)):
        r = prob.meta["k_star"]
        kfw_med, n_k = _median_ratio(_suboptimality_history(prob, "kfw", r, 25, monkeypatch))
        fw_med, n_f = _median_ratio(_suboptimality_history(prob, "fw", 1, 200, monkeypatch))
        ok &= kfw_med <= 0.9 and fw_med >= 0.97
        details.append(f"{prob.name}: kFW {kfw_med:.3f} ({n_k} ratios), "
                       f"FW {fw_med:.4f} ({n_f})")
    report(5, "geometric decay of kFW vs sublinear FW", ok, "; ".join(details))
    assert ok


# ---------------------------------------------------------------- 6 worst cases

def test_criterion_06_worst_case_examples():
    cone = gen_cone_polygon(200)
    np.testing.assert_array_equal(cone.start(), [0.0, 0.0, 0.1])
    base = dict(max_iter=30, rel_change_tol=0.0)
    _, fw = solve(cone, SolverConfig(algorithm="fw", **base))
    _, kf = solve(cone, SolverConfig(algorithm="kfw", k=5, **base))
    f_fw, f_k = fw.objectives[30], kf.objectives[30]
    cone_ok = f_k >= 0.5 * f_fw and fw.iterations == kf.iterations == 30

    cube = gen_hypercube_projection(n=50, n_fractional=10)
    tight = dict(rel_change_tol=0.0, fw_gap_tol=1e-8)
    _, lk = solve(cube, SolverConfig(algorithm="lkfw", k=11, max_iter=25, **tight))
    _, kk = solve(cube, SolverConfig(algorithm="kfw", k=11, max_iter=100, **tight))
    lk_hit, kk_hit = _first_exact(lk, 1e-8), _first_exact(kk, 1e-8)
    cube_ok = lk_hit is not None and lk_hit <= 25 and kk_hit is None
    ok = cone_ok and cube_ok
    report(6, "worst-case cone and hypercube examples", ok,
           f"cone f30: kFW {f_k:.3e} vs FW {f_fw:.3e}; cube LkFW gap<1e-8 at t={lk_hit}, "
           f"kFW min gap {kk.gaps.min():.1e} in 100")
    assert ok


# ---------------------------------------------------------------- 7 baseline ordering

@pytest.mark.xfail(strict=True, reason="FW-type baselines do not reach the objective "
                   "within 1e-5 of kFW inside the 1000-iteration budget; on the group Lasso "
                   "kFW with k = r* needs about 24% of pairwise-FW's iterations")
def test_criterion_07_baseline_ordering():
    cases = [("lasso", gen_lasso(), LASSO_R_STAR),
             ("svm", gen_svm(), SVM_R_STAR),
             ("group_lasso", gen_group_lasso(), GROUP_R_STAR)]
    ok, details = True, []
    for name, prob, r_star in cases:
        runs = {}
        for alg in ("kfw", "fw", "away", "pairwise"):
            _, tr = solve(prob, SolverConfig(algorithm=alg, k=r_star if alg == "kfw" else 1))
            runs[alg] = tr
        it_k = runs["kfw"].iterations
        f_k = runs["kfw"].objectives[-1]
        ratios = {a: it_k / runs[a].iterations for a in ("fw", "away", "pairwise")}
        rel = {a: abs(runs[a].objectives[-1] - f_k) / abs(f_k) for a in ("fw", "away", "pairwise")}
        ok &= all(v <= 0.2 for v in ratios.values()) and all(v <= 1e-5 for v in rel.values())
        details.append(f"{name}: kFW {it_k} it, ratio max {max(ratios.values()):.3f}, "
                       f"obj rel max {max(rel.values()):.1e}")
    report(7, "kFW iterations <= 20% of FW/away/pairwise, objectives agree", ok,
           "; ".join(details))
    assert ok


# ---------------------------------------------------------------- 8 adaptive k

@pytest.mark.xfail(strict=True, reason="doubling k freezes below the solution sparsity "
                   "(86) and the runs stall above the fixed-k optimum")
def test_criterion_08_adaptive_k():
    prob = gen_lasso()
    _, ref = solve(prob, SolverConfig(algorithm="kfw", k=LASSO_R_STAR))
    f_ref = ref.objectives[-1]
    ok, details = True, []
    for k0 in (1, 4, 16):
        _, tr = solve(prob, SolverConfig(algorithm="kfw_adaptive", k=k0))
        ks = np.array(tr.k_history)
        monotone = np.all(np.diff(ks) >= 0)
        jumps = np.flatnonzero(np.diff(ks) > 0)
        frozen = jumps.size == 0 or np.all(ks[jumps[-1] + 1:] == ks[-1])
        rel = abs(tr.objectives[-1] - f_ref) / abs(f_ref)
        ok &= bool(monotone and frozen and rel <= 1e-6)
        details.append(f"k0={k0}: rel {rel:.1e}, final k {ks[-1]}")
    report(8, "adaptive k reaches fixed-k objective", ok, "; ".join(details))
    assert ok


# ---------------------------------------------------------------- 9 certificate formulas

def test_criterion_09_certificate_formulas():
    planted = [gen_planted_simplex(n=50, r=5, seed=1, gap=0.15),
               gen_planted_group(n_groups=12, size=4, live=3, seed=2, gap=0.25, alpha=1.5),
               gen_planted_spectrahedron(n=60, rank=2, gap=0.2, seed=3),
               gen_planted_nuclear(n1=40, n2=50, rank=3, seed=4)]
    errs = []
    for prob in planted:
        g = prob.objective.gradient(prob.x_star)
        d = delta_gap(prob.feasible_set, g, prob.meta["k_star"])
        errs.append(abs(d - prob.meta["delta"]))
    cone = []
    for n in (3, 8, 50):
        prob = gen_cone_polygon(n)
        sup = sparsity_measure(prob.feasible_set, prob.x_star)
        cone.append(delta_gap(prob.feasible_set, prob.objective.gradient(prob.x_star), sup))
    spread = max(cone) - min(cone)
    ok = max(errs) <= 1e-8 and spread <= 1e-10
    report(9, "planted gaps and cone-polygon delta invariance", ok,
           f"max planted error {max(errs):.1e}, cone delta {cone[0]:.6g} spread {spread:.1e}")
    assert ok


# ---------------------------------------------------------------- 10 dilation inequality

@pytest.mark.xfail(strict=True, reason="the difference equals "
                   "-2||S2^(1/2)(U2'U1 - V2'V1)S1^(1/2)||_F^2, so the stated inequality "
                   "points the wrong way")
def test_criterion_10_dilation_inequality():
    rng = np.random.default_rng(1010)
    slack = []
    for _ in range(1000):
        n1, n2 = rng.integers(2, 9, size=2)
        r1, r2 = rng.integers(1, min(n1, n2) + 1, size=2)
        U1, U2 = random_orthonormal(rng, n1, r1), random_orthonormal(rng, n1, r2)
        V1, V2 = random_orthonormal(rng, n2, r1), random_orthonormal(rng, n2, r2)
        B1, B2 = rng.standard_normal((r1, r1)), rng.standard_normal((r2, r2))
        slack.append(dilation_slack(U1, B1 @ B1.T, V1, U2, B2 @ B2.T, V2))
    slack = np.array(slack)
    ok = slack.min() >= -1e-10
    report(10, "dilation Frobenius inequality", ok,
           f"min slack {slack.min():.3e}, {np.count_nonzero(slack < -1e-10)}/1000 below -1e-10")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
