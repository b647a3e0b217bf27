"""The full property-check suite behind the verify command.

Every check returns a :class:`CheckResult` with its observed margins, so a
failure says how far off the implementation is, not just that it is off.
Tolerances are pinned here as keyword defaults; the acceptance tests invoke
the same functions with the same values.

``inject_skip_projection`` routes the checks that exercise the projector
through an identity function instead, simulating an implementation that
forgets to project; the orthogonality and steepest-descent checks must then
fail.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import oracle, tasks
from .goldens import GOLDEN_MARGINS
from .linalg import OrthonormalBasis, dot, gram_schmidt, norm, project_complement
from .metrics import alignment_tax, records_to_csv
from .models import Batch, LossKind, ModelSpec
from .optimizer import NO_REFRESH, Stage, TrainConfig, train
from .subspace import estimate_subspace

__all__ = ["CheckResult", "run_all", "CHECKS"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    details: str
    elapsed: float


def _identity_projector(g, basis):
    return np.asarray(g, dtype=np.float64).copy()


def _projector(inject: bool):
    return _identity_projector if inject else project_complement


# ---------------------------------------------------------------------------
# criterion 1: orthogonality suite
# ---------------------------------------------------------------------------

def check_orthogonality_suite(seed: int = 0, dims=(10, 100, 1000), max_cands: int = 8,
                              seeds_per_cell: int = 100, tol_gram: float = 1e-10,
                              tol_residual: float = 1e-8, tol_idem: float = 1e-12,
                              tol_pyth: float = 1e-9, budget_s: float = 10.0,
                              inject: bool = False) -> CheckResult:
    start = time.time()
    project = _projector(inject)
    worst_gram = worst_resid = worst_idem = worst_pyth = 0.0
    contraction_violations = 0
    root = np.random.SeedSequence(seed)
    for d in dims:
        for m in range(1, max_cands + 1):
            rngs = [np.random.default_rng(s) for s in root.spawn(seeds_per_cell)]
            for rng in rngs:
                cands = rng.standard_normal((m, d))
                basis = gram_schmidt(cands, delta=1e-6 * max(norm(c) for c in cands))
                worst_gram = max(worst_gram, basis.orthonormality_defect())
                g = rng.standard_normal(d)
                g_norm = norm(g)
                proj = project(g, basis)
                resid = max((abs(dot(proj, u)) for u in basis.vectors), default=0.0)
                worst_resid = max(worst_resid, resid / g_norm)
                if norm(proj) > g_norm:
                    contraction_violations += 1
                twice = project(proj, basis)
                worst_idem = max(worst_idem, float(np.abs(twice - proj).max()))
                coeffs_sq = sum(dot(g, u) ** 2 for u in basis.vectors)
                pyth = abs(g_norm ** 2 - (norm(proj) ** 2 + coeffs_sq)) / g_norm ** 2
                worst_pyth = max(worst_pyth, pyth)
    elapsed = time.time() - start
    passed = (worst_gram <= tol_gram and worst_resid <= tol_residual
              and worst_idem <= tol_idem and worst_pyth <= tol_pyth
              and contraction_violations == 0 and elapsed < budget_s)
    details = (f"gram={worst_gram:.2e}<={tol_gram:g} residual={worst_resid:.2e}<={tol_residual:g} "
               f"idem={worst_idem:.2e}<={tol_idem:g} pythagoras={worst_pyth:.2e}<={tol_pyth:g} "
               f"contraction_violations={contraction_violations} elapsed={elapsed:.2f}s<{budget_s:g}s")
    return CheckResult("orthogonality_suite", passed, details, elapsed)


# ---------------------------------------------------------------------------
# criterion 2: rank filtering
# ---------------------------------------------------------------------------

def check_rank_filtering(seed: int = 0, d: int = 50, ranks=(1, 2, 3, 4, 5),
                         n_candidates: int = 8, n_seeds: int = 50) -> CheckResult:
    start = time.time()
    failures = 0
    trials = 0
    root = np.random.SeedSequence(seed + 1)
    for r in ranks:
        for child in root.spawn(n_seeds):
            rng = np.random.default_rng(child)
            span = rng.standard_normal((r, d))
            coeffs = rng.standard_normal((n_candidates, r))
            cands = coeffs @ span
            cands /= np.sqrt((cands * cands).sum(axis=1))[:, None]  # O(1) norms
            basis = gram_schmidt(cands, delta=1e-6)
            trials += 1
            if basis.rank != r:
                failures += 1
    elapsed = time.time() - start
    return CheckResult("rank_filtering", failures == 0,
                       f"{trials} candidate sets, rank mismatches={failures}", elapsed)


# ---------------------------------------------------------------------------
# criterion 3: gradient correctness (finite differences)
# ---------------------------------------------------------------------------

def _fd_cases(rng: np.random.Generator):
    """One seeded configuration per supported (model, loss) pair."""
    cases = []

    spec = ModelSpec("quadratic", (12,))
    a = rng.standard_normal((6, 12))
    b = rng.standard_normal(6)
    cases.append((spec, LossKind("squared_error"), rng.standard_normal(12), Batch(a, b)))

    spec = ModelSpec("linear_regression", (20,))
    x = rng.standard_normal((16, 20))
    y = rng.standard_normal(16)
    cases.append((spec, LossKind("squared_error"), rng.standard_normal(20), Batch(x, y)))

    spec = ModelSpec("logistic_regression", (20,))
    x = rng.standard_normal((16, 20))
    y = (rng.random(16) < 0.5).astype(np.float64)
    cases.append((spec, LossKind("cross_entropy"), 0.5 * rng.standard_normal(20), Batch(x, y)))

    for activation in ("tanh", "relu"):
        spec = ModelSpec("mlp2", (4, 8, 1), activation=activation)
        x = rng.standard_normal((16, 4))
        y = rng.standard_normal(16)
        theta = 0.5 * rng.standard_normal(spec.param_dim)
        if activation == "relu":
            # central differences are invalid across a relu kink; redraw
            # until every preactivation clears the probe window by 100h
            while np.abs(x @ theta[:32].reshape(8, 4).T + theta[32:40]).min() < 1e-3:
                theta = 0.5 * rng.standard_normal(spec.param_dim)
        cases.append((spec, LossKind("squared_error"), theta, Batch(x, y)))

    spec = ModelSpec("softmax_policy", (6, 8))
    x = rng.standard_normal((16, 6))
    y = rng.integers(0, 8, size=16)
    cases.append((spec, LossKind("nll_sft"), 0.5 * rng.standard_normal(48), Batch(x, y)))

    x = rng.standard_normal((10, 6))
    pairs = np.column_stack([np.arange(10), rng.integers(0, 4, 10), 4 + rng.integers(0, 4, 10)])
    cases.append((spec, LossKind("dpo_pairwise", beta=0.2),
                  0.5 * rng.standard_normal(48),
                  Batch(x, pairs=pairs, ref_params=0.5 * rng.standard_normal(48))))
    return cases


def check_gradient_correctness(seed: int = 0, n_configs: int = 20,
                               tol: float = 1e-4) -> CheckResult:
    start = time.time()
    fd = oracle.FDConfig(h=1e-5, rel_tol=tol)
    worst = 0.0
    worst_case = ""
    root = np.random.SeedSequence(seed + 2)
    for child in root.spawn(n_configs):
        rng = np.random.default_rng(child)
        for spec, kind, theta, batch in _fd_cases(rng):
            err = oracle.gradient_agreement(spec, kind, theta, batch, fd)
            if err > worst:
                worst, worst_case = err, f"{spec.kind}/{kind.tag}"
    elapsed = time.time() - start
    return CheckResult("gradient_correctness", worst <= tol,
                       f"max per-coordinate rel err={worst:.2e}<= {tol:g} (worst: {worst_case}), "
                       f"{n_configs} configs x 7 pairs", elapsed)


# ---------------------------------------------------------------------------
# criterion 4: steepest feasible descent
# ---------------------------------------------------------------------------

def check_steepest_bound(seed: int = 0, dims=(2, 10, 50), ranks=(0, 1, 3, 5),
                         n_samples: int = 10_000, slack: float = 1e-9,
                         tol_attain: float = 1e-12, tol_feasible: float = 1e-9,
                         inject: bool = False) -> CheckResult:
    start = time.time()
    project = _projector(inject)
    violations = 0
    worst_attain = 0.0
    worst_feasible = 0.0
    cells = 0
    children = iter(np.random.SeedSequence(seed + 3).spawn(len(dims) * len(ranks)))
    for d in dims:
        for m in ranks:
            child = next(children)
            if m >= d:
                continue  # the bound assumes a nonzero orthogonal complement
            rng = np.random.default_rng(child)
            g = rng.standard_normal(d)
            if m:
                basis = gram_schmidt(rng.standard_normal((m, d)), delta=1e-8)
            else:
                basis = OrthonormalBasis.empty(d)
            g_perp = project(g, basis)
            bound = -norm(g_perp)
            report = oracle.steepest_check(g, basis, n_samples, rng, slack=slack)
            cells += 1
            violations += int(np.count_nonzero(np.array([report.min_directional]) < bound - slack))
            violations += report.violations
            # analytic attainment, via the (possibly injected) projector
            v_star = -g_perp / norm(g_perp)
            worst_attain = max(worst_attain, abs(dot(g, v_star) - bound))
            feas = max((abs(dot(v_star, u)) for u in basis.vectors), default=0.0)
            worst_feasible = max(worst_feasible, feas)
    elapsed = time.time() - start
    passed = violations == 0 and worst_attain <= tol_attain and worst_feasible <= tol_feasible
    return CheckResult("steepest_descent_bound", passed,
                       f"{cells} (d, rank) cells x {n_samples} samples: violations={violations}, "
                       f"attainment err={worst_attain:.2e}<={tol_attain:g}, "
                       f"v* feasibility={worst_feasible:.2e}<={tol_feasible:g}", elapsed)


# ---------------------------------------------------------------------------
# criterion 5: first-order preservation
# ---------------------------------------------------------------------------

def check_first_order(seed: int = 0, etas=(1e-2, 1e-3, 1e-4),
                      slope_tol: float = 0.2, remainder_tol: float = 1e-6,
                      quarter_tol: float = 1e-6) -> CheckResult:
    start = time.time()
    fam = tasks.quadratic_family(12, math.pi / 4, seed=seed)
    rep_orth = oracle.taylor_scaling(fam, etas, "ortho")
    rep_naive = oracle.taylor_scaling(fam, etas, "naive")
    ok_slopes = (abs(rep_orth.slope - 2.0) <= slope_tol
                 and abs(rep_naive.slope - 1.0) <= slope_tol)
    ok_remainder = rep_orth.max_remainder_mismatch <= remainder_tol

    # eta -> eta/2 must shrink the projected step's reference-loss change 4x
    safety = fam.tasks["safety"]
    ref = fam.capability_tasks[0]
    sub = estimate_subspace(fam.theta0, [ref], 1, np.random.default_rng(0), 1e-6, 0.0, 0)
    g = project_complement(safety.gradient(fam.theta0), sub.basis)
    l0 = ref.loss(fam.theta0)
    eta = etas[0]
    change_full = ref.loss(fam.theta0 - eta * g) - l0
    change_half = ref.loss(fam.theta0 - 0.5 * eta * g) - l0
    quarter_err = abs(change_full / change_half - 4.0) / 4.0
    ok_quarter = quarter_err <= quarter_tol

    elapsed = time.time() - start
    passed = ok_slopes and ok_remainder and ok_quarter
    return CheckResult("first_order_preservation", passed,
                       f"slope(ortho)={rep_orth.slope:.3f} in 2.0+-0.2, "
                       f"slope(naive)={rep_naive.slope:.3f} in 1.0+-0.2, "
                       f"remainder mismatch={rep_orth.max_remainder_mismatch:.2e}<=1e-6, "
                       f"eta/2 quartering err={quarter_err:.2e}<=1e-6", elapsed)


# ---------------------------------------------------------------------------
# criterion 6: reduction identities
# ---------------------------------------------------------------------------

def _bitwise_equal(a, b) -> bool:
    return (a.theta_final.tobytes() == b.theta_final.tobytes()
            and records_to_csv(a.records) == records_to_csv(b.records))


def check_reduction_identities(seed: int = 0, steps: int = 100) -> CheckResult:
    start = time.time()
    fam = tasks.regression_family(16, 12, math.pi / 3, 1.0, 200, 2000, seed)
    stages = (Stage("safety", "squared_error", steps),)
    base = dict(eta=0.02, steps=steps, refresh_every=5, safety_batch=64,
                ref_batch=200, seed=seed, stages=stages)
    naive = train(TrainConfig(method="naive", ref_count=2, **base), fam)
    ortho_m0 = train(TrainConfig(method="ortho", ref_count=0, **base), fam)
    replay_l0 = train(TrainConfig(method="replay", ref_count=2, replay_lambda=0.0, **base), fam)
    ok_m0 = _bitwise_equal(naive, ortho_m0)
    ok_l0 = _bitwise_equal(naive, replay_l0)
    elapsed = time.time() - start
    return CheckResult("reduction_identities", ok_m0 and ok_l0,
                       f"{steps}-step runs bitwise: ortho(M=0)==naive: {ok_m0}, "
                       f"replay(lambda=0)==naive: {ok_l0}", elapsed)


# ---------------------------------------------------------------------------
# criterion 7: tax mitigation with recorded goldens
# ---------------------------------------------------------------------------

REGRESSION_DEFAULTS = dict(d=16, hidden=12, alpha=math.pi / 3, noise_sigma=1.0,
                           n_capability=200, n_safety=2000)
REGRESSION_TRAIN = dict(eta=0.02, steps=300, refresh_every=5, ref_count=2,
                        safety_batch=64, ref_batch=200,
                        stages=(Stage("safety", "squared_error", 300),))
POLICY_DEFAULTS = dict(context_dim=8, vocab=10, n_capability=200, n_safety=2000)
POLICY_TRAIN = dict(eta=0.2, steps=100, refresh_every=5, ref_count=2,
                    safety_batch=32, ref_batch=200,
                    stages=(Stage("sft", "nll_sft", 60, 30),
                            Stage("dpo", "dpo_pairwise", 40, 5)))


def _default_family(kind: str, seed: int):
    if kind == "regression_mlp":
        return tasks.regression_family(seed=seed, **REGRESSION_DEFAULTS)
    return tasks.policy_family(seed=seed, **POLICY_DEFAULTS)


def _mitigation_margins(kind: str, seed: int):
    """Per-seed mitigation measurements on a default family."""
    fam = _default_family(kind, seed)
    train_kwargs = REGRESSION_TRAIN if kind == "regression_mlp" else POLICY_TRAIN
    out = {}
    for method in ("ortho", "naive", "replay"):
        result = train(TrainConfig(method=method, seed=seed, **train_kwargs), fam)
        report = alignment_tax(result, fam)
        out[method] = (result, report)
    o, n, p = out["ortho"][1], out["naive"][1], out["replay"][1]
    margins = {
        "tax_ortho": list(o.tax),
        "tax_naive": list(n.tax),
        "tax_replay": list(p.tax),
        "gain_ratio": o.safety_gain / n.safety_gain,
    }
    if kind == "policy_sft_dpo":
        drops = {}
        for method in ("ortho", "naive"):
            records = out[method][0].records
            dpo_losses = [r.safety_loss for r in records if r.stage == "dpo"]
            drops[method] = math.log(2.0) - dpo_losses[-1]
        margins["dpo_drop_ratio"] = drops["ortho"] / drops["naive"]
    return margins


def check_tax_mitigation(seeds=(0, 1, 2), ratio_floor: float = 0.70,
                         golden_tol: float = 0.05,
                         goldens: dict | None = None) -> CheckResult:
    start = time.time()
    goldens = GOLDEN_MARGINS if goldens is None else goldens
    problems = []
    summary = []
    for kind in ("regression_mlp", "policy_sft_dpo"):
        for seed in seeds:
            m = _mitigation_margins(kind, seed)
            for i, (to, tn) in enumerate(zip(m["tax_ortho"], m["tax_naive"])):
                if not to < tn:
                    problems.append(f"{kind}/seed{seed}: tax probe {i} {to:.4g} !< {tn:.4g}")
            if not m["gain_ratio"] >= ratio_floor:
                problems.append(f"{kind}/seed{seed}: gain ratio {m['gain_ratio']:.3f} < {ratio_floor}")
            if "dpo_drop_ratio" in m and not m["dpo_drop_ratio"] >= ratio_floor:
                problems.append(f"{kind}/seed{seed}: dpo drop ratio "
                                f"{m['dpo_drop_ratio']:.3f} < {ratio_floor}")
            golden = goldens.get(kind, {}).get(str(seed))
            if golden is not None:
                for key in ("gain_ratio", "dpo_drop_ratio"):
                    if key in golden:
                        rel = abs(m[key] - golden[key]) / abs(golden[key])
                        if rel > golden_tol:
                            problems.append(f"{kind}/seed{seed}: {key} {m[key]:.4f} departs "
                                            f"{rel:.1%} from recorded {golden[key]:.4f}")
                for key in ("tax_ortho", "tax_naive"):
                    for i, (got, want) in enumerate(zip(m[key], golden[key])):
                        denom = max(abs(want), 1e-6)
                        if abs(got - want) / denom > golden_tol:
                            problems.append(f"{kind}/seed{seed}: {key}[{i}] {got:.4g} departs "
                                            f"from recorded {want:.4g}")
            summary.append(f"{kind[:10]}/s{seed}: ratio={m['gain_ratio']:.2f}")
    elapsed = time.time() - start
    details = "; ".join(summary)
    if problems:
        details = " | ".join(problems[:4]) + (f" (+{len(problems)-4} more)" if len(problems) > 4 else "")
    return CheckResult("tax_mitigation", not problems, details, elapsed)


# ---------------------------------------------------------------------------
# criterion 8: ablation trends
# ---------------------------------------------------------------------------

def check_ablation_trends(seed: int = 0, refsize_spread: float = 2.0) -> CheckResult:
    start = time.time()
    fam = _default_family("policy_sft_dpo", seed)
    problems = []

    def tax_with(**overrides):
        kwargs = dict(POLICY_TRAIN)
        stages = kwargs.pop("stages")
        if "refresh_all" in overrides:
            period = overrides.pop("refresh_all")
            stages = tuple(Stage(s.task, s.loss, s.steps, period) for s in stages)
            kwargs["refresh_every"] = period if period == NO_REFRESH else int(period)
        kwargs.update(overrides)
        result = train(TrainConfig(method="ortho", seed=seed, stages=stages, **kwargs), fam)
        return alignment_tax(result, fam).total_tax

    k_taxes = {k: tax_with(refresh_all=k) for k in (2, 5, 10, NO_REFRESH)}
    best_finite = max(v for k, v in k_taxes.items() if k != NO_REFRESH)
    if not k_taxes[NO_REFRESH] > best_finite:
        problems.append(f"K=inf tax {k_taxes[NO_REFRESH]:.4g} not worse than finite {best_finite:.4g}")

    m_taxes = {
        "0": tax_with(ref_count=0),
        "1a": tax_with(ref_count=1, ref_facets=(0,)),
        "1b": tax_with(ref_count=1, ref_facets=(1,)),
        "2": tax_with(ref_count=2),
    }
    if not (m_taxes["2"] <= m_taxes["1a"] and m_taxes["2"] <= m_taxes["1b"]):
        problems.append(f"M=2 tax {m_taxes['2']:.4g} does not dominate "
                        f"1a={m_taxes['1a']:.4g} 1b={m_taxes['1b']:.4g}")

    ref_taxes = {n: tax_with(ref_batch=n) for n in (50, 100, 200)}
    spread = max(ref_taxes.values()) / min(ref_taxes.values())
    if not spread < refsize_spread:
        problems.append(f"refsize tax spread {spread:.2f}x >= {refsize_spread}x")

    elapsed = time.time() - start
    details = (f"K taxes={{{', '.join(f'{k}: {v:.3g}' for k, v in k_taxes.items())}}}; "
               f"M taxes={{{', '.join(f'{k}: {v:.3g}' for k, v in m_taxes.items())}}}; "
               f"refsize spread={spread:.2f}x")
    if problems:
        details = " | ".join(problems)
    return CheckResult("ablation_trends", not problems, details, elapsed)


# ---------------------------------------------------------------------------
# criterion 9: run determinism
# ---------------------------------------------------------------------------

def check_determinism(seed: int = 0) -> CheckResult:
    start = time.time()
    import tempfile
    from pathlib import Path

    from .cli import run_experiment
    from .config import parse_config

    text = "\n".join([
        "[experiment]", "version = 1", "",
        "[family]", "kind = quadratic_pair", "d = 12",
        f"alpha = {math.pi / 4!r}", f"seed = {seed}", "",
        "[train]", "method = ortho", "eta = 0.05", "steps = 100",
        "refresh_every = 5", "ref_count = 1", "safety_batch = 1",
        "ref_batch = 1", f"seed = {seed}",
        "stages = safety:squared_error:100", "",
        "[output]", "dir = unused",
    ])
    payloads = []
    with tempfile.TemporaryDirectory() as tmp:
        for sub in ("first", "second"):
            exp = parse_config(text, name="determinism")
            out = Path(tmp) / sub
            run_experiment(exp, out)
            payloads.append(tuple(sorted(
                (p.name, p.read_bytes()) for p in out.iterdir() if p.suffix == ".csv")))
    same = payloads[0] == payloads[1]
    elapsed = time.time() - start
    return CheckResult("determinism", same,
                       f"repeated run CSVs bitwise identical: {same}", elapsed)


CHECKS = (
    check_orthogonality_suite,
    check_rank_filtering,
    check_gradient_correctness,
    check_steepest_bound,
    check_first_order,
    check_reduction_identities,
    check_tax_mitigation,
    check_ablation_trends,
    check_determinism,
)


def run_all(seed: int = 0, inject_skip_projection: bool = False) -> list[CheckResult]:
    """Run the whole suite.

    ``seed`` reseeds the sampled test matrices of the property checks
    without changing any gate. The benchmark-trend checks (tax mitigation,
    ablation orderings) always run at their pinned seeds: their goldens and
    orderings are recorded properties of those specific runs.
    """
    results = []
    for fn in CHECKS:
        if fn in (check_orthogonality_suite, check_steepest_bound):
            results.append(fn(seed=seed, inject=inject_skip_projection))
        elif fn in (check_tax_mitigation, check_ablation_trends):
            results.append(fn())
        else:
            results.append(fn(seed=seed))
    return results
