"""Synthetic task generators with controllable interference.

Each family pairs a "safety" objective with one or two "capability"
(reference) objectives whose gradient geometry conflicts with it by a
tunable amount, so that forgetting under naive fine-tuning is predictable
and the effect of projecting it out is measurable.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field

import numpy as np

from . import models
from .errors import ConfigurationError, NumericError
from .linalg import as_vector, norm
from .models import Batch, LossKind, ModelSpec

__all__ = [
    "DifferentiableTask",
    "TaskFamily",
    "make_quadratic_pair",
    "make_regression_family",
    "make_policy_family",
    "quadratic_family",
    "regression_family",
    "policy_family",
    "build_family",
    "save_family",
    "load_family",
]

PROBE_ROWS = 512  # held-out probe size for data-driven tasks

# fixed pre-training budgets (full-batch steps, learning rate); recorded in
# family params so theta0 is reproducible and documented
REGRESSION_PRETRAIN = (300, 0.05)
POLICY_PRETRAIN = (1000, 1.0)

# amplitude of the safety teacher's own-block component relative to the
# capability teachers; bounds how far fitting the safety-specific skill has
# to move the shared layers
_SAFETY_OWN_SCALE = 2.0


@dataclass
class DifferentiableTask:
    """A dataset plus a loss kind, with a fixed held-out probe batch.

    Training batches are drawn from the train arrays only; the probe arrays
    never feed a gradient. For dpo_pairwise tasks, ``ref_params`` holds the
    frozen reference policy and is replaced at stage transitions.
    """

    name: str
    spec: ModelSpec
    kind: LossKind
    train_inputs: np.ndarray
    train_targets: np.ndarray | None
    probe_inputs: np.ndarray
    probe_targets: np.ndarray | None
    train_pairs: np.ndarray | None = None
    probe_pairs: np.ndarray | None = None
    ref_params: np.ndarray | None = None

    @property
    def train_size(self) -> int:
        if self.kind.tag == "dpo_pairwise":
            return self.train_pairs.shape[0]
        return self.train_inputs.shape[0]

    def set_reference_params(self, theta) -> None:
        if self.kind.tag != "dpo_pairwise":
            raise ConfigurationError(f"task {self.name!r} has no reference policy")
        self.ref_params = as_vector(theta, "ref_params").copy()

    def sample_batch(self, rng: np.random.Generator, size: int) -> Batch:
        """Draw a training batch; with replacement only when size exceeds
        the dataset. The quadratic kind is a single analytic system and
        always returns it whole (no rng consumed)."""
        if size < 1:
            raise ConfigurationError(f"batch size must be positive, got {size}")
        if self.spec.kind == "quadratic":
            return Batch(self.train_inputs, self.train_targets)
        n = self.train_size
        idx = rng.choice(n, size=size, replace=size > n)
        if self.kind.tag == "dpo_pairwise":
            chosen = self.train_pairs[idx]
            inputs = self.train_inputs[chosen[:, 0]]
            pairs = np.column_stack([np.arange(len(idx)), chosen[:, 1], chosen[:, 2]])
            return Batch(inputs, pairs=pairs, ref_params=self.ref_params)
        return Batch(self.train_inputs[idx], self.train_targets[idx])

    def probe(self) -> Batch:
        """The fixed held-out evaluation batch."""
        if self.kind.tag == "dpo_pairwise":
            inputs = self.probe_inputs[self.probe_pairs[:, 0]]
            pairs = np.column_stack([
                np.arange(self.probe_pairs.shape[0]),
                self.probe_pairs[:, 1],
                self.probe_pairs[:, 2],
            ])
            return Batch(inputs, pairs=pairs, ref_params=self.ref_params)
        return Batch(self.probe_inputs, self.probe_targets)

    def loss(self, theta, batch: Batch | None = None) -> float:
        return models.loss(self.spec, self.kind, theta, self.probe() if batch is None else batch)

    def gradient(self, theta, batch: Batch | None = None) -> np.ndarray:
        return models.gradient(self.spec, self.kind, theta, self.probe() if batch is None else batch)


@dataclass
class TaskFamily:
    """A named set of tasks sharing one parameter vector.

    ``capability_tasks`` are the ordered reference facets used for subspace
    estimation and tax probes. ``safety_metric_task`` names the task whose
    probe defines the run-level safety metric (for multi-stage families this
    is the reference-free first-stage task, so theta0 vs theta_T is always
    comparable).
    """

    kind: str
    seed: int
    theta0: np.ndarray
    capability_tasks: tuple[DifferentiableTask, ...]
    tasks: dict[str, DifferentiableTask]
    safety_metric_task: str
    params: dict = field(default_factory=dict)

    @property
    def fingerprint(self) -> tuple:
        return (self.kind, self.seed, self.theta0.size,
                tuple(t.name for t in self.capability_tasks),
                tuple(sorted(self.params.items())))


def _snap(x: float) -> float:
    # cos(pi/2) is 6e-17, not zero; snap so exact-angle constructions are exact
    return 0.0 if abs(x) < 1e-15 else x


# ---------------------------------------------------------------------------
# quadratic pair
# ---------------------------------------------------------------------------

def make_quadratic_pair(d: int, alpha: float, seed: int,
                        cap_residual: float = 0.3, safety_residual: float = 2.5):
    """Two quadratic objectives whose gradients at theta0 meet at angle alpha.

    Directions u1 (even index support) and f (odd support) are exactly
    orthogonal in float arithmetic. The safety loss is
    0.5*||u2.theta - b2||^2 along u2 = cos(alpha) u1 + sin(alpha) f. The
    capability loss 0.5*||A1 theta - b1||^2 has two rows: u1, which carries
    the only nonzero residual at theta0 (so the capability gradient points
    exactly along u1), and w = sin(alpha) u1 - cos(alpha) f, the in-plane
    direction orthogonal to the safety gradient. The w row gives the
    capability objective curvature transverse to its own gradient, so a
    projected safety step has a nonzero, purely second-order capability
    cost; because w is orthogonal to u2, it adds no coupling along the
    safety direction itself, and at alpha = pi/2 (where w collapses onto
    u1) the safety objective is interference-free at every order.

    Returns (capability_task, safety_task, theta0).
    """
    if d < 2:
        raise ConfigurationError(f"quadratic pair needs d >= 2, got {d}")
    if not 0.0 <= alpha <= math.pi / 2 + 1e-12:
        raise ConfigurationError(f"alpha must lie in [0, pi/2], got {alpha}")
    if cap_residual == 0.0 or safety_residual == 0.0:
        raise ConfigurationError("residuals must be nonzero so both gradients are nonzero")

    rng = np.random.default_rng(seed)
    theta0 = rng.standard_normal(d)
    u1 = np.zeros(d)
    u1[0::2] = rng.standard_normal(u1[0::2].size)
    u1 /= norm(u1)
    f = np.zeros(d)
    f[1::2] = rng.standard_normal(f[1::2].size)
    f /= norm(f)

    c, s = _snap(math.cos(alpha)), _snap(math.sin(alpha))
    u2 = c * u1 + s * f
    w = s * u1 - c * f

    a_cap = np.vstack([u1, w])
    b_cap = a_cap @ theta0 - np.array([cap_residual, 0.0])
    a_safe = u2[None, :]
    b_safe = a_safe @ theta0 - np.array([safety_residual])

    spec = ModelSpec("quadratic", (d,))
    kind = LossKind("squared_error")
    capability = DifferentiableTask("capability", spec, kind, a_cap, b_cap, a_cap, b_cap)
    safety = DifferentiableTask("safety", spec, kind, a_safe, b_safe, a_safe, b_safe)
    return capability, safety, theta0


def quadratic_family(d: int, alpha: float, seed: int,
                     cap_residual: float = 0.3, safety_residual: float = 2.5) -> TaskFamily:
    capability, safety, theta0 = make_quadratic_pair(d, alpha, seed, cap_residual, safety_residual)
    return TaskFamily(
        kind="quadratic_pair",
        seed=seed,
        theta0=theta0,
        capability_tasks=(capability,),
        tasks={"capability": capability, "safety": safety},
        safety_metric_task="safety",
        params={"d": d, "alpha": alpha, "cap_residual": cap_residual,
                "safety_residual": safety_residual},
    )


# ---------------------------------------------------------------------------
# regression (MLP) family
# ---------------------------------------------------------------------------

def make_regression_family(d: int, widths, alpha: float, noise_sigma: float,
                           counts, seed: int):
    """Two-facet MLP regression with a safety teacher that conflicts on a
    shared feature block.

    Features split into four blocks: block a, block b, shared, safety-own.
    Capability dataset k activates block k plus the shared block and its
    teacher realizes the shared mapping s; the safety dataset activates its
    own block plus the shared block, and its teacher realizes
    cos(alpha) s + sin(alpha) s_perp there. At alpha = 0 the teachers agree
    on shared features and safety tuning leaves capability predictions
    alone (zeroed inputs give zero first-layer gradients); conflict grows
    monotonically with alpha.

    theta0 comes from a fixed, recorded budget of full-batch descent steps on
    the two capability sets (determinism over optimality).

    Returns (capability_tasks, safety_task, theta0).
    """
    if d < 8:
        raise ConfigurationError(f"regression family needs d >= 8, got {d}")
    if noise_sigma < 0:
        raise ConfigurationError(f"noise_sigma must be non-negative, got {noise_sigma}")
    if not 0.0 <= alpha <= math.pi / 2 + 1e-12:
        raise ConfigurationError(f"alpha must lie in [0, pi/2], got {alpha}")
    widths = tuple(int(w) for w in (widths if hasattr(widths, "__len__") else (widths,)))
    if len(widths) != 1 or widths[0] < 1:
        raise ConfigurationError(f"mlp2 takes one hidden width, got {widths}")
    hidden = widths[0]
    n_cap, n_safety = (int(counts[0]), int(counts[1]))

    rng = np.random.default_rng(seed)
    q = d // 4
    sl_a, sl_b = slice(0, q), slice(q, 2 * q)
    sl_sh, sl_own = slice(2 * q, 3 * q), slice(3 * q, d)
    n_own = d - 3 * q

    w_a = rng.standard_normal(q) / math.sqrt(q)
    w_b = rng.standard_normal(q) / math.sqrt(q)
    s_shared = rng.standard_normal(q)
    s_shared /= norm(s_shared)
    s_perp = rng.standard_normal(q)
    s_perp -= float(s_perp @ s_shared) * s_shared
    s_perp /= norm(s_perp)
    c, s = _snap(math.cos(alpha)), _snap(math.sin(alpha))
    s_safety = c * s_shared + s * s_perp
    w_own = _SAFETY_OWN_SCALE * rng.standard_normal(n_own) / math.sqrt(n_own)

    def draw(n, active, pieces):
        x = np.zeros((n, d))
        for sl in active:
            x[:, sl] = rng.standard_normal((n, x[:, sl].shape[1]))
        y = np.zeros(n)
        for sl, w in pieces:
            y += x[:, sl] @ w
        if noise_sigma > 0:
            y += noise_sigma * rng.standard_normal(n)
        return x, y

    spec = ModelSpec("mlp2", (d, hidden, 1), activation="tanh")
    kind = LossKind("squared_error")

    def task(name, active, pieces, n_train):
        xt, yt = draw(n_train, active, pieces)
        xp, yp = draw(PROBE_ROWS, active, pieces)
        return DifferentiableTask(name, spec, kind, xt, yt, xp, yp)

    cap_a = task("cap_a", (sl_a, sl_sh), ((sl_a, w_a), (sl_sh, s_shared)), n_cap)
    cap_b = task("cap_b", (sl_b, sl_sh), ((sl_b, w_b), (sl_sh, s_shared)), n_cap)
    safety = task("safety", (sl_own, sl_sh), ((sl_own, w_own), (sl_sh, s_safety)), n_safety)

    pretrain_steps, pretrain_eta = REGRESSION_PRETRAIN
    theta = _init_mlp(rng, d, hidden)
    for _ in range(pretrain_steps):
        g_a = cap_a.gradient(theta, Batch(cap_a.train_inputs, cap_a.train_targets))
        g_b = cap_b.gradient(theta, Batch(cap_b.train_inputs, cap_b.train_targets))
        theta = theta - pretrain_eta * 0.5 * (g_a + g_b)
    if not np.all(np.isfinite(theta)):
        raise NumericError("regression pre-training diverged")

    return [cap_a, cap_b], safety, theta


def _init_mlp(rng, d, hidden):
    w1 = rng.standard_normal((hidden, d)) / math.sqrt(d)
    b1 = np.zeros(hidden)
    w2 = rng.standard_normal((1, hidden)) / math.sqrt(hidden)
    b2 = np.zeros(1)
    return np.concatenate([w1.ravel(), b1, w2.ravel(), b2])


def regression_family(d: int, hidden: int, alpha: float, noise_sigma: float,
                      n_capability: int, n_safety: int, seed: int) -> TaskFamily:
    caps, safety, theta0 = make_regression_family(
        d, (hidden,), alpha, noise_sigma, (n_capability, n_safety), seed)
    return TaskFamily(
        kind="regression_mlp",
        seed=seed,
        theta0=theta0,
        capability_tasks=tuple(caps),
        tasks={t.name: t for t in [*caps, safety]},
        safety_metric_task="safety",
        params={"d": d, "hidden": hidden, "alpha": alpha, "noise_sigma": noise_sigma,
                "n_capability": n_capability, "n_safety": n_safety,
                "pretrain_steps": REGRESSION_PRETRAIN[0], "pretrain_eta": REGRESSION_PRETRAIN[1]},
    )


# ---------------------------------------------------------------------------
# policy family (likelihood stage then preference stage)
# ---------------------------------------------------------------------------

def make_policy_family(context_dim: int, vocab: int, counts, seed: int):
    """Linear softmax policy with a two-stage safety pipeline.

    The vocabulary splits into a "safe" half (refusal-style tokens) and a
    "content" half. Context coordinates split into four blocks: facet a,
    facet b, shared, safety-own. Capability facet k activates block k plus
    the shared block and its labels are the strongest content token of its
    teacher; the safety contexts activate the safety-own block plus the
    shared block (zero overlap with either facet region), so safety
    behaviour learned through shared coordinates spills into the capability
    regions while the safety-own block offers interference-free room.
    Stage 1 is categorical NLL on safe labels; stage 2 is the pairwise
    preference loss with preferred = the safe label and rejected = the
    strongest content token.

    Returns (sft_task, dpo_task, capability_tasks, theta0); the dpo task's
    reference policy starts at theta0 and is re-frozen at stage transitions
    by the training loop.
    """
    if vocab < 4:
        raise ConfigurationError(f"policy family needs vocab >= 4, got {vocab}")
    if context_dim < 4:
        raise ConfigurationError(f"policy family needs context_dim >= 4, got {context_dim}")
    n_cap, n_safety = (int(counts[0]), int(counts[1]))

    rng = np.random.default_rng(seed)
    n_safe_tokens = vocab // 2
    q = context_dim // 4
    sl_a, sl_b = slice(0, q), slice(q, 2 * q)
    sl_sh, sl_own = slice(2 * q, 3 * q), slice(3 * q, context_dim)
    teacher_a = rng.standard_normal((vocab, context_dim))
    teacher_b = rng.standard_normal((vocab, context_dim))
    teacher_s = rng.standard_normal((vocab, context_dim))

    def contexts(n, active):
        x = np.zeros((n, context_dim))
        for sl in active:
            x[:, sl] = rng.standard_normal((n, x[:, sl].shape[1]))
        return x

    spec = ModelSpec("softmax_policy", (context_dim, vocab))
    nll = LossKind("nll_sft")

    def sample_labels(x, teacher):
        # labels drawn from the teacher's softmax: the policy class contains
        # the exact optimum, so pre-training converges to a true minimum and
        # any safety-induced drift raises the probe loss
        z = x @ teacher.T
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        return (p.cumsum(axis=1) < rng.random((x.shape[0], 1))).sum(axis=1)

    def capability_task(name, teacher, block):
        xt = contexts(n_cap, (block, sl_sh))
        yt = sample_labels(xt, teacher)
        xp = contexts(PROBE_ROWS, (block, sl_sh))
        yp = sample_labels(xp, teacher)
        return DifferentiableTask(name, spec, nll, xt, yt, xp, yp)

    cap_a = capability_task("cap_a", teacher_a, sl_a)
    cap_b = capability_task("cap_b", teacher_b, sl_b)

    def safe_and_content_labels(x):
        logits = x @ teacher_s.T
        y_safe = np.argmax(logits[:, :n_safe_tokens], axis=1)
        y_content = n_safe_tokens + np.argmax(logits[:, n_safe_tokens:], axis=1)
        return y_safe, y_content

    x_sft = contexts(n_safety, (sl_own, sl_sh))
    y_sft, _ = safe_and_content_labels(x_sft)
    x_sft_probe = contexts(PROBE_ROWS, (sl_own, sl_sh))
    y_sft_probe, _ = safe_and_content_labels(x_sft_probe)
    sft = DifferentiableTask("sft", spec, nll, x_sft, y_sft, x_sft_probe, y_sft_probe)

    x_dpo = contexts(n_safety, (sl_own, sl_sh))
    w_dpo, l_dpo = safe_and_content_labels(x_dpo)
    x_dpo_probe = contexts(PROBE_ROWS, (sl_own, sl_sh))
    w_probe, l_probe = safe_and_content_labels(x_dpo_probe)
    dpo = DifferentiableTask(
        "dpo", spec, LossKind("dpo_pairwise", beta=0.2),
        x_dpo, None, x_dpo_probe, None,
        train_pairs=np.column_stack([np.arange(n_safety), w_dpo, l_dpo]),
        probe_pairs=np.column_stack([np.arange(PROBE_ROWS), w_probe, l_probe]),
    )

    pretrain_steps, pretrain_eta = POLICY_PRETRAIN
    theta = 0.01 * rng.standard_normal(spec.param_dim)
    for _ in range(pretrain_steps):
        g_a = cap_a.gradient(theta, Batch(cap_a.train_inputs, cap_a.train_targets))
        g_b = cap_b.gradient(theta, Batch(cap_b.train_inputs, cap_b.train_targets))
        theta = theta - pretrain_eta * 0.5 * (g_a + g_b)
    if not np.all(np.isfinite(theta)):
        raise NumericError("policy pre-training diverged")
    dpo.ref_params = theta.copy()

    return sft, dpo, [cap_a, cap_b], theta


def policy_family(context_dim: int, vocab: int, n_capability: int,
                  n_safety: int, seed: int) -> TaskFamily:
    sft, dpo, caps, theta0 = make_policy_family(
        context_dim, vocab, (n_capability, n_safety), seed)
    return TaskFamily(
        kind="policy_sft_dpo",
        seed=seed,
        theta0=theta0,
        capability_tasks=tuple(caps),
        tasks={t.name: t for t in [*caps, sft, dpo]},
        safety_metric_task="sft",
        params={"context_dim": context_dim, "vocab": vocab,
                "n_capability": n_capability, "n_safety": n_safety,
                "pretrain_steps": POLICY_PRETRAIN[0], "pretrain_eta": POLICY_PRETRAIN[1]},
    )


FAMILY_KINDS = ("quadratic_pair", "regression_mlp", "policy_sft_dpo")


def build_family(kind: str, seed: int, **params) -> TaskFamily:
    """Construct a family from config-file parameters."""
    if kind == "quadratic_pair":
        return quadratic_family(
            d=int(params["d"]), alpha=float(params["alpha"]), seed=seed,
            cap_residual=float(params.get("cap_residual", 0.3)),
            safety_residual=float(params.get("safety_residual", 2.5)))
    if kind == "regression_mlp":
        return regression_family(
            d=int(params["d"]), hidden=int(params["hidden"]),
            alpha=float(params["alpha"]), noise_sigma=float(params["noise_sigma"]),
            n_capability=int(params["n_capability"]), n_safety=int(params["n_safety"]),
            seed=seed)
    if kind == "policy_sft_dpo":
        return policy_family(
            context_dim=int(params["context_dim"]), vocab=int(params["vocab"]),
            n_capability=int(params["n_capability"]), n_safety=int(params["n_safety"]),
            seed=seed)
    raise ConfigurationError(f"unknown family kind {kind!r}")


# ---------------------------------------------------------------------------
# serialization: self-describing text format (key=value header + CSV blocks)
# ---------------------------------------------------------------------------

_FORMAT_LINE = "orthoproj-family-format = 1"


def _array_block(label: str, arr: np.ndarray) -> list[str]:
    a = np.atleast_2d(np.asarray(arr))
    dtype = "int" if np.issubdtype(a.dtype, np.integer) else "float"
    lines = [f"[array {label} rows={a.shape[0]} cols={a.shape[1]} dtype={dtype}]"]
    for row in a:
        if dtype == "int":
            lines.append(",".join(str(int(v)) for v in row))
        else:
            lines.append(",".join(repr(float(v)) for v in row))
    return lines


def save_family(family: TaskFamily, path) -> None:
    """Write a family to a self-describing text file (bitwise round-trip)."""
    lines = [_FORMAT_LINE,
             f"kind = {family.kind}",
             f"seed = {family.seed}",
             f"safety_metric_task = {family.safety_metric_task}",
             "capability_order = " + ",".join(t.name for t in family.capability_tasks)]
    for key in sorted(family.params):
        lines.append(f"param.{key} = {family.params[key]!r}")
    for name in sorted(family.tasks):
        t = family.tasks[name]
        lines.append(f"task.{name}.spec = {t.spec.kind} {','.join(map(str, t.spec.dims))} {t.spec.activation}")
        lines.append(f"task.{name}.loss = {t.kind.tag} {t.kind.beta!r}")
    lines.append("")
    lines.extend(_array_block("theta0", family.theta0))
    for name in sorted(family.tasks):
        t = family.tasks[name]
        for fld in ("train_inputs", "train_targets", "probe_inputs", "probe_targets",
                    "train_pairs", "probe_pairs", "ref_params"):
            arr = getattr(t, fld)
            if arr is not None:
                lines.extend(_array_block(f"{name}.{fld}", arr))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_family(path) -> TaskFamily:
    """Read a family file written by :func:`save_family`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != _FORMAT_LINE:
        raise ConfigurationError(f"{path}: not a family file (missing format line)")

    header: dict[str, str] = {}
    arrays: dict[str, np.ndarray] = {}
    i = 1
    while i < len(lines):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line.startswith("[array "):
            inner = line[1:-1].split()
            label = inner[1]
            meta = dict(part.split("=") for part in inner[2:])
            rows, cols = int(meta["rows"]), int(meta["cols"])
            dtype = np.int64 if meta["dtype"] == "int" else np.float64
            data = np.empty((rows, cols), dtype=dtype)
            for r in range(rows):
                parts = lines[i].split(",")
                i += 1
                data[r] = [dtype(p) for p in parts]
            arrays[label] = data
        else:
            key, _, value = line.partition("=")
            header[key.strip()] = value.strip()

    def get_array(label, flatten=False, optional=False):
        if label not in arrays:
            if optional:
                return None
            raise ConfigurationError(f"{path}: missing array {label!r}")
        a = arrays[label]
        return a.ravel() if flatten else a

    params = {}
    for key, value in header.items():
        if key.startswith("param."):
            params[key[len("param."):]] = ast.literal_eval(value)

    tasks: dict[str, DifferentiableTask] = {}
    task_names = sorted({k.split(".")[1] for k in header if k.startswith("task.")})
    for name in task_names:
        kind_str, dims_str, act = header[f"task.{name}.spec"].split()
        spec = ModelSpec(kind_str, tuple(int(v) for v in dims_str.split(",")), act)
        tag, beta = header[f"task.{name}.loss"].split()
        loss_kind = LossKind(tag, float(beta))
        flat_targets = spec.kind != "quadratic" and tag != "dpo_pairwise"
        tt = get_array(f"{name}.train_targets", optional=True)
        pt = get_array(f"{name}.probe_targets", optional=True)
        if tt is not None and flat_targets:
            tt, pt = tt.ravel(), pt.ravel()
            if tag == "nll_sft":
                tt, pt = tt.astype(np.int64), pt.astype(np.int64)
        elif tt is not None:
            tt, pt = tt.ravel(), pt.ravel()
        tasks[name] = DifferentiableTask(
            name, spec, loss_kind,
            get_array(f"{name}.train_inputs"), tt,
            get_array(f"{name}.probe_inputs"), pt,
            train_pairs=get_array(f"{name}.train_pairs", optional=True),
            probe_pairs=get_array(f"{name}.probe_pairs", optional=True),
            ref_params=get_array(f"{name}.ref_params", flatten=True, optional=True),
        )

    capability = tuple(tasks[n] for n in header["capability_order"].split(","))
    return TaskFamily(
        kind=header["kind"],
        seed=int(header["seed"]),
        theta0=get_array("theta0", flatten=True),
        capability_tasks=capability,
        tasks=tasks,
        safety_metric_task=header["safety_metric_task"],
        params=params,
    )
