"""Training loops: projected descent, naive descent, and a replay baseline.

All methods share the same batch stream: the safety-batch generator and the
reference-batch generator are independent child streams of the run seed, so
"ortho with no reference tasks" and "replay with lambda 0" reproduce the
naive run bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NumericError
from .linalg import norm, project_complement
from .metrics import RunRecord
from .subspace import NO_REFRESH, CapabilitySubspace, estimate_subspace, needs_refresh

__all__ = ["Stage", "TrainConfig", "TrainResult", "train",
           "naive_step", "projected_step", "replay_step", "NO_REFRESH"]

METHODS = ("ortho", "naive", "replay")


@dataclass(frozen=True)
class Stage:
    """One training phase: which task, which loss, how many steps.

    ``refresh_every`` optionally overrides the run-level refresh period for
    this phase (a likelihood phase typically tolerates a coarser period than
    a preference phase).
    """

    task: str
    loss: str
    steps: int
    refresh_every: int | float | None = None


@dataclass(frozen=True)
class TrainConfig:
    """Every hyperparameter of a run.

    refresh_every (the period K) is a positive integer or ``NO_REFRESH``;
    ref_count (M) selects how many of the family's capability facets feed
    the subspace (the first M, unless ref_facets picks specific ones);
    delta is the relative Gram-Schmidt threshold and epsilon the
    normalization stabilizer; replay_lambda weighs the mixed-in mean
    reference gradient for the replay method.
    """

    method: str = "ortho"
    eta: float = 1e-3
    steps: int = 100
    refresh_every: int | float = 5
    ref_count: int = 2
    delta: float = 1e-6
    epsilon: float = 0.0
    safety_batch: int = 32
    ref_batch: int = 200
    replay_lambda: float = 1.0
    seed: int = 0
    stages: tuple[Stage, ...] = ()
    ref_facets: tuple[int, ...] | None = None

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}")
        if not self.eta > 0:
            raise ConfigurationError(f"eta must be positive, got {self.eta}")
        if self.steps < 1:
            raise ConfigurationError(f"steps must be >= 1, got {self.steps}")
        for period in [self.refresh_every, *[s.refresh_every for s in self.stages
                                             if s.refresh_every is not None]]:
            if period != NO_REFRESH and (not float(period).is_integer() or period < 1):
                raise ConfigurationError(f"refresh period must be a positive integer or inf, got {period}")
        if self.ref_count < 0:
            raise ConfigurationError(f"ref_count must be >= 0, got {self.ref_count}")
        if not self.delta > 0:
            raise ConfigurationError(f"delta must be positive, got {self.delta}")
        if self.epsilon < 0:
            raise ConfigurationError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.safety_batch < 1 or self.ref_batch < 1:
            raise ConfigurationError("batch sizes must be positive")
        if self.replay_lambda < 0:
            raise ConfigurationError(f"replay_lambda must be >= 0, got {self.replay_lambda}")
        if not self.stages:
            raise ConfigurationError("at least one stage is required")
        if any(s.steps < 1 for s in self.stages):
            raise ConfigurationError("every stage needs at least one step")
        if sum(s.steps for s in self.stages) != self.steps:
            raise ConfigurationError(
                f"stage steps sum to {sum(s.steps for s in self.stages)}, config says {self.steps}")
        if self.ref_facets is not None and len(self.ref_facets) != self.ref_count:
            raise ConfigurationError(
                f"ref_facets names {len(self.ref_facets)} facets, ref_count is {self.ref_count}")


@dataclass(frozen=True)
class TrainResult:
    theta_final: np.ndarray
    records: tuple[RunRecord, ...]
    config: TrainConfig
    subspace_history: tuple[tuple[int, int], ...]  # (built_at_step, rank)
    family_fingerprint: tuple


def naive_step(theta, task, batch, eta):
    """theta' = theta - eta * grad; returns (theta', gradient) for logging."""
    g = task.gradient(theta, batch)
    return theta - eta * g, g


def projected_step(theta, task, batch, subspace: CapabilitySubspace, eta):
    """Step along the component of the safety gradient orthogonal to the
    capability subspace; returns (theta', gradient, projected gradient).

    A gradient that lies entirely inside the subspace projects to (numerical)
    zero and the step stalls; that is logged, not raised.
    """
    g = task.gradient(theta, batch)
    g_proj = project_complement(g, subspace.basis)
    return theta - eta * g_proj, g, g_proj


def replay_step(theta, task, batch, ref_tasks, ref_batches, eta, lam):
    """theta' = theta - eta * (grad + lam * mean reference gradient).

    With no reference tasks or lam = 0 the mixing term vanishes and the step
    equals a naive one.
    """
    g = task.gradient(theta, batch)
    if ref_tasks:
        acc = np.zeros_like(g)
        for ref_task, ref_batch in zip(ref_tasks, ref_batches):
            acc += ref_task.gradient(theta, ref_batch)
        mixed = g + lam * (acc / len(ref_tasks))
    else:
        mixed = g
    return theta - eta * mixed, g


def _removed_fraction(g_norm: float, g_proj_norm: float) -> float:
    if g_norm == 0.0:
        return 0.0
    frac = 1.0 - (g_proj_norm / g_norm) ** 2
    return min(max(frac, 0.0), 1.0)


def train(config: TrainConfig, family) -> TrainResult:
    """Run the configured method over the family's stages.

    Per step: (ortho only) rebuild the subspace when the active refresh
    period divides the global step index, apply the method's update, then
    record probe losses at the new parameters together with the gradient
    norms, removed fraction, and subspace rank/age used for the step.
    Entering a preference stage freezes the current parameters as that
    stage's reference policy.
    """
    config.validate()
    for stage in config.stages:
        if stage.task not in family.tasks:
            raise ConfigurationError(f"family has no task named {stage.task!r}")
        if family.tasks[stage.task].kind.tag != stage.loss:
            raise ConfigurationError(
                f"stage {stage.task!r} declares loss {stage.loss!r}, task has "
                f"{family.tasks[stage.task].kind.tag!r}")
    if config.ref_count > len(family.capability_tasks):
        raise ConfigurationError(
            f"ref_count {config.ref_count} exceeds the {len(family.capability_tasks)} "
            "capability facets of the family")

    if config.ref_facets is not None:
        if any(i < 0 or i >= len(family.capability_tasks) for i in config.ref_facets):
            raise ConfigurationError(f"ref_facets {config.ref_facets} out of range")
        ref_tasks = [family.capability_tasks[i] for i in config.ref_facets]
    else:
        ref_tasks = list(family.capability_tasks[:config.ref_count])
    probe_tasks = list(family.capability_tasks)

    seed_seq = np.random.SeedSequence(config.seed)
    child_safety, child_ref = seed_seq.spawn(2)
    rng_safety = np.random.default_rng(child_safety)
    rng_ref = np.random.default_rng(child_ref)

    theta = family.theta0.copy()
    subspace: CapabilitySubspace | None = None
    history: list[tuple[int, int]] = []
    records: list[RunRecord] = []

    t = 0
    for stage in config.stages:
        task = family.tasks[stage.task]
        if stage.loss == "dpo_pairwise":
            task.set_reference_params(theta)
        period = stage.refresh_every if stage.refresh_every is not None else config.refresh_every
        for _ in range(stage.steps):
            use_subspace = config.method == "ortho" and config.ref_count > 0
            try:
                if use_subspace and (subspace is None or needs_refresh(t, period)):
                    subspace = estimate_subspace(theta, ref_tasks, config.ref_batch,
                                                 rng_ref, config.delta, config.epsilon, t)
                    history.append((t, subspace.rank))

                batch = task.sample_batch(rng_safety, config.safety_batch)
                if use_subspace:
                    theta, g, g_proj = projected_step(theta, task, batch, subspace, config.eta)
                    g_norm, g_proj_norm = norm(g), norm(g_proj)
                    rank, age = subspace.rank, t - subspace.built_at_step
                elif config.method == "replay":
                    ref_batches = [rt.sample_batch(rng_ref, config.ref_batch) for rt in ref_tasks]
                    theta, g = replay_step(theta, task, batch, ref_tasks, ref_batches,
                                           config.eta, config.replay_lambda)
                    g_norm = g_proj_norm = norm(g)
                    rank, age = 0, 0
                else:  # naive, or ortho degenerated by ref_count = 0
                    theta, g = naive_step(theta, task, batch, config.eta)
                    g_norm = g_proj_norm = norm(g)
                    rank, age = 0, 0

                records.append(RunRecord(
                    step=t,
                    stage=stage.task,
                    safety_loss=task.loss(theta),
                    ref_losses=tuple(pt.loss(theta) for pt in probe_tasks),
                    g_norm=g_norm,
                    g_tilde_norm=g_proj_norm,
                    removed_fraction=_removed_fraction(g_norm, g_proj_norm),
                    rank=rank,
                    age=age,
                ))
            except NumericError as exc:
                raise NumericError(f"step {t}: {exc}") from exc
            t += 1

    return TrainResult(
        theta_final=theta,
        records=tuple(records),
        config=config,
        subspace_history=tuple(history),
        family_fingerprint=family.fingerprint,
    )
