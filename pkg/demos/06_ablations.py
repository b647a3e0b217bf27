"""Desk-scale ablations: refresh period, subspace width, reference budget.

Same sweeps the command line exposes (orthoproj sweep --axis K|M|refsize),
driven through the library here so the numbers print inline.

Run:  python demos/06_ablations.py
"""

from orthoproj import NO_REFRESH, TrainConfig, train
from orthoproj.metrics import alignment_tax
from orthoproj.optimizer import Stage
from orthoproj.tasks import policy_family

fam = policy_family(8, 10, 200, 2000, seed=0)
BASE = dict(eta=0.2, steps=100, safety_batch=32, seed=0)


def run(refresh=None, ref_count=2, ref_batch=200, facets=None):
    if refresh is None:
        # default schedule: coarse refresh for the likelihood stage, fine
        # for the preference stage
        stages = (Stage("sft", "nll_sft", 60, 30), Stage("dpo", "dpo_pairwise", 40, 5))
        period = 5
    else:
        stages = (Stage("sft", "nll_sft", 60, refresh),
                  Stage("dpo", "dpo_pairwise", 40, refresh))
        period = refresh if refresh == NO_REFRESH else int(refresh)
    cfg = TrainConfig(method="ortho", stages=stages, ref_count=ref_count,
                      ref_batch=ref_batch, ref_facets=facets,
                      refresh_every=period, **BASE)
    return alignment_tax(train(cfg, fam), fam)


print("== refresh period: dynamic beats static")
for k in (2, 5, 10, NO_REFRESH):
    label = "inf" if k == NO_REFRESH else str(k)
    print(f"  refresh {label:>3s}: total tax {run(refresh=k).total_tax:+.4f}")

print("\n== subspace width: both facets beat either alone")
for label, count, facets in (("none", 0, None), ("facet a", 1, (0,)),
                             ("facet b", 1, (1,)), ("both", 2, None)):
    print(f"  {label:8s}: total tax {run(ref_count=count, facets=facets).total_tax:+.4f}")

print("\n== reference sample budget: flat response, tiny budgets suffice")
for n in (50, 100, 200):
    print(f"  {n:3d} samples/facet: total tax {run(ref_batch=n).total_tax:+.4f}")
