# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # A small convergence study
#
# Each row samples a graph, runs the exact process, solves NIMFA on that
# graph and compares both with the mean-field path. Rows are seeded from
# `(master seed, N, replication)` so any row can be reproduced alone. The
# shipped `configs/canonical_sis_study.json` runs the full ladder from the
# command line.

# %%
from erdy_meanfield import StudyConfig, run_convergence_study

config = StudyConfig(
    model={"type": "sis", "parameters": {"beta": 2.0, "gamma": 1.0}},
    ladder=[200, 400, 800],
    edge_prob=0.1,
    horizon=5.0,
    u0=[0.8, 0.2],
    master_seed=1,
    replications=3,
    sample_points=101,
)
result = run_convergence_study(config)

# %%
print(f"{'N':>5} {'err x':>8} {'err y':>8} {'R1':>7} {'sup K':>7}")
for n in config.ladder:
    print(
        f"{n:5d} {result.metric('sup_err_x', n, 'median'):8.4f} "
        f"{result.metric('sup_err_y', n, 'median'):8.4f} "
        f"{result.metric('r1', n):7.4f} {result.metric('sup_k', n):7.4f}"
    )

# %%
for metric, fit in result.slopes.items():
    print(f"{metric:10s} slope {fit.slope:+.3f}")
