"""Synthesizing new critical scenarios by parameter sampling.

One vehicle of a recorded scenario is replaced by a car-following model;
the remaining trajectories replay verbatim.  Sweeping the model's target
time gap cc1 toward lower values tightens the substituted vehicle's
following distance and with it the headway to its leader, producing a
family of increasingly critical variants of the same recorded situation.

In the canonical scenario the ego is overtaken by a faster vehicle (opp2)
and later overtakes a slow one (opp1): the headway to opp1 scales directly
with cc1 while the headway to the faster opp2 barely moves.
"""

from lanekit import sample_cc1
from lanekit.synth import overtake_scenario

spec = overtake_scenario()
cc1_values = [0.9, 0.7, 0.5, 0.3, 0.1]
result = sample_cc1(spec, cc1_values)

print("scenario: ego (model-driven) between slow opp1 and fast opp2")
print(f"sampled cc1 values: {cc1_values}\n")
print("  cc1 [s]   min THW ego->opp1 [s]   min THW ego->opp2 [s]")
for sc in result.scenarios:
    print(f"  {sc.cc1:7.1f}   {sc.min_thw['opp1']:21.3f}   {sc.min_thw['opp2']:21.3f}")

print("\nlower target gaps turn the same recorded overtake into "
      "progressively tighter following scenarios,")
print("while the interaction with the faster overtaker stays unchanged.")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4))
    for sc in result.scenarios:
        ax.plot(result.t, sc.thw_traces["opp1"], lw=1.0,
                label=f"cc1 = {sc.cc1:g} s")
        ax.plot(result.t, sc.thw_traces["opp2"], lw=1.0, ls="--",
                color=ax.lines[-1].get_color())
    ax.axhline(0.9, color="tab:red", ls=":", lw=0.8)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("THW [s]")
    ax.set_ylim(0, 6)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig("demo04_cc1_sampling.png", dpi=120)
    print("wrote demo04_cc1_sampling.png")
except ImportError:
    pass
