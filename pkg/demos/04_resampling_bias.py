# %% [markdown]
# # Downsampling dense days
#
# Days observed every minute stand in for ground truth. Each one is thinned
# at random to a range of rates, ten times per rate, and stays are counted
# again. Bias is resampled count minus the ground-truth count.

# %%
from lbsbias.resample import mean_bias_by_rate, run_bias_experiment, select_ground_truth_days
from lbsbias.synth import generate_corpus

corpus, truth = generate_corpus(30, master_seed=1)
days = select_ground_truth_days(corpus)
print(len(days), "ground-truth days")

# %%
records = run_bias_experiment(days, rates=(1, 5, 10, 20, 40, 80), reps=10, master_seed=1)
for rate, b in mean_bias_by_rate(records).items():
    print(f"{rate:3g}%  mean bias {b:+.3f}")

# %% [markdown]
# Low rates lose stays: fewer than a few fixes per 30 minutes cannot
# sustain a dwell. Above about a third of the original fixes the counts
# recover.

# %%
worst = min(records, key=lambda r: r.bias)
print(worst.parent_day_key, worst.rate_pct, worst.stays_truth, worst.stays_resampled, worst.metrics)
