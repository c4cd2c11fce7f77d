# %% [markdown]
# # Quality metrics of a user-day
#
# Five numbers summarise how well a device was observed on one day:
# record count, temporal occupancy (30-minute slots seen), largest gap
# between records, share of fixes under 100 m accuracy, and burstiness of
# the inter-record intervals.

# %%
import numpy as np

from lbsbias.metrics import metrics_vector
from lbsbias.synth import EmissionConfig, emit_pings, generate_schedule

sched = generate_schedule(seed=4)
dense = emit_pings(sched, seed=4)
print(metrics_vector(dense))

# %% [markdown]
# A device that goes quiet for most of the afternoon and records sparsely
# otherwise. Occupancy drops, the largest gap jumps, and intervals become
# clustered so burstiness rises above zero.

# %%
sparse = emit_pings(sched, EmissionConfig(cadence_s=300, keep_prob=0.3, dropout=((720, 1080),)), seed=4)
m = metrics_vector(sparse)
print(m)

# %%
# interval histogram, minutes
gaps = np.diff(sparse.timestamps) / 60
print(np.histogram(gaps, bins=[0, 5, 15, 30, 60, 120, 1440])[0])

# %% [markdown]
# Degenerate days are still summarised: an empty day reports the 1440
# minute sentinel gap and is flagged instead of raising.

# %%
print(metrics_vector(dense.with_pings([])))
