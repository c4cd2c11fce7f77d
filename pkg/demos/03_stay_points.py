# %% [markdown]
# # Stay points and the silent-gap rule
#
# A stay is a run of fixes within 100 m of its first fix lasting at least
# 20 minutes. A silence longer than 30 minutes breaks the run, and a run
# broken that way is not counted.

# %%
from lbsbias.staypoints import StayParams, detect_stays
from lbsbias.synth import EmissionConfig, emit_pings, expected_detected_count, generate_schedule

sched = generate_schedule(seed=21)
print("scheduled stays:", sched.true_stay_count)
for ep in sched.episodes:
    print(f"{ep.kind:6s} {ep.start_min:7.1f} -> {ep.end_min:7.1f}")

# %%
day = emit_pings(sched, seed=21)
for s in detect_stays(day):
    print(f"({s.centroid_lat:.5f}, {s.centroid_lon:.5f}) {s.dwell_min:6.1f} min, {s.n_pings} fixes")

# %% [markdown]
# Silence the last 45 minutes of the second stay, ending 10 minutes
# before departure. The short tail left over is under 20 minutes so the
# stay disappears; the oracle predicts this from the schedule alone.

# %%
st = sched.stays[1]
e = EmissionConfig(dropout=((st.end_min - 55, st.end_min - 10),))
print(expected_detected_count(sched, e), len(detect_stays(emit_pings(sched, e, seed=21))))

# %%
# a looser gap threshold bridges the silence again
print(len(detect_stays(emit_pings(sched, e, seed=21), StayParams(gap_split_min=60))))
