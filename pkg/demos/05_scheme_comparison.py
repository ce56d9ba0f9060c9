"""Benders, enumeration and random offloading on a small sweep."""
# %%
import csv
import tempfile

from ntn_offload.harness import ExperimentConfig, run_sweep

cfg = ExperimentConfig(hue_counts=[10, 20, 40], bandwidths_hz=[10e6, 20e6], runs=5,
                       output_dir=tempfile.mkdtemp())
paths = run_sweep(cfg)

# %% Mean weighted sum rate per scheme.  Doubling the bandwidth doubles the link
# terms while local computing is unchanged.
with open(paths["means"]) as fh:
    for r in csv.DictReader(fh):
        print(f"{r['m_h']:>4} {float(r['bandwidth_hz']) / 1e6:4.0f} MHz {r['scheme']:>8} "
              f"{float(r['mean_objective_bps']):.4e}  local {float(r['mean_local_bps']):.3e}  "
              f"backhaul {float(r['mean_backhaul_bps']):.3e}")
