"""Link budget walk-through: from dB parameters to per-HUE rate coefficients."""
# %%
import numpy as np

from ntn_offload import SystemParams
from ntn_offload.physics import (channel_gain, large_scale_fading_db, local_rate, random_instance,
                                 rate_coefficient, with_bandwidth)

params = SystemParams()
print("frame", params.frame_duration_s, "s; bandwidth", params.bandwidth_hz / 1e6, "MHz")

# %% Path loss grows 20 dB per decade of distance with the default exponent of 2.
for d in (1.0, 10.0, 550e3, 800e3):
    print(f"{d:>10.0f} m  fading {large_scale_fading_db(d, params, 0.0):8.3f} dB")

# %% Gain at the orbit altitude and the resulting bits/s per unit of airtime.
g = channel_gain(params.leo_altitude_m, params.gain_hue_dbi, params)
print("gain", g, "coefficient", rate_coefficient(g, params.tx_power_hue_dbm, params), "bit/s")
print("local computing rate", local_rate(params), "bit/s")

# %% A random 10-HUE instance.  Halving the bandwidth halves every link coefficient.
inst = random_instance(params, 10, seed=1)
half = random_instance(with_bandwidth(params, params.bandwidth_hz / 2), 10, seed=1)
print(np.round(inst.leo_rate_coeff_bps / 1e6, 2), "Mbit/s")
print("ratio", np.unique(inst.leo_rate_coeff_bps / half.leo_rate_coeff_bps))
