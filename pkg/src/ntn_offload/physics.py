"""Link budget, local computation and instance construction.

Every quantity here is in SI units except the dB/dBm/dBi parameters, which are
converted with :func:`db_to_linear` at the point of use.  Powers in dBm are
compared to the noise floor in dBm, so the SNR ratio is scale-free.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

METERS_PER_NM = 1852.0


def db_to_linear(x_db: float) -> float:
    """Convert a dB-scale value to linear scale."""
    if not math.isfinite(x_db):
        raise ValueError(f"dB value must be finite, got {x_db!r}")
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if not (x > 0 and math.isfinite(x)):
        raise ValueError(f"linear value must be positive and finite, got {x!r}")
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class SystemParams:
    """Physical and protocol constants.

    Defaults are the simulation table values (P, sigma^2, f, B, mu, chi, the three
    antenna gains, shadowing std, intercept, exponent, Rician coefficient). The
    remaining defaults (frame length, energy budget, chip coefficient, reference
    distance, LEO altitude, tau floor) are not given by the source model and are
    chosen to be physically plausible.
    """

    bandwidth_hz: float = 20e6
    carrier_freq_hz: float = 30e9
    noise_power_dbm: float = -104.0
    tx_power_hue_dbm: float = 33.0
    tx_power_uav_dbm: float = 33.0
    overhead: float = 1.1
    cycles_per_bit: float = 100.0
    gain_hue_dbi: float = 25.0
    gain_uav_dbi: float = 25.0
    gain_sat_dbi: float = 30.0
    shadow_std_db: float = 0.1
    intercept_db: float = 46.4
    pathloss_exp: float = 2.0
    rician_coeff: float = 1.59
    ref_distance_m: float = 1.0
    frame_duration_s: float = 1.0
    energy_budget_j: float = 1e-3
    chip_coeff: float = 1e-28
    leo_altitude_m: float = 550e3
    area_side_nm: float = 500.0
    epsilon_tau_s: float = 1e-6
    # None -> equal to leo_altitude_m
    uav_leo_distance_m: Optional[float] = None
    # Off by default: alpha is a fixed coefficient. When on, each link draws a
    # unit-mean Rician power gain with this K-factor and scales alpha by it.
    random_rician: bool = False
    rician_k_factor: float = 10.0

    def __post_init__(self):
        positive = (
            "bandwidth_hz", "carrier_freq_hz", "cycles_per_bit", "rician_coeff",
            "ref_distance_m", "frame_duration_s", "energy_budget_j", "chip_coeff",
            "leo_altitude_m", "area_side_nm", "epsilon_tau_s", "rician_k_factor",
        )
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool) or v is None:
                continue
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{f.name}: must be a finite number, got {v!r}")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name}: must be > 0, got {getattr(self, name)!r}")
        if self.overhead < 1:
            raise ValueError(f"overhead: must be >= 1, got {self.overhead!r}")
        if self.shadow_std_db < 0:
            raise ValueError(f"shadow_std_db: must be >= 0, got {self.shadow_std_db!r}")
        if self.epsilon_tau_s >= self.frame_duration_s:
            raise ValueError("epsilon_tau_s: must be smaller than frame_duration_s")
        if self.uav_leo_distance_m is not None and not self.uav_leo_distance_m > 0:
            raise ValueError(
                f"uav_leo_distance_m: must be > 0, got {self.uav_leo_distance_m!r}")

    @property
    def uav_distance_m(self) -> float:
        if self.uav_leo_distance_m is None:
            return self.leo_altitude_m
        return self.uav_leo_distance_m

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SystemParams":
        return cls(**d)


@dataclass(frozen=True)
class Topology:
    hue_positions: tuple
    num_hues: int
    num_lues: int
    hue_leo_distances_m: tuple
    uav_leo_distance_m: float

    def __post_init__(self):
        if self.num_hues < 1:
            raise ValueError("num_hues must be >= 1")
        if self.num_lues < 0:
            raise ValueError("num_lues must be >= 0")
        if len(self.hue_positions) != self.num_hues or \
                len(self.hue_leo_distances_m) != self.num_hues:
            raise ValueError("hue_positions and hue_leo_distances_m must have num_hues entries")
        if not all(d > 0 for d in self.hue_leo_distances_m) or not self.uav_leo_distance_m > 0:
            raise ValueError("distances must be positive")

    def to_dict(self) -> dict:
        return {
            "hue_positions": [list(p) for p in self.hue_positions],
            "num_hues": self.num_hues,
            "num_lues": self.num_lues,
            "hue_leo_distances_m": list(self.hue_leo_distances_m),
            "uav_leo_distance_m": self.uav_leo_distance_m,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Topology":
        return cls(
            hue_positions=tuple(tuple(float(c) for c in p) for p in d["hue_positions"]),
            num_hues=int(d["num_hues"]),
            num_lues=int(d["num_lues"]),
            hue_leo_distances_m=tuple(float(x) for x in d["hue_leo_distances_m"]),
            uav_leo_distance_m=float(d["uav_leo_distance_m"]),
        )


@dataclass(frozen=True)
class ChannelRealization:
    gain_hue: tuple
    gain_uav: float
    fading_db_hue: tuple
    fading_db_uav: float
    # one draw per HUE link, then the UAV link last
    shadow_draws_db: tuple
    # per-link Rician coefficient actually applied, same layout as shadow draws
    rician_coeffs: tuple = ()

    def to_dict(self) -> dict:
        return {
            "gain_hue": list(self.gain_hue),
            "gain_uav": self.gain_uav,
            "fading_db_hue": list(self.fading_db_hue),
            "fading_db_uav": self.fading_db_uav,
            "shadow_draws_db": list(self.shadow_draws_db),
            "rician_coeffs": list(self.rician_coeffs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelRealization":
        return cls(
            gain_hue=tuple(map(float, d["gain_hue"])),
            gain_uav=float(d["gain_uav"]),
            fading_db_hue=tuple(map(float, d["fading_db_hue"])),
            fading_db_uav=float(d["fading_db_uav"]),
            shadow_draws_db=tuple(map(float, d["shadow_draws_db"])),
            rician_coeffs=tuple(map(float, d.get("rician_coeffs", ()))),
        )


def _frozen_array(values) -> np.ndarray:
    a = np.array(values, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Instance:
    """One solvable problem.

    ``leo_rate_coeff_bps[i]`` and ``uav_rate_coeff_bps`` are bits/s earned per
    second of allocated time, so an allocation ``tau`` earns ``coeff * tau``.
    Array fields are read-only numpy arrays.
    """

    params: SystemParams
    topology: Topology
    channel: ChannelRealization
    local_rate_bps: np.ndarray
    leo_rate_coeff_bps: np.ndarray
    uav_rate_coeff_bps: float
    weights: np.ndarray

    def __post_init__(self):
        for name in ("local_rate_bps", "leo_rate_coeff_bps", "weights"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        m = self.topology.num_hues
        if not (len(self.local_rate_bps) == len(self.leo_rate_coeff_bps) == len(self.weights) == m):
            raise ValueError(f"coefficient arrays must all have length num_hues={m}")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be > 0")

    @property
    def num_hues(self) -> int:
        return self.topology.num_hues

    @property
    def weighted_leo_coeff(self) -> np.ndarray:
        """z_i * c_i: weighted bits/s per second of HUE airtime."""
        return self.weights * self.leo_rate_coeff_bps

    @property
    def weighted_local_rate(self) -> np.ndarray:
        return self.weights * self.local_rate_bps

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "topology": self.topology.to_dict(),
            "channel": self.channel.to_dict(),
            "local_rate_bps": self.local_rate_bps.tolist(),
            "leo_rate_coeff_bps": self.leo_rate_coeff_bps.tolist(),
            "uav_rate_coeff_bps": self.uav_rate_coeff_bps,
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        return cls(
            params=SystemParams.from_dict(d["params"]),
            topology=Topology.from_dict(d["topology"]),
            channel=ChannelRealization.from_dict(d["channel"]),
            local_rate_bps=d["local_rate_bps"],
            leo_rate_coeff_bps=d["leo_rate_coeff_bps"],
            uav_rate_coeff_bps=float(d["uav_rate_coeff_bps"]),
            weights=d["weights"],
        )

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    @classmethod
    def from_json(cls, s: str) -> "Instance":
        return cls.from_dict(json.loads(s))

    def digest(self) -> str:
        """SHA-256 of the canonical JSON serialization."""
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def large_scale_fading_db(d_m: float, params: SystemParams, shadow_db: float = 0.0) -> float:
    if not d_m > 0:
        raise ValueError(f"distance must be > 0, got {d_m!r}")
    return (params.intercept_db
            + 10.0 * params.pathloss_exp * math.log10(d_m / params.ref_distance_m)
            + shadow_db)


def channel_gain(d_m: float, terminal_gain_dbi: float, params: SystemParams,
                 shadow_db: float = 0.0, rician: Optional[float] = None) -> float:
    """Linear LEO-terminal gain: alpha * 10^(-beta/10) * G_sat * G_terminal."""
    beta = large_scale_fading_db(d_m, params, shadow_db)
    alpha = params.rician_coeff if rician is None else rician
    return (alpha * 10.0 ** (-beta / 10.0)
            * db_to_linear(params.gain_sat_dbi) * db_to_linear(terminal_gain_dbi))


def local_rate(params: SystemParams) -> float:
    """Local computing rate in bits/s at the energy-optimal CPU frequency.

    Running the whole frame (tau = T) at f* = (E_th / (nu T))^(1/3) exhausts the
    energy budget exactly; the rate is f* tau / (chi T) = f* / chi.
    """
    f_star = (params.energy_budget_j / (params.chip_coeff * params.frame_duration_s)) ** (1.0 / 3.0)
    return f_star * params.frame_duration_s / (params.cycles_per_bit * params.frame_duration_s)


def rate_coefficient(gain: float, tx_power_dbm: float, params: SystemParams) -> float:
    """Bits/s per second of airtime: (B / mu) * log2(1 + g P / sigma^2)."""
    if gain < 0:
        raise ValueError("gain must be >= 0")
    snr = gain * db_to_linear(tx_power_dbm) / db_to_linear(params.noise_power_dbm)
    return (params.bandwidth_hz / params.overhead) * math.log2(1.0 + snr)


def topology_from_positions(params: SystemParams, positions: Sequence[Sequence[float]],
                            num_lues: int = 0) -> Topology:
    """Topology for explicit HUE ground positions (meters, square origin at a corner)."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 2)
    center = params.area_side_nm * METERS_PER_NM / 2.0
    offsets = np.hypot(pos[:, 0] - center, pos[:, 1] - center)
    dists = np.sqrt(params.leo_altitude_m ** 2 + offsets ** 2)
    return Topology(
        hue_positions=tuple((float(x), float(y)) for x, y in pos),
        num_hues=len(pos),
        num_lues=num_lues,
        hue_leo_distances_m=tuple(float(d) for d in dists),
        uav_leo_distance_m=float(params.uav_distance_m),
    )


def sample_topology(params: SystemParams, m_h: int, m_l: int = 0, rng_seed: int = 0) -> Topology:
    """HUEs i.i.d. uniform over the deployment square; LEO above its center."""
    if m_h < 1:
        raise ValueError(f"m_h must be >= 1, got {m_h}")
    if m_l < 0:
        raise ValueError(f"m_l must be >= 0, got {m_l}")
    rng = np.random.default_rng(rng_seed)
    side = params.area_side_nm * METERS_PER_NM
    pos = rng.uniform(0.0, side, size=(m_h, 2))
    return topology_from_positions(params, pos, num_lues=m_l)


def _rician_power(rng: np.random.Generator, k: float, n: int) -> np.ndarray:
    # unit-mean |h|^2 with LoS fraction k/(k+1)
    los = math.sqrt(k / (k + 1.0))
    s = math.sqrt(1.0 / (2.0 * (k + 1.0)))
    h = los + s * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return np.abs(h) ** 2


def build_instance(params: SystemParams, topology: Topology, rng_seed: int = 0,
                   weights: Optional[Sequence[float]] = None) -> Instance:
    """Draw shadowing for every link and derive all rate coefficients."""
    m = topology.num_hues
    if weights is None:
        weights = np.ones(m)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (m,):
        raise ValueError(f"weights must have length {m}, got shape {weights.shape}")
    if np.any(weights <= 0):
        raise ValueError("weights must be > 0")

    rng = np.random.default_rng(rng_seed)
    shadow = rng.normal(0.0, params.shadow_std_db, size=m + 1) if params.shadow_std_db > 0 \
        else np.zeros(m + 1)
    if params.random_rician:
        alphas = params.rician_coeff * _rician_power(rng, params.rician_k_factor, m + 1)
    else:
        alphas = np.full(m + 1, params.rician_coeff)

    fading_hue = [large_scale_fading_db(d, params, float(s))
                  for d, s in zip(topology.hue_leo_distances_m, shadow[:m])]
    fading_uav = large_scale_fading_db(topology.uav_leo_distance_m, params, float(shadow[m]))
    gain_hue = [channel_gain(d, params.gain_hue_dbi, params, float(s), float(a))
                for d, s, a in zip(topology.hue_leo_distances_m, shadow[:m], alphas[:m])]
    gain_uav = channel_gain(topology.uav_leo_distance_m, params.gain_uav_dbi, params,
                            float(shadow[m]), float(alphas[m]))

    channel = ChannelRealization(
        gain_hue=tuple(gain_hue),
        gain_uav=gain_uav,
        fading_db_hue=tuple(fading_hue),
        fading_db_uav=fading_uav,
        shadow_draws_db=tuple(float(s) for s in shadow),
        rician_coeffs=tuple(float(a) for a in alphas),
    )
    return Instance(
        params=params,
        topology=topology,
        channel=channel,
        local_rate_bps=np.full(m, local_rate(params)),
        leo_rate_coeff_bps=[rate_coefficient(g, params.tx_power_hue_dbm, params) for g in gain_hue],
        uav_rate_coeff_bps=rate_coefficient(gain_uav, params.tx_power_uav_dbm, params),
        weights=weights,
    )


def random_instance(params: SystemParams, m_h: int, seed: int,
                    weights: Optional[Sequence[float]] = None, m_l: int = 0) -> Instance:
    """Topology and channel from one seed (two independent child streams)."""
    topo_seed, chan_seed = np.random.SeedSequence(seed).generate_state(2)
    topo = sample_topology(params, m_h, m_l, int(topo_seed))
    return build_instance(params, topo, int(chan_seed), weights)


def with_bandwidth(params: SystemParams, bandwidth_hz: float) -> SystemParams:
    return dataclasses.replace(params, bandwidth_hz=bandwidth_hz)
