"""Physical layer for a coherent impulse-radio link with impulsive interferers.

Discrete vector channel per symbol slot n:

    r[n] = u_1[n] A_1 h_1 + sum_{i>=2} u_i[n] A_i h_i + z[n]

with on-off symbols u_i[n] ~ Bernoulli(eta_i), tap vectors h_i ~ N(0, T) drawn
once per codeword (the channels stay constant over n), and white receiver
noise z[n] ~ N(0, sigma_W^2 I_M). The receiver knows h_1 only. Node 1 is the
intended transmitter; nodes 2..I are interferers. Every transmitter runs at
its amplitude cap A_i = sqrt(P_rcv(l_i) / eta_i).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class InvalidParameterError(ValueError):
    """A physical or configuration parameter is outside its domain."""


def received_power(tx_power_w: float, pathloss_b: float, pathloss_alpha: float,
                   distance_m: float) -> float:
    """Average received power P_tx * b * l^-alpha in watts."""
    if tx_power_w <= 0.0:
        raise InvalidParameterError(f"tx_power_w must be > 0, got {tx_power_w}")
    if pathloss_b <= 0.0:
        raise InvalidParameterError(f"pathloss_b must be > 0, got {pathloss_b}")
    if pathloss_alpha <= 0.0:
        raise InvalidParameterError(f"pathloss_alpha must be > 0, got {pathloss_alpha}")
    if distance_m <= 0.0:
        raise InvalidParameterError(f"distance_m must be > 0, got {distance_m}")
    return tx_power_w * pathloss_b * distance_m ** (-pathloss_alpha)


def pulse_amplitude(received_power_w: float, duty_cycle: float) -> float:
    """Per-pulse amplitude cap sqrt(P_rcv / eta): a sparser transmitter packs
    the same average power into larger pulses."""
    if received_power_w < 0.0:
        raise InvalidParameterError(f"received_power_w must be >= 0, got {received_power_w}")
    if not 0.0 < duty_cycle < 1.0:
        raise InvalidParameterError(f"duty_cycle must be in (0, 1), got {duty_cycle}")
    return float(np.sqrt(received_power_w / duty_cycle))


@dataclass(frozen=True)
class TapCovariance:
    """Symmetric PSD covariance of one channel's tap vector."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidParameterError(f"tap covariance must be square, got shape {m.shape}")
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(1.0, float(np.abs(m).max(initial=0.0)))):
            raise InvalidParameterError("tap covariance must be symmetric")
        eigvals = np.linalg.eigvalsh(m)
        if eigvals.min(initial=0.0) < -1e-10 * max(1.0, eigvals.max(initial=0.0)):
            raise InvalidParameterError("tap covariance must be positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @property
    def num_taps(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @cached_property
    def factor(self) -> np.ndarray:
        """G with G @ G.T = matrix, shape (M, r), r = rank. Computed once and
        reused by every sampler and density in a scenario."""
        w, v = np.linalg.eigh(self.matrix)
        tol = max(w.max(initial=0.0), 0.0) * 1e-12
        keep = w > tol
        return v[:, keep] * np.sqrt(w[keep])


def build_tap_covariance(num_taps: int, captured_fraction: float,
                         total_path_count: int) -> TapCovariance:
    """Diagonal tap covariance with linearly decaying energy.

    Weight of tap m is total_path_count - m + 1; the first num_taps weights are
    normalized so the trace is exactly captured_fraction.
    """
    if num_taps < 1:
        raise InvalidParameterError(f"num_taps must be >= 1, got {num_taps}")
    if not 0.0 < captured_fraction <= 1.0:
        raise InvalidParameterError(
            f"captured_fraction must be in (0, 1], got {captured_fraction}")
    if total_path_count < num_taps:
        raise InvalidParameterError(
            f"total_path_count must be >= num_taps, got {total_path_count} < {num_taps}")
    weights = total_path_count - np.arange(num_taps, dtype=float)
    return TapCovariance(np.diag(captured_fraction * weights / weights.sum()))


def sample_channel(tap_cov: TapCovariance, rng: np.random.Generator) -> np.ndarray:
    """One tap vector h ~ N(0, T)."""
    g = tap_cov.factor
    if g.shape[1] == 0:
        return np.zeros(tap_cov.num_taps)
    return g @ rng.standard_normal(g.shape[1])


def sample_symbols(duty_cycle: float, codeword_len: int, rng: np.random.Generator) -> np.ndarray:
    """One on-off codeword row, iid Bernoulli(duty_cycle), dtype float."""
    if not 0.0 < duty_cycle < 1.0:
        raise InvalidParameterError(f"duty_cycle must be in (0, 1), got {duty_cycle}")
    if codeword_len < 1:
        raise InvalidParameterError(f"codeword_len must be >= 1, got {codeword_len}")
    return (rng.random(codeword_len) < duty_cycle).astype(float)


def simulate_output(codewords: np.ndarray, channels: np.ndarray, amplitudes: np.ndarray,
                    noise_var_w: float, rng: np.random.Generator) -> np.ndarray:
    """Received M x N block for given codewords (I x N) and channels (I x M)."""
    u = np.asarray(codewords, dtype=float)
    h = np.asarray(channels, dtype=float)
    a = np.asarray(amplitudes, dtype=float)
    if u.ndim != 2 or h.ndim != 2 or u.shape[0] != h.shape[0] or a.shape != (u.shape[0],):
        raise InvalidParameterError(
            f"shape mismatch: codewords {u.shape}, channels {h.shape}, amplitudes {a.shape}")
    if noise_var_w < 0.0:
        raise InvalidParameterError(f"noise_var_w must be >= 0, got {noise_var_w}")
    clean = (h.T * a) @ u
    return clean + np.sqrt(noise_var_w) * rng.standard_normal(clean.shape)


H1_MODES = ("fixed-draw", "averaged")


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one link-plus-interferers evaluation point.

    Defaults reproduce the dense-multipath office setup: 0.1 mW transmitters,
    pathloss b * l^-3.3 with b = 10^-5.5, -130 dBW receiver noise, and a
    5-tap receiver capturing 14% of a 68-path linearly decaying profile.
    """

    num_nodes: int = 2                                # I: 1 transmitter + I-1 interferers
    codeword_len: int = 80                            # N symbols per codeword
    taps: int = 5                                     # M receiver taps
    duty_cycles: tuple[float, ...] = (0.5, 0.5)       # eta_i, one per node
    tx_power_w: float = 1e-4                          # P_tx per node [W]
    pathloss_b: float = 10.0 ** -5.5
    pathloss_alpha: float = 3.3
    link_distance_m: float = 3.0                      # transmitter -> receiver
    interferer_distances_m: tuple[float, ...] = (10.0,)
    noise_var_w: float = 1e-13                        # sigma_W^2 per tap
    captured_energy_fraction: float = 0.14            # trace of the tap covariance
    total_path_count: int = 68                        # L of the decay profile
    samples_theta: int = 2000
    samples_pd: int = 2000
    samples_upper: int = 100_000
    rng_seed: int = 0
    h1_mode: str = "fixed-draw"
    pd_tail_mass: float = 0.0                         # skip strata worth <= this much P(d)

    def __post_init__(self):
        if self.num_nodes < 1:
            raise InvalidParameterError(f"num_nodes must be >= 1, got {self.num_nodes}")
        if self.codeword_len < 1:
            raise InvalidParameterError(f"codeword_len must be >= 1, got {self.codeword_len}")
        if self.taps < 1:
            raise InvalidParameterError(f"taps must be >= 1, got {self.taps}")
        object.__setattr__(self, "duty_cycles", tuple(float(x) for x in self.duty_cycles))
        object.__setattr__(self, "interferer_distances_m",
                           tuple(float(x) for x in self.interferer_distances_m))
        if len(self.duty_cycles) != self.num_nodes:
            raise InvalidParameterError(
                f"duty_cycles needs {self.num_nodes} entries, got {len(self.duty_cycles)}")
        for eta in self.duty_cycles:
            if not 0.0 < eta < 1.0:
                raise InvalidParameterError(f"duty_cycles entries must be in (0, 1), got {eta}")
        if len(self.interferer_distances_m) != self.num_nodes - 1:
            raise InvalidParameterError(
                f"interferer_distances_m needs {self.num_nodes - 1} entries, "
                f"got {len(self.interferer_distances_m)}")
        for d in self.interferer_distances_m:
            if d <= 0.0:
                raise InvalidParameterError(f"interferer distances must be > 0, got {d}")
        if self.link_distance_m <= 0.0:
            raise InvalidParameterError(f"link_distance_m must be > 0, got {self.link_distance_m}")
        if self.tx_power_w <= 0.0 or self.pathloss_b <= 0.0 or self.pathloss_alpha <= 0.0:
            raise InvalidParameterError("tx_power_w, pathloss_b, pathloss_alpha must be > 0")
        if self.noise_var_w <= 0.0:
            raise InvalidParameterError(f"noise_var_w must be > 0, got {self.noise_var_w}")
        if not 0.0 < self.captured_energy_fraction <= 1.0:
            raise InvalidParameterError(
                f"captured_energy_fraction must be in (0, 1], got {self.captured_energy_fraction}")
        if self.total_path_count < self.taps:
            raise InvalidParameterError(
                f"total_path_count must be >= taps, got {self.total_path_count} < {self.taps}")
        for name in ("samples_theta", "samples_pd", "samples_upper"):
            if getattr(self, name) < 2:
                raise InvalidParameterError(f"{name} must be >= 2, got {getattr(self, name)}")
        if not 0 <= self.rng_seed < 2**64:
            raise InvalidParameterError(f"rng_seed must be a u64, got {self.rng_seed}")
        if self.h1_mode not in H1_MODES:
            raise InvalidParameterError(
                f"h1_mode must be one of {H1_MODES}, got {self.h1_mode!r}")
        if not 0.0 <= self.pd_tail_mass < 1.0:
            raise InvalidParameterError(
                f"pd_tail_mass must be in [0, 1), got {self.pd_tail_mass}")

    def node_distances(self) -> np.ndarray:
        return np.array((self.link_distance_m,) + self.interferer_distances_m)

    def amplitudes(self) -> np.ndarray:
        """Per-node pulse amplitudes, all nodes at their power cap."""
        out = np.empty(self.num_nodes)
        for i, (dist, eta) in enumerate(zip(self.node_distances(), self.duty_cycles)):
            p = received_power(self.tx_power_w, self.pathloss_b, self.pathloss_alpha, dist)
            out[i] = pulse_amplitude(p, eta)
        return out

    def tap_covariance(self) -> TapCovariance:
        return build_tap_covariance(self.taps, self.captured_energy_fraction,
                                    self.total_path_count)
