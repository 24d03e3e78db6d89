"""Small-scale channel composition and a ray-sum time-varying channel simulator."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT


@dataclass(frozen=True)
class SubChannels:
    """Direct (Nr x Nt), Tx-RIS (Q x Nt) and RIS-Rx (Nr x Q) links plus the RIS coefficients."""

    h_direct: np.ndarray
    h_tx_ris: np.ndarray
    h_ris_rx: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        hd, ht, hr, th = (np.atleast_2d(np.asarray(self.h_direct, complex)),
                          np.atleast_2d(np.asarray(self.h_tx_ris, complex)),
                          np.atleast_2d(np.asarray(self.h_ris_rx, complex)),
                          np.atleast_1d(np.asarray(self.theta, complex)))
        nr, nt = hd.shape
        q = th.size
        if ht.shape != (q, nt) or hr.shape != (nr, q):
            raise ValueError(f"inconsistent sub-channel shapes: direct {hd.shape}, "
                             f"tx-ris {ht.shape}, ris-rx {hr.shape}, theta ({q},)")
        if np.any(np.abs(th) > 1 + 1e-12):
            raise ValueError("passive RIS needs |theta_q| <= 1")
        for name, v in (("h_direct", hd), ("h_tx_ris", ht), ("h_ris_rx", hr), ("theta", th)):
            object.__setattr__(self, name, v)

    def reversed(self) -> "SubChannels":
        """Rx->Tx link under reciprocity (transposed links, same RIS state)."""
        return SubChannels(self.h_direct.T, self.h_ris_rx.T, self.h_tx_ris.T, self.theta)


def cascaded_channel(sub: SubChannels) -> np.ndarray:
    return sub.h_direct + (sub.h_ris_rx * sub.theta) @ sub.h_tx_ris


def co_phased_theta(h_tx_ris, h_ris_rx) -> np.ndarray:
    """Unit-modulus coefficients aligning every RIS path of a SISO link to zero phase."""
    return np.exp(-1j * (np.angle(np.ravel(h_tx_ris)) + np.angle(np.ravel(h_ris_rx))))


def keyhole_channel(rx_responses, tx_responses, theta) -> np.ndarray:
    """Sum of per-element dyads ``theta_q * a_q b_q^T``.

    ``rx_responses`` is ``(Q, Nr)``, ``tx_responses`` is ``(Q, Nt)``.
    """
    a = np.atleast_2d(np.asarray(rx_responses, complex))
    b = np.atleast_2d(np.asarray(tx_responses, complex))
    th = np.atleast_1d(np.asarray(theta, complex))
    if len(a) < 1 or not (len(a) == len(b) == th.size):
        raise ValueError("need Q >= 1 matching rx responses, tx responses and coefficients")
    return np.einsum("q,qi,qj->ij", th, a, b)


@dataclass(frozen=True)
class Ray:
    power: float
    aoa: float              # radians, azimuth of arrival at the receiver
    delay: float = 0.0
    ris: bool = False
    los: bool = False


@dataclass(frozen=True)
class FadingScenario:
    frequency: float
    speed: float
    rays: tuple
    heading: float = 0.0
    sample_interval: Optional[float] = None
    snapshots: int = 200
    runs: int = 200
    ris_tracking: bool = False
    drop_ris_rays: bool = False
    k_factor: Optional[float] = None
    seed: int = 0
    scenario_id: str = "custom"

    def __post_init__(self):
        rays = tuple(self.rays)
        if not rays:
            raise ValueError("scenario needs at least one ray")
        p = np.array([r.power for r in rays], float)
        if np.any(p < 0):
            raise ValueError("ray powers must be non-negative")
        if self.k_factor is not None:
            if self.k_factor < 0:
                raise ValueError("k_factor must be >= 0")
            los = np.array([r.los for r in rays])
            if not los.any() or los.all():
                raise ValueError("k_factor needs both LOS and non-LOS rays")
            k = self.k_factor
            p = np.where(los, p / p[los].sum() * k / (k + 1), p / p[~los].sum() / (k + 1))
        p = p / p.sum()
        rays = tuple(Ray(float(pi), r.aoa, r.delay, r.ris, r.los) for pi, r in zip(p, rays))
        object.__setattr__(self, "rays", rays)
        if self.sample_interval is None:
            fd = self.max_doppler
            object.__setattr__(self, "sample_interval", 1.0 / (16 * fd) if fd > 0 else 1e-3)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def max_doppler(self) -> float:
        return self.speed / self.wavelength

    def doppler_shifts(self) -> np.ndarray:
        return self.max_doppler * np.cos(np.array([r.aoa for r in self.rays]) - self.heading)


@dataclass
class ChannelSeries:
    """Samples indexed ``(run, time step, rx element, tx element)``."""

    samples: np.ndarray
    sample_interval: float
    scenario_id: str = "custom"
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.samples, complex)
        if s.ndim == 1:
            s = s[None, :, None, None]
        elif s.ndim == 2:
            s = s[:, :, None, None]
        if s.ndim != 4:
            raise ValueError("samples must be (runs, steps[, nr, nt])")
        if not np.all(np.isfinite(s)):
            raise ValueError("non-finite channel samples")
        self.samples = s

    @property
    def steps(self) -> int:
        return self.samples.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps) * self.sample_interval


class SamplingError(ValueError):
    pass


def ring_scenario(frequency=2.4e9, speed=30.0, n_rays=64, **kw) -> FadingScenario:
    """Isotropic scattering: equal-power rays at evenly spaced angles of arrival."""
    aoa = 2 * np.pi * (np.arange(n_rays) + 0.5) / n_rays
    return FadingScenario(frequency, speed, tuple(Ray(1.0, a) for a in aoa), **kw)


def ris_scenario(frequency=5.9e9, speed=30.0, k_factor=None, n_ris=4, n_scatter=16,
                 los_power=0.3, ris_power=0.4, **kw) -> FadingScenario:
    """LOS ray, a few RIS-relayed rays and a diffuse scattering ring.

    Powers are split LOS / RIS / scatter as ``los_power``, ``ris_power`` and
    the remainder. The RIS rays arrive from a sector away from the LOS.
    """
    rays = [Ray(los_power, 0.3, los=True)]
    ris_aoa = np.linspace(1.6, 2.4, n_ris)
    rays += [Ray(ris_power / n_ris, a, ris=True) for a in ris_aoa]
    scatter = 1.0 - los_power - ris_power
    aoa = 2 * np.pi * (np.arange(n_scatter) + 0.5) / n_scatter
    rays += [Ray(scatter / n_scatter, a) for a in aoa]
    return FadingScenario(frequency, speed, tuple(rays), k_factor=k_factor, scenario_id="ris-ray-sum", **kw)


def run_seed(seed: int, run: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(run)])


def simulate_time_varying_channel(scenario: FadingScenario) -> ChannelSeries:
    """Sum of Doppler-shifted rays; optionally RIS rays track the strongest ray's phase.

    Each ray contributes ``sqrt(p_l) exp(j(2 pi f_l t + psi_l))`` with
    ``psi_l`` drawn per run. With tracking on, every RIS ray takes the
    instantaneous phase of the strongest ray at every snapshot.
    """
    fd_max = scenario.max_doppler
    dt = scenario.sample_interval
    if fd_max > 0 and dt > 1.0 / (8 * fd_max):
        raise SamplingError(f"sample interval {dt:g} s exceeds 1/(8 f_d) = {1 / (8 * fd_max):g} s")
    rays = [r for r in scenario.rays if not (scenario.drop_ris_rays and r.ris)]
    amp = np.sqrt([r.power for r in rays])
    ris = np.array([r.ris for r in rays])
    fd = fd_max * np.cos(np.array([r.aoa for r in rays]) - scenario.heading)
    t = np.arange(scenario.snapshots) * dt
    psi = np.stack([run_seed(scenario.seed, i).uniform(0, 2 * np.pi, len(scenario.rays))
                    for i in range(scenario.runs)])
    if scenario.drop_ris_rays:
        keep = np.array([not r.ris for r in scenario.rays])
        psi = psi[:, keep]
    phase = 2 * np.pi * fd[None, None, :] * t[None, :, None] + psi[:, None, :]
    if scenario.ris_tracking and ris.any():
        ref = int(np.argmax(amp))
        phase[:, :, ris] = phase[:, :, ref:ref + 1]
    h = np.exp(1j * phase) @ amp
    return ChannelSeries(h[..., None, None], dt, scenario.scenario_id, scenario.seed,
                         {"runs": scenario.runs, "ris_tracking": scenario.ris_tracking,
                          "drop_ris_rays": scenario.drop_ris_rays})


def temporal_acf(series: ChannelSeries, max_lag: int) -> np.ndarray:
    """Normalised ``E[h(t) h*(t+k)] / E|h|^2`` for ``k = 0..max_lag``, averaged over time and runs."""
    h = series.samples
    n = h.shape[1]
    if not 0 <= max_lag < n:
        raise ValueError(f"max_lag must be in [0, {n - 1}]")
    power = np.mean(np.abs(h) ** 2)
    if power == 0:
        raise ValueError("all-zero series has no ACF")
    acf = np.empty(max_lag + 1, complex)
    acf[0] = 1.0
    for k in range(1, max_lag + 1):
        acf[k] = np.mean(h[:, : n - k] * np.conj(h[:, k:])) / power
    return acf


def doppler_spread(series: ChannelSeries) -> float:
    """RMS width (Hz) of the averaged periodogram of the series."""
    h = series.samples
    if h.shape[1] < 2:
        raise ValueError("Doppler spread needs at least two samples")
    spec = np.abs(np.fft.fft(h, axis=1)) ** 2
    psd = spec.mean(axis=(0, 2, 3))
    f = np.fft.fftfreq(h.shape[1], series.sample_interval)
    p = psd / psd.sum()
    mean = np.sum(p * f)
    return float(np.sqrt(max(np.sum(p * f ** 2) - mean ** 2, 0.0)))


def rms_delay_spread(delays, powers) -> float:
    delays = np.asarray(delays, float)
    p = np.asarray(powers, float)
    if delays.size == 0 or delays.shape != p.shape:
        raise ValueError("need matching, non-empty delays and powers")
    p = p / p.sum()
    mean = np.sum(p * delays)
    return float(np.sqrt(max(np.sum(p * (delays - mean) ** 2), 0.0)))


def effective_rank(h, rel_tol: float = 1e-3) -> int:
    s = np.linalg.svd(np.atleast_2d(h), compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s >= rel_tol * s[0]))


def condition_number(h) -> float:
    s = np.linalg.svd(np.atleast_2d(h), compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else float("inf")


def channel_metrics(series: Optional[ChannelSeries] = None, taps=None, matrix=None) -> dict:
    """Whichever of Doppler spread, RMS delay spread, effective rank and condition number the inputs allow.

    ``taps`` is a ``(delays, powers)`` pair.
    """
    if series is None and taps is None and matrix is None:
        raise ValueError("channel_metrics needs a series, a tap set or a matrix")
    out = {}
    if series is not None:
        out["doppler_spread"] = doppler_spread(series)
    if taps is not None:
        out["rms_delay_spread"] = rms_delay_spread(*taps)
    if matrix is not None:
        out["effective_rank"] = effective_rank(matrix)
        out["condition_number"] = condition_number(matrix)
    return out


def rayleigh_links(rng: np.random.Generator, q: int, runs: int) -> tuple:
    """i.i.d. unit-variance circular Gaussian Tx-RIS and RIS-Rx coefficients, ``(runs, q)`` each."""
    def cn(shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    return cn((runs, q)), cn((runs, q))


def unit_links(rng, q, runs):
    return np.ones((runs, q), complex), np.ones((runs, q), complex)


def hardening_statistics(n_values: Sequence[int], runs: int = 1000, generator: Callable = rayleigh_links,
                         phases: str = "optimal", seed: int = 0, chunk: int = 100) -> list:
    """SNR/Q^2 and Var[SNR]/E[SNR]^2 of a single-antenna RIS link for each element count.

    ``phases="optimal"`` co-phases every draw; ``"random"`` uses i.i.d. uniform
    RIS phases. Noise power is one, so SNR is ``|sum_q h_q g_q theta_q|^2``.
    """
    if runs < 100:
        raise ValueError("hardening statistics need at least 100 runs")
    if phases not in ("optimal", "random"):
        raise ValueError(f"unknown phase mode {phases!r}")
    out = []
    for q in n_values:
        rng = np.random.default_rng([int(seed), int(q)])
        snr = []
        done = 0
        while done < runs:
            n = min(chunk, runs - done)
            h, g = generator(rng, q, n)
            if phases == "optimal":
                val = np.sum(np.abs(h) * np.abs(g), axis=1) ** 2
            else:
                theta = np.exp(2j * np.pi * rng.uniform(size=(n, q)))
                val = np.abs(np.sum(h * g * theta, axis=1)) ** 2
            snr.append(val)
            done += n
        snr = np.concatenate(snr)
        mean = float(np.mean(snr))
        out.append({"Q": int(q), "mean_snr": mean, "snr_over_q2": mean / q ** 2,
                    "var_ratio": float(np.var(snr) / mean ** 2) if mean > 0 else float("nan")})
    return out


def reciprocity_check(evaluate: Callable, forward, reverse) -> dict:
    """Evaluate a model on a link and on its reverse; report the largest absolute difference.

    ``evaluate`` maps a link description to a number or an array. For
    matrix-valued channels the reverse result is transposed back before
    comparing.
    """
    fwd = evaluate(forward)
    rev = evaluate(reverse)
    a, b = np.asarray(fwd), np.asarray(rev)
    if a.ndim == 2:
        b = b.T
    return {"forward": fwd, "reverse": rev, "max_abs_diff": float(np.max(np.abs(a - b)))}


def path_loss_reciprocity(model, panel, scene, **params) -> dict:
    """Path loss of ``scene`` and of the same scene with Tx and Rx exchanged, same phase profile."""
    from .pathloss import evaluate

    def pl(sc):
        return evaluate(model, panel, sc, **params).path_loss_db
    return reciprocity_check(pl, scene, scene.swapped(panel))
