"""Element radiation pattern, RIS phase-profile design/quantization and array-factor HPBW."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .scene import RisPanel, Scene, wavelength

TWO_PI = 2 * np.pi


def element_pattern(theta, q: float = 3.0):
    """Normalised power pattern ``cos(theta)**q`` on the front hemisphere, zero behind."""
    if q < 0:
        raise ValueError("q must be >= 0")
    theta = np.asarray(theta, dtype=float)
    out = np.where(theta < np.pi / 2, np.cos(np.clip(theta, 0, np.pi / 2)) ** q, 0.0)
    return out if out.ndim else float(out)


def combined_pattern(scene: Scene, q: float) -> np.ndarray:
    """Per-element F(incidence) * F(departure)."""
    return element_pattern(scene.theta_t_elem, q) * element_pattern(scene.theta_r_elem, q)


@dataclass(frozen=True)
class PhaseProfileSpec:
    kind: str
    value: float = 0.0
    theta_r: Optional[float] = None
    phi_r: Optional[float] = None
    target: Optional[tuple] = None
    seed: Optional[int] = None
    values: Optional[np.ndarray] = None
    quantization_bits: Optional[int] = None

    KINDS = ("UNIFORM", "FAR_FIELD_BEAM", "NEAR_FIELD_FOCUS", "RANDOM", "CUSTOM")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown phase profile kind {self.kind!r}")
        if self.kind == "FAR_FIELD_BEAM":
            if self.theta_r is None or not 0 <= self.theta_r < np.pi / 2:
                raise ValueError("FAR_FIELD_BEAM needs theta_r in [0, pi/2)")
        if self.kind == "RANDOM" and self.seed is None:
            raise ValueError("RANDOM profile needs a seed")
        if self.kind == "CUSTOM" and self.values is None:
            raise ValueError("CUSTOM profile needs values")

    @classmethod
    def uniform(cls, value=0.0, bits=None):
        return cls("UNIFORM", value=value, quantization_bits=bits)

    @classmethod
    def far_field_beam(cls, theta_r, phi_r=0.0, bits=None):
        return cls("FAR_FIELD_BEAM", theta_r=theta_r, phi_r=phi_r, quantization_bits=bits)

    @classmethod
    def near_field_focus(cls, target=None, bits=None):
        return cls("NEAR_FIELD_FOCUS", target=None if target is None else tuple(target), quantization_bits=bits)

    @classmethod
    def random(cls, seed, bits=None):
        return cls("RANDOM", seed=seed, quantization_bits=bits)

    @classmethod
    def custom(cls, values, bits=None):
        return cls("CUSTOM", values=np.asarray(values, dtype=float), quantization_bits=bits)


def direction(theta, phi) -> np.ndarray:
    return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def design_phase_profile(spec: PhaseProfileSpec, panel: RisPanel, scene: Optional[Scene] = None) -> np.ndarray:
    """Phase grid in ``[0, 2pi)`` of shape ``(M, N)`` for the requested profile."""
    kind = spec.kind
    if kind == "UNIFORM":
        phases = np.full(panel.shape, float(spec.value))
    elif kind == "RANDOM":
        # one child stream per element index, so any subset can be regenerated alone
        idx = np.arange(panel.size)
        phases = np.array([np.random.default_rng([int(spec.seed), int(i)]).uniform(0.0, TWO_PI)
                           for i in idx]).reshape(panel.shape)
    elif kind == "CUSTOM":
        phases = np.asarray(spec.values, dtype=float)
        if phases.shape != panel.shape:
            raise ValueError(f"custom profile {phases.shape} does not match panel {panel.shape}")
    elif kind == "NEAR_FIELD_FOCUS":
        if scene is None:
            raise ValueError("NEAR_FIELD_FOCUS needs a scene")
        if spec.target is None:
            r_out = scene.rr
        else:
            r_out = np.linalg.norm(scene.element_positions - np.asarray(spec.target, dtype=float), axis=-1)
        phases = TWO_PI * (scene.rt + r_out) / scene.wavelength
    elif kind == "FAR_FIELD_BEAM":
        if scene is None:
            raise ValueError("FAR_FIELD_BEAM needs a scene (for the incidence direction)")
        u_sum = direction(scene.theta_t, scene.phi_t) + direction(spec.theta_r, spec.phi_r or 0.0)
        du, dv = panel.element_offsets()
        k = TWO_PI / scene.wavelength
        # cancels the plane-wave phase k * p.(u_in + u_out) across the aperture
        phases = -k * (du * u_sum[0] + dv * u_sum[1])
    else:  # pragma: no cover - guarded in PhaseProfileSpec
        raise ValueError(kind)
    phases = np.mod(phases, TWO_PI)
    if spec.quantization_bits is not None:
        phases = quantize_phase_profile(phases, spec.quantization_bits)
    return phases


def quantize_phase_profile(phases, bits):
    """Snap phases to the nearest multiple of ``2pi / 2**bits``; exact ties go to the smaller multiple.

    ``bits=None`` (or ``"continuous"``) returns the phases unchanged.
    """
    phases = np.asarray(phases, dtype=float)
    if bits is None or bits == "continuous":
        return phases.copy()
    bits = int(bits)
    if bits < 1:
        raise ValueError("bits must be >= 1")
    levels = 2 ** bits
    step = TWO_PI / levels
    k = np.ceil(np.mod(phases, TWO_PI) / step - 0.5)
    return np.mod(k, levels) * step


def quantization_efficiency(bits) -> float:
    """Expected coherent amplitude factor |E[exp(j*err)]| for uniform quantisation error."""
    if bits is None:
        return 1.0
    x = np.pi / 2 ** int(bits)
    return float(np.sin(x) / x)


@dataclass
class BeamPattern:
    angles: np.ndarray      # observation angles, radians (signed, in the panel x-z plane)
    power: np.ndarray       # |array factor|^2, linear
    hpbw_deg: float
    peak_angle: float

    @property
    def power_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10 * np.log10(self.power / self.power.max())


class NoMainLobeError(ValueError):
    pass


def _hpbw(angles: np.ndarray, power: np.ndarray) -> tuple:
    i0 = int(np.argmax(power))
    half = power[i0] / 2
    if not np.any(power >= half):  # pragma: no cover - argmax always qualifies
        raise NoMainLobeError("no lobe above -3 dB")
    lo = i0
    while lo > 0 and power[lo - 1] >= half:
        lo -= 1
    hi = i0
    while hi < len(power) - 1 and power[hi + 1] >= half:
        hi += 1
    if lo == 0 or hi == len(power) - 1:
        raise NoMainLobeError("main lobe is not closed inside the scan range")

    def cross(a, b):
        # linear interpolation of the -3 dB crossing between samples a (below) and b (above)
        t = (half - power[a]) / (power[b] - power[a])
        return angles[a] + t * (angles[b] - angles[a])

    left = cross(lo - 1, lo)
    right = cross(hi + 1, hi)
    return float(np.degrees(right - left)), float(angles[i0])


def array_factor_and_hpbw(panel: RisPanel, phases, theta_t: float, f: float,
                          scan=None, resolution_deg: float = 0.01,
                          weights=None) -> BeamPattern:
    """Reflected far-field pattern of the panel in its x-z plane.

    The incident plane wave arrives from signed angle ``theta_t`` (positive
    toward +x). Observation angles are signed the same way, so a uniform
    profile reflects specularly toward ``-theta_t``. ``theta_t=None`` drops
    the incident-phase term, giving a plain transmit array with the same
    weights.
    """
    if resolution_deg > 0.05:
        raise ValueError("scan grid resolution must be <= 0.05 deg")
    if scan is None:
        scan = (-90.0, 90.0)
    angles = np.radians(np.arange(scan[0], scan[1] + resolution_deg / 2, resolution_deg))
    k = TWO_PI / wavelength(f)
    du, dv = panel.element_offsets()
    w = panel.amplitudes if weights is None else np.asarray(weights)
    w = w * np.exp(1j * np.asarray(phases, dtype=float))
    # y offsets contribute a constant in the x-z plane; collapse to a line along x
    x = du[:, 0]
    w_line = w.sum(axis=1)
    s = np.sin(angles)
    if theta_t is not None:
        s = s + np.sin(theta_t)
    af = np.exp(1j * k * np.outer(s, x)) @ w_line
    power = np.abs(af) ** 2
    hpbw, peak = _hpbw(angles, power)
    return BeamPattern(angles=angles, power=power, hpbw_deg=hpbw, peak_angle=peak)


def steering_phases(panel: RisPanel, f: float, theta_out: float, theta_in: Optional[float] = None) -> np.ndarray:
    """Linear (MRC-style) phase gradient pointing the x-z plane beam to ``theta_out``.

    With ``theta_in`` the incident gradient is cancelled as well (RIS case);
    without it this is the ordinary phased-array steering vector.
    """
    k = TWO_PI / wavelength(f)
    du, _ = panel.element_offsets()
    s = np.sin(theta_out) + (np.sin(theta_in) if theta_in is not None else 0.0)
    return np.mod(-k * du * s, TWO_PI)
