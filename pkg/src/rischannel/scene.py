"""Tx-RIS-Rx geometry.

Coordinates are meters in a right-handed global frame. The RIS panel is
described by its center and an orthonormal basis ``(x_axis, y_axis, normal)``;
elements are laid out on the ``x_axis``/``y_axis`` plane and reflect into the
half-space the ``normal`` points to.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT


class GeometryError(ValueError):
    """Raised for scenes that violate the panel geometry (e.g. Tx behind the RIS)."""


def wavelength(f: float) -> float:
    if f <= 0:
        raise ValueError(f"frequency must be positive, got {f}")
    return SPEED_OF_LIGHT / f


def as_point(p) -> np.ndarray:
    a = np.asarray(p, dtype=float).reshape(-1)
    if a.size == 2:
        a = np.append(a, 0.0)
    if a.size != 3 or not np.all(np.isfinite(a)):
        raise ValueError(f"expected a finite 3-vector, got {p!r}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RisPanel:
    """Rectangular RIS: ``m_count`` elements along the panel x axis, ``n_count`` along y.

    ``phase_profile`` is an ``(m_count, n_count)`` array in radians; ``None`` means
    all zeros. ``quantization_bits=None`` stands for continuous phases.
    """

    m_count: int
    n_count: int
    dx: float
    dy: float
    element_gain: Optional[float] = None
    pattern_exponent: float = 3.0
    amplitude: Union[float, np.ndarray] = 1.0
    efficiency: float = 1.0
    phase_profile: Optional[np.ndarray] = None
    quantization_bits: Optional[int] = None

    def __post_init__(self):
        if self.m_count < 1 or self.n_count < 1:
            raise ValueError("panel needs at least one element along each axis")
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError("element pitch must be positive")
        if self.pattern_exponent < 0:
            raise ValueError("pattern exponent q must be >= 0")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")
        amp = np.asarray(self.amplitude, dtype=float)
        if np.any(amp < 0) or np.any(amp > 1):
            raise ValueError("reflection amplitude must lie in [0, 1]")
        if amp.ndim and amp.shape != self.shape:
            raise ValueError(f"amplitude grid {amp.shape} does not match panel {self.shape}")
        if self.element_gain is None:
            # hemisphere-normalised cos^q pattern has directivity 2(q+1)
            object.__setattr__(self, "element_gain", 2.0 * (self.pattern_exponent + 1.0))
        if self.element_gain <= 0:
            raise ValueError("element gain must be positive")
        if self.quantization_bits is not None and int(self.quantization_bits) < 1:
            raise ValueError("quantization_bits must be a positive integer or None")
        if self.phase_profile is not None:
            ph = np.array(self.phase_profile, dtype=float)
            if ph.shape != self.shape:
                raise ValueError(f"phase profile {ph.shape} does not match panel {self.shape}")
            ph = np.mod(ph, 2 * np.pi)
            if self.quantization_bits is not None:
                step = 2 * np.pi / 2 ** int(self.quantization_bits)
                k = ph / step
                if not np.allclose(k, np.round(k), atol=1e-9):
                    raise ValueError("phase profile is not on the quantization grid")
            ph.setflags(write=False)
            object.__setattr__(self, "phase_profile", ph)

    @property
    def shape(self) -> tuple:
        return (self.m_count, self.n_count)

    @property
    def size(self) -> int:
        return self.m_count * self.n_count

    @property
    def width(self) -> float:
        return self.m_count * self.dx

    @property
    def height(self) -> float:
        return self.n_count * self.dy

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.width, self.height))

    @property
    def phases(self) -> np.ndarray:
        if self.phase_profile is None:
            return np.zeros(self.shape)
        return np.asarray(self.phase_profile)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.amplitude, dtype=float), self.shape)

    @property
    def reflection(self) -> np.ndarray:
        """Per-element reflection coefficient A*exp(j*phi)."""
        return self.amplitudes * np.exp(1j * self.phases)

    def with_phases(self, phases, quantization_bits="keep") -> "RisPanel":
        bits = self.quantization_bits if quantization_bits == "keep" else quantization_bits
        return replace(self, phase_profile=np.asarray(phases, dtype=float), quantization_bits=bits)

    def resized(self, m_count: int, n_count: int) -> "RisPanel":
        amp = self.amplitude if np.ndim(self.amplitude) == 0 else 1.0
        return replace(self, m_count=m_count, n_count=n_count, amplitude=amp, phase_profile=None)

    def element_offsets(self) -> tuple:
        """In-plane (u, v) offsets of element centers from the panel center, each ``(M, N)``."""
        m = np.arange(1, self.m_count + 1) - (self.m_count + 1) / 2
        n = np.arange(1, self.n_count + 1) - (self.n_count + 1) / 2
        u, v = np.meshgrid(m * self.dx, n * self.dy, indexing="ij")
        return u, v


@dataclass(frozen=True)
class Antenna:
    position: np.ndarray
    gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "position", as_point(self.position))
        if self.gain <= 0:
            raise ValueError("antenna gain must be positive (linear)")


@dataclass(frozen=True)
class RisPose:
    center: np.ndarray
    x_axis: np.ndarray
    y_axis: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        for name in ("center", "x_axis", "y_axis", "normal"):
            object.__setattr__(self, name, as_point(getattr(self, name)))
        basis = np.stack([self.x_axis, self.y_axis, self.normal])
        if not np.allclose(basis @ basis.T, np.eye(3), atol=1e-9):
            raise GeometryError("RIS pose basis must be orthonormal")

    @classmethod
    def facing(cls, center, normal, x_axis=None) -> "RisPose":
        """Pose from a center and an outward normal; ``x_axis`` defaults to a horizontal in-plane axis."""
        n = np.asarray(normal, dtype=float)
        n = n / np.linalg.norm(n)
        if x_axis is None:
            up = np.array([0.0, 0.0, 1.0])
            x = np.cross(up, n) if abs(n @ up) < 0.999 else np.array([1.0, 0.0, 0.0])
        else:
            x = np.asarray(x_axis, dtype=float)
        x = x - (x @ n) * n
        x = x / np.linalg.norm(x)
        y = np.cross(n, x)
        return cls(center=center, x_axis=x, y_axis=y, normal=n)


def _local(vec: np.ndarray, pose: RisPose) -> np.ndarray:
    return np.stack([vec @ pose.x_axis, vec @ pose.y_axis, vec @ pose.normal], axis=-1)


def _angles(local: np.ndarray) -> tuple:
    r = np.linalg.norm(local, axis=-1)
    theta = np.arccos(np.clip(local[..., 2] / r, -1.0, 1.0))
    phi = np.mod(np.arctan2(local[..., 1], local[..., 0]), 2 * np.pi)
    return r, theta, phi


@dataclass(frozen=True)
class Scene:
    """Derived geometry of one Tx-RIS-Rx configuration.

    Per-element arrays (``rt``, ``rr``, ``theta_t_elem``, ``theta_r_elem``) have
    the panel shape ``(M, N)``. Angles: elevation from the panel normal,
    azimuth in the panel plane from the panel x axis.
    """

    tx: Antenna
    rx: Antenna
    pose: RisPose
    frequency: float
    panel_shape: tuple
    d1: float
    d2: float
    d_tr: float
    theta_t: float
    phi_t: float
    theta_r: float
    phi_r: float
    rt: np.ndarray = field(repr=False)
    rr: np.ndarray = field(repr=False)
    theta_t_elem: np.ndarray = field(repr=False)
    theta_r_elem: np.ndarray = field(repr=False)
    element_positions: np.ndarray = field(repr=False)

    @property
    def wavelength(self) -> float:
        return wavelength(self.frequency)

    @property
    def gt(self) -> float:
        return self.tx.gain

    @property
    def gr(self) -> float:
        return self.rx.gain

    @property
    def theta_s(self) -> float:
        """Observation angle: where the receiver actually sits."""
        return self.theta_r

    def swapped(self, panel: "RisPanel") -> "Scene":
        return build_scene(self.rx, self.tx, panel, self.pose, self.frequency)


def build_scene(tx: Antenna, rx: Antenna, panel: RisPanel, pose: RisPose, f: float) -> Scene:
    if f <= 0:
        raise ValueError("carrier frequency must be positive")
    u, v = panel.element_offsets()
    elems = pose.center + u[..., None] * pose.x_axis + v[..., None] * pose.y_axis

    d1, theta_t, phi_t = _angles(_local(tx.position - pose.center, pose))
    d2, theta_r, phi_r = _angles(_local(rx.position - pose.center, pose))
    for name, th in (("Tx", theta_t), ("Rx", theta_r)):
        if not th < np.pi / 2:
            raise GeometryError(f"{name} is not in front of the RIS (theta={np.degrees(th):.2f} deg)")

    rt, tht_e, _ = _angles(_local(tx.position - elems, pose))
    rr, thr_e, _ = _angles(_local(rx.position - elems, pose))
    if np.any(rt <= 0) or np.any(rr <= 0):
        raise GeometryError("Tx/Rx coincides with an RIS element")
    d_tr = float(np.linalg.norm(rx.position - tx.position))
    if d_tr <= 0:
        raise GeometryError("Tx and Rx coincide")

    for a in (rt, rr, tht_e, thr_e, elems):
        a.setflags(write=False)
    return Scene(
        tx=tx, rx=rx, pose=pose, frequency=float(f), panel_shape=panel.shape,
        d1=float(d1), d2=float(d2), d_tr=d_tr,
        theta_t=float(theta_t), phi_t=float(phi_t),
        theta_r=float(theta_r), phi_r=float(phi_r),
        rt=rt, rr=rr, theta_t_elem=tht_e, theta_r_elem=thr_e,
        element_positions=elems,
    )


def scene_from_angles(panel: RisPanel, f: float, d1: float, d2: float,
                      theta_t: float, theta_r: float, gt: float = 1.0, gr: float = 1.0,
                      phi_t: float = np.pi, phi_r: float = 0.0) -> Scene:
    """Scene with the RIS at the origin facing +z and Tx/Rx placed by distance and angle.

    The defaults put Tx and Rx on opposite sides of the normal in the x-z plane,
    i.e. the usual reflection geometry with ``theta_r == theta_t`` being specular.
    """
    def at(d, th, ph):
        return d * np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])

    pose = RisPose(center=np.zeros(3), x_axis=[1, 0, 0], y_axis=[0, 1, 0], normal=[0, 0, 1])
    return build_scene(Antenna(at(d1, theta_t, phi_t), gt), Antenna(at(d2, theta_r, phi_r), gr),
                       panel, pose, f)


class Region(str, Enum):
    NEAR = "NEAR"
    FAR = "FAR"


@dataclass(frozen=True)
class FieldRegion:
    region: Region
    rayleigh_distance: float


def rayleigh_distance(panel: RisPanel, f: float) -> float:
    return 2.0 * panel.diagonal ** 2 / wavelength(f)


def classify_field_region(panel: RisPanel, distance: float, f: float) -> FieldRegion:
    if distance <= 0:
        raise ValueError("distance must be positive")
    rd = rayleigh_distance(panel, f)
    # boundary counts as near field
    return FieldRegion(Region.FAR if distance > rd else Region.NEAR, rd)


def ellipse_sweep_positions(d: float, a: float, steps: int,
                            d1_range: Optional[Sequence[float]] = None) -> np.ndarray:
    """RIS centers on the ellipse with foci at Tx=(-d/2, 0, 0) and Rx=(d/2, 0, 0).

    Returns ``(steps, 3)`` positions in the upper half plane (y > 0) whose
    Tx distance runs linearly over ``d1_range`` (default: from the vertex
    nearest Tx, ``a - d/2``, to the co-vertex, ``a``).
    """
    if a <= d / 2:
        raise GeometryError(f"degenerate ellipse: semi-major axis {a} must exceed half the focal distance {d / 2}")
    if steps < 2:
        raise ValueError("steps must be >= 2")
    c = d / 2
    lo, hi = d1_range if d1_range is not None else (a - c, a)
    if not (a - c <= lo <= a + c and a - c <= hi <= a + c):
        raise GeometryError(f"d1 range [{lo}, {hi}] is outside the reachable [{a - c}, {a + c}]")
    d1 = np.linspace(lo, hi, steps)
    d2 = 2 * a - d1
    x = (d1 ** 2 - d2 ** 2) / (4 * c)
    y = np.sqrt(np.clip(d1 ** 2 - (x + c) ** 2, 0.0, None))
    return np.column_stack([x, y, np.zeros_like(x)])
