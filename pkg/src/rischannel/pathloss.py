"""Large-scale RIS path-loss models.

Every model returns path loss as a positive-is-loss dB value. Models built
on a coherent element sum report the sum itself in ``coherent_sum``; a sum
that cancels exactly gives ``+inf`` dB with ``cancelled=True`` instead of
raising, so sweeps survive pathological phase profiles.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .beam import combined_pattern, direction, element_pattern
from .scene import FieldRegion, Region, RisPanel, Scene, classify_field_region, wavelength

PI = np.pi


class Model(str, Enum):
    FREE_SPACE = "FREE_SPACE"
    TWO_RAY_RIS = "TWO_RAY_RIS"
    PO_FAR_FIELD = "PO_FAR_FIELD"
    TANG_GENERAL = "TANG_GENERAL"
    TANG_FAR_BF = "TANG_FAR_BF"
    TANG_NEAR_BF = "TANG_NEAR_BF"
    TANG_NEAR_BC = "TANG_NEAR_BC"
    REFINED_FAR = "REFINED_FAR"
    REFINED_NEAR = "REFINED_NEAR"
    SINGLE_ELEMENT = "SINGLE_ELEMENT"
    ELLINGSON = "ELLINGSON"
    TILE_RCS = "TILE_RCS"


@dataclass(frozen=True)
class PathLossResult:
    path_loss_db: float
    tx_power_dbm: float = 0.0
    coherent_sum: Optional[complex] = None
    field_region_used: Optional[FieldRegion] = None
    cancelled: bool = False

    @property
    def received_power_dbm(self) -> float:
        return self.tx_power_dbm - self.path_loss_db


def lin2db(x):
    """Power ratio to dB; zero maps to -inf without a warning."""
    with np.errstate(divide="ignore"):
        return 10 * np.log10(x)


def db2lin(x):
    return 10 ** (np.asarray(x, dtype=float) / 10)


# sums below this fraction of the incoherent magnitude count as cancelled
CANCEL_TOL = 1e-12


def _loss_db(prefactor: float, coherent: complex, scale: float = 0.0) -> tuple:
    """``prefactor * |coherent|^-2`` in dB, flagged when the sum cancels.

    ``scale`` is the sum of term magnitudes; a coherent sum within
    rounding of zero relative to it is treated as exact cancellation.
    """
    mag2 = abs(coherent) ** 2
    if mag2 <= (CANCEL_TOL * scale) ** 2 or not np.isfinite(mag2):
        return float("inf"), True
    return float(lin2db(prefactor) - lin2db(mag2)), False


def _region(panel: RisPanel, scene: Scene) -> FieldRegion:
    return classify_field_region(panel, min(scene.d1, scene.d2), scene.frequency)


def free_space_path_loss(d: float, f: float, gt: float = 1.0, gr: float = 1.0) -> float:
    if d <= 0:
        raise ValueError("distance must be positive")
    lam = wavelength(f)
    return float(lin2db((4 * PI * d / lam) ** 2 / (gt * gr)))


def two_ray_ris_received_power(q_elements: int, d_tr: float, f: float, tx_power: float = 0.0) -> float:
    """Received power (dBm) of the ground-laid RIS two-ray approximation, growing as (Q+1)^2."""
    if q_elements < 0:
        raise ValueError("element count must be >= 0")
    if d_tr <= 0:
        raise ValueError("distance must be positive")
    lam = wavelength(f)
    return float(tx_power + 20 * np.log10(q_elements + 1) + 20 * np.log10(lam / (4 * PI * d_tr)))


def sinc(x):
    """sin(x)/x with a series guard near zero."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-6
    safe = np.where(small, 1.0, x)
    out = np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)


def po_far_field_path_loss(d1, d2, a, b, theta_i, theta_s, theta_r, gt=1.0, gr=1.0, f=None) -> float:
    """Physical-optics far-field loss of an ``a x b`` plate.

    The sinc enters to the first power, exactly as the model is usually
    quoted; where it is non-positive (past the first null) the loss is
    reported as ``+inf``. ``f`` is only needed when ``theta_s != theta_r``.
    """
    if min(d1, d2, a, b) <= 0:
        raise ValueError("distances and plate sides must be positive")
    s = 1.0
    if theta_s != theta_r:
        if f is None:
            raise ValueError("frequency needed for off-design observation")
        s = sinc(PI * b / wavelength(f) * (np.sin(theta_s) - np.sin(theta_r)))
    denom = gt * gr * (a * b) ** 2 * np.cos(theta_i) ** 2 * s
    if denom <= 0:
        return float("inf")
    return float(lin2db((4 * PI * d1 * d2) ** 2 / denom))


def _pattern(panel: RisPanel, scene: Scene) -> np.ndarray:
    return combined_pattern(scene, panel.pattern_exponent)


def tang_general_path_loss(panel: RisPanel, scene: Scene, tx_power_dbm: float = 0.0) -> PathLossResult:
    lam = scene.wavelength
    terms = (np.sqrt(_pattern(panel, scene)) * panel.reflection
             * np.exp(-2j * PI * (scene.rt + scene.rr) / lam) / (scene.rt * scene.rr))
    total = complex(terms.sum())
    pre = 64 * PI ** 3 / (scene.gt * scene.gr * panel.element_gain * panel.dx * panel.dy * lam ** 2)
    pl, bad = _loss_db(pre, total, float(np.abs(terms).sum()))
    return PathLossResult(pl, tx_power_dbm, total, _region(panel, scene), bad)


def _mean_amplitude(panel: RisPanel) -> float:
    return float(np.mean(panel.amplitudes))


def tang_case_path_loss(case: str, panel: RisPanel, scene: Scene, tx_power_dbm: float = 0.0) -> PathLossResult:
    """Closed forms of the far-field beamforming, near-field beamforming and near-field broadcasting cases."""
    case = case.upper().replace("TANG_", "")
    lam = scene.wavelength
    A = _mean_amplitude(panel)
    G = panel.element_gain
    region = _region(panel, scene)
    gtgr = scene.gt * scene.gr
    if case == "FAR_BF":
        if region.region is not Region.FAR:
            warnings.warn("far-field beamforming model used inside the Rayleigh distance", stacklevel=2)
        q = panel.pattern_exponent
        F = element_pattern(scene.theta_t, q) * element_pattern(scene.theta_r, q)
        denom = gtgr * G * panel.size ** 2 * panel.dx * panel.dy * lam ** 2 * F * A ** 2
        if denom <= 0:
            return PathLossResult(float("inf"), tx_power_dbm, None, region, True)
        return PathLossResult(float(lin2db(64 * PI ** 3 * (scene.d1 * scene.d2) ** 2 / denom)),
                              tx_power_dbm, None, region)
    if case == "NEAR_BF":
        total = complex(np.sum(np.sqrt(_pattern(panel, scene)) / (scene.rt * scene.rr)))
        pre = 64 * PI ** 3 / (gtgr * G * panel.dx * panel.dy * lam ** 2 * A ** 2) if A > 0 else float("inf")
        pl, bad = _loss_db(pre, total) if A > 0 else (float("inf"), True)
        return PathLossResult(pl, tx_power_dbm, total, region, bad)
    if case == "NEAR_BC":
        if A == 0:
            return PathLossResult(float("inf"), tx_power_dbm, None, region, True)
        pl = lin2db(16 * PI ** 2 * (scene.d1 + scene.d2) ** 2 / (gtgr * lam ** 2 * A ** 2))
        return PathLossResult(float(pl), tx_power_dbm, None, region)
    raise ValueError(f"unknown case {case!r}")


def refined_path_loss(case: str, panel: RisPanel, scene: Scene, tx_power_dbm: float = 0.0,
                      element=None, gamma=None) -> PathLossResult:
    """Refined far-field, near-field and single-element closed forms.

    ``element`` is an ``(m, n)`` index (0-based) and ``gamma`` its reflection
    coefficient; both only matter for ``SINGLE_ELEMENT`` and default to the
    center element and the panel's own coefficient.
    """
    case = case.upper().replace("REFINED_", "")
    lam = scene.wavelength
    region = _region(panel, scene)
    gtgr = scene.gt * scene.gr
    dxdy = panel.dx * panel.dy
    if case == "FAR":
        q = panel.pattern_exponent
        F = element_pattern(scene.theta_t, q) * element_pattern(scene.theta_r, q)
        A = _mean_amplitude(panel)
        denom = gtgr * panel.element_gain * (panel.size * dxdy) ** 2 * F * A ** 2
        if denom <= 0:
            return PathLossResult(float("inf"), tx_power_dbm, None, region, True)
        return PathLossResult(float(lin2db(16 * PI ** 2 * (scene.d1 * scene.d2) ** 2 / denom)),
                              tx_power_dbm, None, region)
    if case == "NEAR":
        total = complex(np.sum(np.sqrt(_pattern(panel, scene)) / (scene.rt * scene.rr)))
        pl, bad = _loss_db(16 * PI ** 2 / (gtgr * dxdy ** 2), total)
        return PathLossResult(pl, tx_power_dbm, total, region, bad)
    if case in ("SINGLE_ELEMENT", "ELEMENT"):
        if element is None:
            element = ((panel.m_count - 1) // 2, (panel.n_count - 1) // 2)
        m, n = element
        if gamma is None:
            gamma = panel.reflection[m, n]
        rt, rr = scene.rt[m, n], scene.rr[m, n]
        F = _pattern(panel, scene)[m, n]
        denom = gtgr * dxdy ** 2 * F * abs(gamma) ** 2
        if denom <= 0:
            return PathLossResult(float("inf"), tx_power_dbm, None, region, True)
        return PathLossResult(float(lin2db(16 * PI ** 2 * (rt * rr) ** 2 / denom)), tx_power_dbm, None, region)
    raise ValueError(f"unknown case {case!r}")


def single_element_path_loss(panel: RisPanel, scene: Scene, element=None, gamma=None,
                             tx_power_dbm: float = 0.0) -> PathLossResult:
    return refined_path_loss("SINGLE_ELEMENT", panel, scene, tx_power_dbm, element, gamma)


def ellingson_path_loss(panel: RisPanel, scene: Scene, amplitudes=None, phases=None,
                        tx_power_dbm: float = 0.0) -> PathLossResult:
    """Power-efficiency model summing ``A_n sqrt(G_t G_r) e^{j phi_n} / (d1n d2n)``.

    ``phases`` are taken as the total per-element phase; no propagation term
    is added, so "co-phased" means equal ``phases``. Element gain patterns
    are ``G * F(theta)`` at each element's own incidence/departure angle.
    """
    A = panel.amplitudes if amplitudes is None else np.broadcast_to(np.asarray(amplitudes, float), panel.shape)
    ph = panel.phases if phases is None else np.broadcast_to(np.asarray(phases, float), panel.shape)
    q = panel.pattern_exponent
    g_in = panel.element_gain * element_pattern(scene.theta_t_elem, q)
    g_out = panel.element_gain * element_pattern(scene.theta_r_elem, q)
    terms = A * np.sqrt(g_in * g_out) * np.exp(1j * ph) / (scene.rt * scene.rr)
    total = complex(np.sum(terms))
    pl, bad = _loss_db(256 * PI ** 4 / (panel.efficiency * scene.gt * scene.gr), total, float(np.abs(terms).sum()))
    return PathLossResult(pl, tx_power_dbm, total, _region(panel, scene), bad)


def tile_rcs_path_loss(tile_response_g: complex, d1: float, d2: float, f: float) -> float:
    """Loss of the tile/RCS link: the inverse of ``4pi|g|^2/lambda^2 * PL_t * PL_r``."""
    if d1 <= 0 or d2 <= 0:
        raise ValueError("distances must be positive")
    lam = wavelength(f)
    g2 = abs(tile_response_g) ** 2
    if g2 == 0:
        return float("inf")
    gain = 4 * PI * g2 / lam ** 2 * (lam / (4 * PI * d1)) ** 2 * (lam / (4 * PI * d2)) ** 2
    return float(-lin2db(gain))


def tile_response(panel: RisPanel, scene: Scene) -> complex:
    """Far-field tile response (effective length, m) consistent with :func:`tile_rcs_path_loss`.

    Chosen so that |g|^2 = G F dx dy |sum Gamma e^{j psi}|^2, which makes the
    tile model coincide with the far-field beamforming closed form (at unit
    Tx/Rx gains) for a co-phased panel.
    """
    q = panel.pattern_exponent
    du, dv = panel.element_offsets()
    k = 2 * PI / scene.wavelength
    s = direction(scene.theta_t, scene.phi_t) + direction(scene.theta_r, scene.phi_r)
    psi = k * (du * s[0] + dv * s[1])
    F = element_pattern(scene.theta_t, q) * element_pattern(scene.theta_r, q)
    af = np.sum(panel.reflection * np.exp(1j * psi))
    return complex(np.sqrt(panel.element_gain * panel.dx * panel.dy * F) * af)


def evaluate(model, panel: Optional[RisPanel] = None, scene: Optional[Scene] = None,
             tx_power_dbm: float = 0.0, **params) -> PathLossResult:
    """Dispatch on a model selector; scene-based models take distances/angles from ``scene``."""
    model = Model(model)
    if model is Model.FREE_SPACE:
        d = params.get("d", None if scene is None else scene.d_tr)
        f = params.get("f", None if scene is None else scene.frequency)
        gt = params.get("gt", 1.0 if scene is None else scene.gt)
        gr = params.get("gr", 1.0 if scene is None else scene.gr)
        return PathLossResult(free_space_path_loss(d, f, gt, gr), tx_power_dbm)
    if model is Model.TWO_RAY_RIS:
        q = params.get("q_elements", None if panel is None else panel.size)
        d = params.get("d_tr", None if scene is None else scene.d_tr)
        f = params.get("f", None if scene is None else scene.frequency)
        pr = two_ray_ris_received_power(q, d, f, tx_power_dbm)
        return PathLossResult(tx_power_dbm - pr, tx_power_dbm)
    if model is Model.PO_FAR_FIELD:
        a = params.get("a", None if panel is None else panel.width)
        b = params.get("b", None if panel is None else panel.height)
        theta_r = params.get("theta_r", scene.theta_r)
        pl = po_far_field_path_loss(scene.d1, scene.d2, a, b, scene.theta_t, scene.theta_s, theta_r,
                                    scene.gt, scene.gr, scene.frequency)
        return PathLossResult(pl, tx_power_dbm, None, None, not np.isfinite(pl))
    if model is Model.TILE_RCS:
        g = params.get("g")
        if g is None:
            g = tile_response(panel, scene)
        pl = tile_rcs_path_loss(g, scene.d1, scene.d2, scene.frequency)
        return PathLossResult(pl, tx_power_dbm, None, None, not np.isfinite(pl))
    if panel is None or scene is None:
        raise ValueError(f"{model.value} needs a panel and a scene")
    if model is Model.TANG_GENERAL:
        return tang_general_path_loss(panel, scene, tx_power_dbm)
    if model in (Model.TANG_FAR_BF, Model.TANG_NEAR_BF, Model.TANG_NEAR_BC):
        return tang_case_path_loss(model.value, panel, scene, tx_power_dbm)
    if model in (Model.REFINED_FAR, Model.REFINED_NEAR):
        return refined_path_loss(model.value, panel, scene, tx_power_dbm)
    if model is Model.SINGLE_ELEMENT:
        return refined_path_loss("SINGLE_ELEMENT", panel, scene, tx_power_dbm,
                                 params.get("element"), params.get("gamma"))
    if model is Model.ELLINGSON:
        return ellingson_path_loss(panel, scene, params.get("amplitudes"), params.get("phases"), tx_power_dbm)
    raise ValueError(model)  # pragma: no cover
