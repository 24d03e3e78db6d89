"""Experiment runners: turn a validated config into a :class:`ResultTable`."""
from __future__ import annotations

from typing import Callable, Dict, Optional

import numpy as np
from scipy.special import j0

from . import __version__
from .beam import PhaseProfileSpec, design_phase_profile
from .config import SCALAR_MODELS, ExperimentConfig
from .estimation import EstimatorConfig, rmsee_sweep
from .output import ResultTable
from .pathloss import Model, evaluate, free_space_path_loss, two_ray_ris_received_power
from .scene import (Antenna, RisPanel, RisPose, build_scene, ellipse_sweep_positions, scene_from_angles,
                    wavelength)
from .smallscale import (FadingScenario, Ray, channel_metrics, hardening_statistics, rayleigh_links,
                         ring_scenario, ris_scenario, simulate_time_varying_channel, temporal_acf, unit_links)


class ExperimentError(RuntimeError):
    pass


def db_to_lin(x) -> float:
    return float(10 ** (x / 10))


# --- config blocks to objects -----------------------------------------------

def make_panel(block: dict, f: float) -> RisPanel:
    lam = wavelength(f)
    if "pitch_wavelengths" in block:
        dx = dy = block["pitch_wavelengths"] * lam
    else:
        dx, dy = block["dx_m"], block["dy_m"]
    bits = block.get("quantization_bits", "continuous")
    return RisPanel(int(block["m"]), int(block["n"]), float(dx), float(dy),
                    element_gain=block.get("element_gain"), pattern_exponent=float(block.get("q", 3.0)),
                    amplitude=float(block.get("amplitude", 1.0)), efficiency=float(block.get("efficiency", 1.0)),
                    quantization_bits=None if bits == "continuous" else int(bits))


def make_profile(block: dict, default_bits=None) -> PhaseProfileSpec:
    bits = block.get("quantization_bits", default_bits)
    bits = None if bits in (None, "continuous") else int(bits)
    kind = block["kind"]
    if kind == "UNIFORM":
        return PhaseProfileSpec.uniform(np.radians(block.get("value_deg", 0.0)), bits)
    if kind == "FAR_FIELD_BEAM":
        if "theta_r_deg" not in block:
            raise ExperimentError("FAR_FIELD_BEAM profile needs theta_r_deg")
        return PhaseProfileSpec.far_field_beam(np.radians(block["theta_r_deg"]),
                                               np.radians(block.get("phi_r_deg", 0.0)), bits)
    if kind == "NEAR_FIELD_FOCUS":
        return PhaseProfileSpec.near_field_focus(block.get("target_m"), bits)
    if kind == "RANDOM":
        if "seed" not in block:
            raise ExperimentError("RANDOM profile needs seed")
        return PhaseProfileSpec.random(block["seed"], bits)
    if "values_deg" not in block:
        raise ExperimentError("CUSTOM profile needs values_deg")
    return PhaseProfileSpec.custom(np.radians(np.asarray(block["values_deg"], float)), bits)


def make_scene(block: dict, panel: RisPanel):
    f = block["frequency_hz"]
    if "tx" in block:
        ris = block["ris"]
        pose = RisPose.facing(ris["center_m"], ris["normal"], ris.get("x_axis"))
        tx = Antenna(block["tx"]["position_m"], db_to_lin(block["tx"].get("gain_dbi", 0.0)))
        rx = Antenna(block["rx"]["position_m"], db_to_lin(block["rx"].get("gain_dbi", 0.0)))
        return build_scene(tx, rx, panel, pose, f)
    return scene_from_angles(panel, f, block["d1_m"], block["d2_m"], np.radians(block["incidence_deg"]),
                             np.radians(block["reflect_deg"]), db_to_lin(block.get("gt_dbi", 0.0)),
                             db_to_lin(block.get("gr_dbi", 0.0)))


def with_profile(panel: RisPanel, scene, block: Optional[dict]) -> RisPanel:
    if block is None:
        return panel
    spec = make_profile(block, panel.quantization_bits)
    return panel.with_phases(design_phase_profile(spec, panel, scene), spec.quantization_bits)


def _model_params(model: dict) -> dict:
    params = {}
    if "plate_m" in model:
        params["a"], params["b"] = model["plate_m"]
    if "tile_g" in model:
        params["g"] = complex(*model["tile_g"])
    if "element" in model:
        params["element"] = tuple(model["element"])
    return params


def _region_label(res) -> str:
    return res.field_region_used.region.value if res.field_region_used is not None else "n/a"


# --- experiments ------------------------------------------------------------

def run_pathloss(cfg: ExperimentConfig) -> ResultTable:
    m = cfg.model
    p_tx = m["tx_power_dbm"]
    table = ResultTable.from_columns([("model", "label"), ("path_loss", "dB"), ("received_power", "dBm"),
                                      ("field_region", "label")])
    panel = scene = None
    if cfg.scene is not None and cfg.panel is not None:
        panel = make_panel(cfg.panel, cfg.scene["frequency_hz"])
        scene = make_scene(cfg.scene, panel)
        panel = with_profile(panel, scene, cfg.panel.get("phase_profile"))
    for name in m["models"]:
        if name in SCALAR_MODELS and scene is None:
            f = m["frequency_hz"]
            if name == "FREE_SPACE":
                pl = free_space_path_loss(m["d_m"], f, db_to_lin(m.get("gt_dbi", 0.0)),
                                          db_to_lin(m.get("gr_dbi", 0.0)))
            else:
                pl = p_tx - two_ray_ris_received_power(m.get("q_elements", 0), m["d_m"], f, p_tx)
            table.add(name, pl, p_tx - pl, "n/a")
            continue
        params = _model_params(m)
        if name == "FREE_SPACE" and "d_m" in m:
            params["d"] = m["d_m"]
        if name == "TWO_RAY_RIS" and "q_elements" in m:
            params["q_elements"] = m["q_elements"]
        res = evaluate(Model(name), panel, scene, p_tx, **params)
        table.add(name, res.path_loss_db, res.received_power_dbm, _region_label(res))
    return table


def ellipse_scenes(cfg: ExperimentConfig, panel: RisPanel):
    """Yield ``(d1, scene)`` along the ellipse sweep; Tx and Rx sit on the foci."""
    sc, sw = cfg.scene, cfg.sweep
    d = sc.get("d_tr_m", 200.0)
    c = d / 2
    gt, gr = db_to_lin(sc.get("gt_dbi", 0.0)), db_to_lin(sc.get("gr_dbi", 0.0))
    pos = ellipse_sweep_positions(d, sw["semi_major_m"], sw["steps"], (sw["start"], sw["stop"]))
    tx, rx = Antenna([-c, 0, 0], gt), Antenna([c, 0, 0], gr)
    for p in pos:
        # panel in the x-z plane, facing the foci on the x axis
        pose = RisPose.facing(p, [0, -1, 0], x_axis=[1, 0, 0])
        scene = build_scene(tx, rx, panel, pose, sc["frequency_hz"])
        yield scene.d1, scene


def run_sweep_ellipse(cfg: ExperimentConfig) -> ResultTable:
    models = cfg.model["models"]
    p_tx = cfg.model["tx_power_dbm"]
    base = make_panel(cfg.panel, cfg.scene["frequency_hz"])
    table = ResultTable.from_columns([("d1", "m")] + [(f"path_loss_{n}", "dB") for n in models])
    params = _model_params(cfg.model)
    for d1, scene in ellipse_scenes(cfg, base):
        panel = with_profile(base, scene, cfg.panel.get("phase_profile"))
        row = [d1]
        for name in models:
            row.append(evaluate(Model(name), panel, scene, p_tx, **params).path_loss_db)
        table.add(*row)
    return table


def run_phase_gain(cfg: ExperimentConfig) -> ResultTable:
    p_tx = cfg.model["tx_power_dbm"]
    base = make_panel(cfg.panel, cfg.scene["frequency_hz"])
    scene = make_scene(cfg.scene, base)
    params = _model_params(cfg.model)
    table = ResultTable.from_columns([("profile", "label"), ("model", "label"), ("path_loss", "dB"),
                                      ("received_power", "dBm")])
    for block in cfg.model["profiles"]:
        panel = with_profile(base, scene, block)
        label = block.get("label", block["kind"])
        for name in cfg.model["models"]:
            res = evaluate(Model(name), panel, scene, p_tx, **params)
            table.add(label, name, res.path_loss_db, res.received_power_dbm)
    return table


def make_fading(block: dict, seed: int, **overrides) -> FadingScenario:
    kw = dict(heading=np.radians(block["heading_deg"]), snapshots=block["snapshots"], runs=block["runs"],
              sample_interval=block.get("sample_interval_s"), seed=seed)
    kw.update(overrides)
    f, v = block["frequency_hz"], block["speed_mps"]
    if block["preset"] == "ring":
        return ring_scenario(f, v, block.get("n_rays", 64), **kw)
    if block["preset"] == "ris":
        return ris_scenario(f, v, k_factor=block.get("k_factor"), **kw)
    rays = tuple(Ray(r["power"], np.radians(r["aoa_deg"]), r.get("delay_s", 0.0), r.get("ris", False),
                     r.get("los", False)) for r in block["rays"])
    return FadingScenario(f, v, rays, k_factor=block.get("k_factor"), **kw)


def run_acf(cfg: ExperimentConfig) -> ResultTable:
    fb = cfg.model["fading"]
    on = make_fading(fb, cfg.seed, ris_tracking=True)
    off = make_fading(fb, cfg.seed, ris_tracking=False, drop_ris_rays=fb["baseline"] == "absent")
    max_lag = fb["max_lag"]
    if max_lag >= on.snapshots:
        raise ExperimentError(f"max_lag {max_lag} must be below snapshots {on.snapshots}")
    acf_on = np.abs(temporal_acf(simulate_time_varying_channel(on), max_lag))
    acf_off = np.abs(temporal_acf(simulate_time_varying_channel(off), max_lag))
    lags = np.arange(max_lag + 1) * on.sample_interval
    ref = np.abs(j0(2 * np.pi * on.max_doppler * lags))
    table = ResultTable.from_columns([("lag", "s"), ("abs_acf_ris_on", "1"), ("abs_acf_ris_off", "1"),
                                      ("abs_j0_reference", "1")])
    for row in zip(lags, acf_on, acf_off, ref):
        table.add(*row)
    return table


def run_hardening(cfg: ExperimentConfig) -> ResultTable:
    m = cfg.model
    gen = rayleigh_links if m["links"] == "rayleigh" else unit_links
    stats = hardening_statistics(m["n_values"], m["runs"], gen, m["phases"], cfg.seed)
    table = ResultTable.from_columns([("Q", "count"), ("snr_over_q2", "1"), ("var_ratio", "1"),
                                      ("mean_snr", "1")])
    for s in stats:
        table.add(s["Q"], s["snr_over_q2"], s["var_ratio"], s["mean_snr"])
    return table


def run_estimate(cfg: ExperimentConfig) -> ResultTable:
    m = cfg.model
    ecfg = EstimatorConfig(max_iterations=m["max_iterations"], tolerance=m["tolerance"], threshold=m["threshold"])
    rows = rmsee_sweep(m["k_values"], m["snr_db"], m["trials"], m["n_paths"], m["n_ris"], cfg.seed,
                       config=ecfg, layout=m["layout"])
    params = sorted(rows[0]["per_parameter"]) if rows else []
    table = ResultTable.from_columns([("snr", "dB"), ("K", "count"), ("rmsee", "1")]
                                     + [(f"rmsee_{p}", "1") for p in params] + [("trials", "count")])
    for r in sorted(rows, key=lambda r: (r["snr_db"], r["K"])):
        table.add(float(r["snr_db"]), int(r["K"]), r["rmsee"], *[r["per_parameter"][p] for p in params],
                  int(r["trials"]))
    return table


def run_metrics(cfg: ExperimentConfig) -> ResultTable:
    m = cfg.model
    series = taps = matrix = None
    if "fading" in m:
        fb = m["fading"]
        series = simulate_time_varying_channel(make_fading(fb, cfg.seed, ris_tracking=False))
    if "taps" in m:
        taps = (m["taps"]["delays_s"], m["taps"]["powers"])
    if "matrix" in m:
        re = np.asarray(m["matrix"]["re"], float)
        im = np.asarray(m["matrix"].get("im", np.zeros_like(re)), float)
        if re.ndim != 2 or re.shape != im.shape:
            raise ExperimentError("matrix re/im must be equal-shape 2-D arrays")
        matrix = re + 1j * im
    out = channel_metrics(series, taps, matrix)
    names = [("doppler_spread", "Hz"), ("rms_delay_spread", "s"), ("effective_rank", "count"),
             ("condition_number", "1")]
    table = ResultTable.from_columns(names)
    table.add(*[out.get(n, float("nan")) for n, _ in names])
    return table


RUNNERS: Dict[str, Callable[[ExperimentConfig], ResultTable]] = {
    "pathloss": run_pathloss,
    "sweep-ellipse": run_sweep_ellipse,
    "phase-gain": run_phase_gain,
    "acf": run_acf,
    "hardening": run_hardening,
    "estimate": run_estimate,
    "metrics": run_metrics,
}


def run_experiment(cfg: ExperimentConfig) -> ResultTable:
    """Run one experiment; module errors are re-raised as :class:`ExperimentError` with context."""
    try:
        table = RUNNERS[cfg.kind](cfg)
    except ExperimentError as exc:
        raise ExperimentError(f"experiment {cfg.kind!r}: {exc}") from exc
    except (ValueError, ArithmeticError) as exc:
        raise ExperimentError(f"experiment {cfg.kind!r}: {exc}") from exc
    table.provenance = {"config_sha256": cfg.digest(), "experiment": cfg.kind, "seed": str(cfg.seed),
                        "version": __version__}
    return table
