"""Channel sounding under RIS transmission modes and a SAGE-style multipath estimator.

Forward model, per mode ``k``::

    Y_k[s, p, u, v] = sum_l alpha_l g_k(l) exp(-j2pi f_s tau_l) exp(j2pi nu_l t_p)
                      a_rx(aoa_l)[u] a_tx(aod_l)[v] + noise

with ``g_k(l) = 1`` for paths that do not touch the RIS. The RIS tile sees
its incident wave in the tile x-z plane and re-radiates in the tile y-z
plane, so the incidence and reflection angles leave separate footprints on
the mode responses.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
from scipy.ndimage import maximum_filter
from scipy.optimize import minimize, minimize_scalar

TWO_PI = 2 * np.pi
GOLDEN = (np.sqrt(5) - 1) / 2
SILVER = np.sqrt(2) - 1


@dataclass(frozen=True)
class Mpc:
    amplitude: complex
    delay: float
    aoa: float
    aod: float
    doppler: float
    ris_interacting: bool = False
    ris_incident_angle: Optional[float] = None
    ris_reflect_angle: Optional[float] = None

    def __post_init__(self):
        if self.delay < 0:
            raise ValueError("delay must be >= 0")
        if abs(self.amplitude) <= 0:
            raise ValueError("amplitude must be non-zero")
        if self.ris_interacting and (self.ris_incident_angle is None or self.ris_reflect_angle is None):
            raise ValueError("RIS path needs incident and reflect angles")


@dataclass(frozen=True)
class SoundingGrid:
    """Measurement grid and search grids (defaults from the estimator design)."""

    n_subcarriers: int = 64
    subcarrier_spacing: float = 1e6
    n_snapshots: int = 16
    snapshot_interval: float = 1e-3
    n_rx: int = 8
    n_tx: int = 8
    rx_pitch: float = 0.5           # wavelengths
    tx_pitch: float = 0.5
    n_delay: int = 128
    n_angle: int = 181
    n_doppler: int = 61
    doppler_max: float = 250.0
    ris_angle_max: float = np.radians(60)
    n_ris_angle: int = 61

    @property
    def freqs(self):
        return np.arange(self.n_subcarriers) * self.subcarrier_spacing

    @property
    def times(self):
        return np.arange(self.n_snapshots) * self.snapshot_interval

    @property
    def delay_grid(self):
        return np.arange(self.n_delay) / (self.n_delay * self.subcarrier_spacing)

    @property
    def angle_grid(self):
        return np.linspace(-np.pi / 2, np.pi / 2, self.n_angle)

    @property
    def doppler_grid(self):
        return np.linspace(-self.doppler_max, self.doppler_max, self.n_doppler)

    @property
    def ris_angle_grid(self):
        return np.linspace(-self.ris_angle_max, self.ris_angle_max, self.n_ris_angle)

    @property
    def delay_bin(self):
        """Delay resolution 1/bandwidth."""
        return 1.0 / (self.n_subcarriers * self.subcarrier_spacing)

    def spans(self) -> dict:
        a = self.ris_angle_grid
        return {
            "delay": self.delay_grid[-1] - self.delay_grid[0],
            "aoa": np.pi, "aod": np.pi,
            "doppler": 2 * self.doppler_max,
            "ris_incident": a[-1] - a[0], "ris_reflect": a[-1] - a[0],
        }

    # steering vectors (unit modulus entries)
    def b_delay(self, tau):
        return np.exp(-2j * np.pi * np.multiply.outer(tau, self.freqs))

    def b_doppler(self, nu):
        return np.exp(2j * np.pi * np.multiply.outer(nu, self.times))

    def a_rx(self, phi):
        return np.exp(2j * np.pi * self.rx_pitch * np.multiply.outer(np.sin(phi), np.arange(self.n_rx)))

    def a_tx(self, phi):
        return np.exp(2j * np.pi * self.tx_pitch * np.multiply.outer(np.sin(phi), np.arange(self.n_tx)))


@dataclass(frozen=True)
class TransmissionMode:
    """One fixed tile configuration.

    ``phases`` is the ``(m, n)`` tile profile; element offsets are in
    wavelengths. Incidence is measured in the tile x-z plane, reflection in
    the y-z plane (signed angles from the normal).
    """

    index: int
    phases: np.ndarray
    pitch: float = 0.5
    amplitude: float = 1.0

    def _offsets(self):
        m, n = np.shape(self.phases)
        u = (np.arange(m) - (m - 1) / 2) * self.pitch
        v = (np.arange(n) - (n - 1) / 2) * self.pitch
        return u, v

    def response_grid(self, theta_inc, theta_ref) -> np.ndarray:
        """Response on the outer grid ``theta_inc x theta_ref``."""
        u, v = self._offsets()
        ex = np.exp(2j * np.pi * np.multiply.outer(np.sin(np.atleast_1d(theta_inc)), u))
        ey = np.exp(2j * np.pi * np.multiply.outer(np.sin(np.atleast_1d(theta_ref)), v))
        w = self.amplitude * np.exp(1j * np.asarray(self.phases))
        return ex @ w @ ey.T

    def mode_response(self, theta_inc, theta_ref) -> complex:
        return complex(self.response_grid(theta_inc, theta_ref)[0, 0])

    @property
    def element_count(self) -> int:
        return int(np.size(self.phases))


def mode_steering_angles(K: int, span: float = np.radians(60)) -> np.ndarray:
    """``(K, 2)`` (incidence-axis, reflection-axis) steering angles of a nested low-discrepancy layout.

    The first ``K`` rows never change when ``K`` grows, and the layout has
    no (a, b) -> (-b, -a) symmetry, which would make incidence and
    reflection angles indistinguishable.
    """
    k = np.arange(K)
    x = np.mod(0.5 + k * SILVER, 1.0)
    y = np.mod(0.5 + k * GOLDEN, 1.0)
    return np.column_stack([(2 * x - 1) * span, (2 * y - 1) * span])


def default_modes(K: int, tile: tuple = (4, 4), pitch: float = 0.5, layout: str = "nested") -> List[TransmissionMode]:
    """FAR_FIELD_BEAM-style linear-gradient tile profiles, one per steering pair.

    ``layout="uniform"`` spreads the reflection steering evenly over
    [-60, 60] deg with the incidence axis stepped by a co-prime stride.
    """
    if K < 1:
        raise ValueError("need K >= 1 modes")
    if layout == "nested":
        ang = mode_steering_angles(K)
    elif layout == "uniform":
        y = np.linspace(-np.radians(60), np.radians(60), K) if K > 1 else np.zeros(1)
        x = y[(2 * np.arange(K) + 1) % K] if K > 2 else y[::-1] * 0.5
        ang = np.column_stack([x, y])
    else:
        raise ValueError(f"unknown layout {layout!r}")
    m, n = tile
    u = (np.arange(m) - (m - 1) / 2) * pitch
    v = (np.arange(n) - (n - 1) / 2) * pitch
    modes = []
    for i, (ax, ay) in enumerate(ang):
        ph = -TWO_PI * (np.add.outer(u * np.sin(ax), v * np.sin(ay)))
        modes.append(TransmissionMode(i, np.mod(ph, TWO_PI), pitch))
    return modes


@dataclass
class Observation:
    Y: np.ndarray                  # (K, S, P, U, V)
    grid: SoundingGrid
    snr_db: float
    seed: Optional[int]
    noise_var: float = 0.0

    @property
    def n_modes(self):
        return self.Y.shape[0]


def path_tensor(grid: SoundingGrid, mpc: Mpc) -> np.ndarray:
    """Unit-amplitude separable response of one path, shape ``(S, P, U, V)``."""
    return np.einsum("s,p,u,v->spuv", grid.b_delay(mpc.delay), grid.b_doppler(mpc.doppler),
                     grid.a_rx(mpc.aoa), grid.a_tx(mpc.aod))


def mode_gains(mpc: Mpc, modes: Sequence[TransmissionMode]) -> np.ndarray:
    if not mpc.ris_interacting:
        return np.ones(len(modes), complex)
    return np.array([m.mode_response(mpc.ris_incident_angle, mpc.ris_reflect_angle) for m in modes])


def synthesize_observations(truth: Sequence[Mpc], modes: Sequence[TransmissionMode], grid: SoundingGrid = None,
                            snr_db: float = np.inf, seed: Optional[int] = 0) -> Observation:
    """Noisy sounding data; noise for mode ``k`` is drawn from the stream ``(seed, k)``.

    Per-sample SNR is the mean power of a reference observation (each RIS
    path at its full tile gain, other paths as they are) over the noise
    variance, which keeps the noise level independent of the mode set.
    ``snr_db=inf`` switches the noise off.
    """
    grid = grid or SoundingGrid()
    K = len(modes)
    if K < 1:
        raise ValueError("need at least one transmission mode")
    for i in range(K):
        for j in range(i):
            if np.allclose(modes[i].phases, modes[j].phases):
                warnings.warn(f"transmission modes {j} and {i} share a profile; RIS paths are not identifiable",
                              stacklevel=2)
    shape = (grid.n_subcarriers, grid.n_snapshots, grid.n_rx, grid.n_tx)
    Y = np.zeros((K,) + shape, complex)
    for mpc in truth:
        Y += (mpc.amplitude * mode_gains(mpc, modes))[:, None, None, None, None] * path_tensor(grid, mpc)
    noise_var = 0.0
    if np.isfinite(snr_db):
        # reference: every RIS path at full coherent tile gain, so the noise
        # level does not depend on which modes were sounded
        ref = np.zeros(shape, complex)
        for mpc in truth:
            gain = max(m.element_count * m.amplitude for m in modes) if mpc.ris_interacting else 1.0
            ref += mpc.amplitude * gain * path_tensor(grid, mpc)
        p_sig = np.mean(np.abs(ref) ** 2)
        noise_var = p_sig / 10 ** (snr_db / 10)
        for k in range(K):
            rng = np.random.default_rng([int(seed), k])
            w = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(noise_var / 2)
            Y[k] += w
    return Observation(Y, grid, snr_db, seed, noise_var)


def classify_ris_paths(alpha_k, modes=None, threshold: float = 0.05) -> bool:
    """Flag a path as RIS-relayed when its amplitude varies across modes.

    Statistic: ``Var_k |alpha_k| / mean_k(|alpha_k|)^2`` against ``threshold``.
    """
    a = np.abs(np.asarray(alpha_k))
    if a.size < 2:
        return False
    m = a.mean()
    if m == 0:
        return False
    return bool(np.var(a) / m ** 2 > threshold)


def amplitude_variation(alpha_k) -> float:
    a = np.abs(np.asarray(alpha_k))
    return float(np.var(a) / a.mean() ** 2)


@dataclass
class EstimatorConfig:
    max_iterations: int = 20
    tolerance: float = 1e-4
    threshold: float = 0.05
    polish: bool = True


@dataclass
class PathEstimate:
    mpc: Mpc
    alpha_k: np.ndarray
    ris_flag: bool
    ris_angles: tuple                     # always estimated; reported in mpc only when flagged
    ris_objective: float = 0.0


@dataclass
class EstimationResult:
    paths: List[PathEstimate]
    iterations: int
    residual_history: List[float]
    rmsee: Optional[dict] = None

    @property
    def mpcs(self) -> List[Mpc]:
        return [p.mpc for p in self.paths]


class _Searcher:
    """1-D maximisation over a grid: argmax, 3-point parabola, then a bounded polish."""

    def __init__(self, grid_values, basis, polish=True):
        self.grid = np.asarray(grid_values, float)
        self.basis = basis                       # callable: values -> (n, dim) steering rows
        self.rows = basis(self.grid)
        self.polish = polish

    def objective(self, z, x):
        """sum_k |b(x)^H z_k|^2 for ``z`` of shape (K, dim)."""
        b = self.basis(np.atleast_1d(x))
        return np.sum(np.abs(np.conj(b) @ z.T) ** 2, axis=-1)

    def search(self, z, current=None):
        vals = np.sum(np.abs(np.conj(self.rows) @ z.T) ** 2, axis=1)
        i = int(np.argmax(vals))
        best_x, best_v = self.grid[i], vals[i]
        if 0 < i < len(self.grid) - 1:
            y0, y1, y2 = vals[i - 1], vals[i], vals[i + 1]
            den = y0 - 2 * y1 + y2
            step = self.grid[i + 1] - self.grid[i]
            cand = []
            if den < 0:
                cand.append(self.grid[i] + 0.5 * (y0 - y2) / den * step)
            if self.polish:
                res = minimize_scalar(lambda x: -float(self.objective(z, x)[0]),
                                      bounds=(self.grid[i - 1], self.grid[i + 1]), method="bounded",
                                      options={"xatol": step * 1e-6})
                cand.append(res.x)
            for x in cand:
                v = float(self.objective(z, x)[0])
                # keep the grid point unless refinement is a real improvement
                if v > best_v * (1 + 1e-12):
                    best_x, best_v = float(x), v
        if current is not None:
            v = float(self.objective(z, current)[0])
            if v >= best_v:
                return float(current), v
        return float(best_x), float(best_v)


class SageEstimator:
    def __init__(self, obs: Observation, modes: Sequence[TransmissionMode], config: EstimatorConfig = None):
        self.obs = obs
        self.grid = obs.grid
        self.modes = list(modes)
        self.cfg = config or EstimatorConfig()
        g = self.grid
        pol = self.cfg.polish
        self.s_delay = _Searcher(g.delay_grid, g.b_delay, pol)
        self.s_doppler = _Searcher(g.doppler_grid, g.b_doppler, pol)
        self.s_aoa = _Searcher(g.angle_grid, g.a_rx, pol)
        self.s_aod = _Searcher(g.angle_grid, g.a_tx, pol)
        self.norm = g.n_subcarriers * g.n_snapshots * g.n_rx * g.n_tx
        ra = g.ris_angle_grid
        self.ris_grid = ra
        self.G = np.stack([m.response_grid(ra, ra) for m in self.modes])     # (K, I, R)
        self.G_energy = np.sum(np.abs(self.G) ** 2, axis=0)

    # contractions of X (K,S,P,U,V) against steering vectors of all but one dimension
    @staticmethod
    def _z(X, bt, bn, br, bd, free):
        c = np.conj
        if free == "delay":
            return np.einsum("kspuv,p,u,v->ks", X, c(bn), c(br), c(bd), optimize=True)
        if free == "doppler":
            return np.einsum("kspuv,s,u,v->kp", X, c(bt), c(br), c(bd), optimize=True)
        if free == "aoa":
            return np.einsum("kspuv,s,p,v->ku", X, c(bt), c(bn), c(bd), optimize=True)
        return np.einsum("kspuv,s,p,u->kv", X, c(bt), c(bn), c(br), optimize=True)

    def _steer(self, th):
        g = self.grid
        return (g.b_delay(th[0]), g.b_doppler(th[1]), g.a_rx(th[2]), g.a_tx(th[3]))

    def _alpha(self, X, th):
        bt, bn, br, bd = self._steer(th)
        c = np.conj
        return np.einsum("kspuv,s,p,u,v->k", X, c(bt), c(bn), c(br), c(bd), optimize=True) / self.norm

    def _component(self, th, alpha):
        return alpha[:, None, None, None, None] * np.einsum("s,p,u,v->spuv", *self._steer(th))[None]

    def _initial(self, X):
        """Non-coherent delay search, then angles and Doppler one at a time."""
        g = self.grid
        K = X.shape[0]
        flat = np.moveaxis(X, 1, 0).reshape(g.n_subcarriers, -1)
        pw = np.sum(np.abs(np.conj(self.s_delay.rows) @ flat) ** 2, axis=1)
        tau = float(self.s_delay.grid[int(np.argmax(pw))])
        bt = g.b_delay(tau)
        Xs = np.einsum("kspuv,s->kpuv", X, np.conj(bt))
        pw = np.sum(np.abs(np.einsum("kpuv,au->akpv", Xs, np.conj(self.s_aoa.rows))) ** 2, axis=(1, 2, 3))
        aoa = float(self.s_aoa.grid[int(np.argmax(pw))])
        Xr = np.einsum("kpuv,u->kpv", Xs, np.conj(g.a_rx(aoa)))
        pw = np.sum(np.abs(np.einsum("kpv,av->akp", Xr, np.conj(self.s_aod.rows))) ** 2, axis=(1, 2))
        aod = float(self.s_aod.grid[int(np.argmax(pw))])
        z = np.einsum("kpv,v->kp", Xr, np.conj(g.a_tx(aod)))
        nu, _ = self.s_doppler.search(z)
        th = [tau, nu, aoa, aod]
        return self._update(X, th)

    def _update(self, X, th):
        """One coordinate-ascent sweep over (delay, Doppler, AoA, AoD) on the path's own signal X."""
        th = list(th)
        searchers = (("delay", self.s_delay, 0), ("doppler", self.s_doppler, 1),
                     ("aoa", self.s_aoa, 2), ("aod", self.s_aod, 3))
        for name, s, i in searchers:
            z = self._z(X, *self._steer(th), free=name)
            th[i], _ = s.search(z, current=th[i])
        return th

    def _ris_angles(self, alpha, starts: int = 4):
        num = np.abs(np.einsum("k,kir->ir", alpha, np.conj(self.G))) ** 2
        obj = np.where(self.G_energy > 0, num / np.where(self.G_energy > 0, self.G_energy, 1), 0)
        i, r = np.unravel_index(int(np.argmax(obj)), obj.shape)
        ti, tr = self.ris_grid[i], self.ris_grid[r]
        best = obj[i, r]
        if not self.cfg.polish:
            return (float(ti), float(tr)), float(best)

        def f(a, b):
            g = np.array([m.mode_response(a, b) for m in self.modes])
            e = np.sum(np.abs(g) ** 2)
            return float(abs(np.vdot(g, alpha)) ** 2 / e) if e > 0 else 0.0

        # the coarse grid can rank a side basin above the true one, so polish
        # the strongest few local maxima and keep the winner
        peaks = np.argwhere((obj == maximum_filter(obj, size=3, mode="nearest")) & (obj > 0))
        order = np.argsort(-obj[peaks[:, 0], peaks[:, 1]])[:starts]
        step = self.ris_grid[1] - self.ris_grid[0]
        for pi, pr in peaks[order]:
            a0, b0 = self.ris_grid[pi], self.ris_grid[pr]
            res = minimize(lambda x: -f(x[0], x[1]), x0=[a0, b0], method="Nelder-Mead",
                           options={"xatol": step * 1e-7, "fatol": best * 1e-14,
                                    "initial_simplex": [[a0, b0], [a0 + step / 2, b0], [a0, b0 + step / 2]]})
            if -res.fun > best * (1 + 1e-12) and np.all(np.abs(res.x - [a0, b0]) <= 2 * step):
                (ti, tr), best = res.x, -res.fun
        return (float(ti), float(tr)), float(best)

    def _finish_path(self, th, alpha):
        flag = classify_ris_paths(alpha, self.modes, self.cfg.threshold)
        angles, obj = self._ris_angles(alpha) if len(self.modes) >= 2 else ((0.0, 0.0), 0.0)
        if flag:
            g = np.array([m.mode_response(*angles) for m in self.modes])
            amp = np.vdot(g, alpha) / np.vdot(g, g)
        else:
            amp = alpha.mean()
        if abs(amp) == 0:
            amp = 1e-300
        mpc = Mpc(complex(amp), max(float(th[0]), 0.0), float(th[2]), float(th[3]), float(th[1]),
                  flag, angles[0] if flag else None, angles[1] if flag else None)
        return PathEstimate(mpc, alpha, flag, angles, obj)

    def run(self, L: int) -> EstimationResult:
        g = self.grid
        if L < 1:
            raise ValueError("model order must be >= 1")
        limit = min(g.n_subcarriers, g.n_snapshots, g.n_rx, g.n_tx)
        if L > limit:
            raise ValueError(f"model order {L} exceeds grid identifiability ({limit})")
        Y = self.obs.Y
        resid = Y.copy()
        thetas, alphas = [], []
        for _ in range(L):
            th = self._initial(resid)
            a = self._alpha(resid, th)
            resid = resid - self._component(th, a)
            thetas.append(th)
            alphas.append(a)
        history = [float(np.sum(np.abs(resid) ** 2))]
        it = 0
        for it in range(1, self.cfg.max_iterations + 1):
            for l in range(L):
                X = resid + self._component(thetas[l], alphas[l])
                th = self._update(X, thetas[l])
                a = self._alpha(X, th)
                thetas[l], alphas[l] = th, a
                resid = X - self._component(th, a)
            history.append(float(np.sum(np.abs(resid) ** 2)))
            prev, cur = history[-2], history[-1]
            if prev == 0 or (prev - cur) <= self.cfg.tolerance * prev:
                break
        paths = [self._finish_path(th, a) for th, a in zip(thetas, alphas)]
        return EstimationResult(paths, it, history)


def estimate_mpc_parameters(obs: Observation, L: int, modes: Sequence[TransmissionMode],
                            config: EstimatorConfig = None) -> EstimationResult:
    return SageEstimator(obs, modes, config).run(L)


# --- error statistics -------------------------------------------------------

GENERAL = ("delay", "aoa", "aod", "doppler")
RIS_PARAMS = ("ris_incident", "ris_reflect")


def _vec(m: Mpc, spans):
    return np.array([m.delay / spans["delay"], m.aoa / spans["aoa"], m.aod / spans["aod"],
                     m.doppler / spans["doppler"]])


def match_paths(estimates: Sequence[Mpc], truth: Sequence[Mpc], spans: dict) -> list:
    """Greedy nearest pairs ``(i_est, j_truth)`` in span-normalised (delay, aoa, aod, doppler) space."""
    if not estimates or not truth:
        raise ValueError("empty estimate or truth set")
    if len(estimates) != len(truth):
        raise ValueError("estimate and truth path counts differ")
    E = np.array([_vec(m, spans) for m in estimates])
    T = np.array([_vec(m, spans) for m in truth])
    d = np.linalg.norm(E[:, None, :] - T[None, :, :], axis=-1)
    pairs = []
    for _ in range(len(estimates)):
        i, j = np.unravel_index(int(np.argmin(d)), d.shape)
        pairs.append((int(i), int(j)))
        d[i, :] = np.inf
        d[:, j] = np.inf
    return pairs


def parameter_errors(estimates, truth, spans, ris_angles=None) -> dict:
    """Signed errors per parameter over matched paths (physical units).

    RIS angles are compared only for truth paths that touch the RIS;
    ``ris_angles`` optionally supplies the estimator's angles for every
    estimate (used when a RIS path was not flagged).
    """
    pairs = match_paths(estimates, truth, spans)
    err = {k: [] for k in GENERAL + RIS_PARAMS}
    for i, j in pairs:
        e, t = estimates[i], truth[j]
        err["delay"].append(e.delay - t.delay)
        err["aoa"].append(e.aoa - t.aoa)
        err["aod"].append(e.aod - t.aod)
        err["doppler"].append(e.doppler - t.doppler)
        if t.ris_interacting:
            if e.ris_interacting:
                ei, er = e.ris_incident_angle, e.ris_reflect_angle
            elif ris_angles is not None:
                ei, er = ris_angles[i]
            else:
                ei, er = 0.0, 0.0
            err["ris_incident"].append(ei - t.ris_incident_angle)
            err["ris_reflect"].append(er - t.ris_reflect_angle)
    return {k: np.asarray(v, float) for k, v in err.items()}


def summarize_errors(errors: Sequence[dict], spans: dict) -> dict:
    """Pool error dictionaries: per-parameter RMSE plus the span-normalised aggregate."""
    per = {}
    norm_mse = []
    for k in GENERAL + RIS_PARAMS:
        v = np.concatenate([e[k] for e in errors]) if errors else np.array([])
        if v.size == 0:
            continue
        mse = float(np.mean(v ** 2))
        per[k] = float(np.sqrt(mse))
        norm_mse.append(mse / spans[k] ** 2)
    if not norm_mse:
        raise ValueError("no errors to summarise")
    return {"per_parameter": per, "aggregate": float(np.sqrt(np.mean(norm_mse)))}


def rmsee(estimates, truth, spans, ris_angles=None) -> dict:
    return summarize_errors([parameter_errors(estimates, truth, spans, ris_angles)], spans)


def result_rmsee(result: EstimationResult, truth, spans) -> dict:
    return rmsee(result.mpcs, truth, spans, [p.ris_angles for p in result.paths])


# --- Monte Carlo ------------------------------------------------------------

def random_truth(rng: np.random.Generator, grid: SoundingGrid, n_paths: int = 3, n_ris: int = 1,
                 tile_elements: int = 16) -> List[Mpc]:
    """Random, resolvable paths: delays two resolution bins apart, angles inside the search grids.

    RIS paths get amplitude ``1/tile_elements`` so their peak mode response
    is comparable to the unit-amplitude direct paths.
    """
    bin_ = grid.delay_bin
    while True:
        delays = np.sort(rng.uniform(0.05e-6, 0.6e-6, n_paths))
        if n_paths < 2 or np.min(np.diff(delays)) >= 2 * bin_:
            break
    lim = np.radians(60)
    ris_lim = np.radians(45)
    out = []
    for i, tau in enumerate(delays):
        is_ris = i >= n_paths - n_ris
        mag = rng.uniform(0.6, 1.0) / (tile_elements if is_ris else 1)
        amp = mag * np.exp(1j * rng.uniform(0, TWO_PI))
        out.append(Mpc(complex(amp), float(tau), float(rng.uniform(-lim, lim)), float(rng.uniform(-lim, lim)),
                       float(rng.uniform(-0.8, 0.8) * grid.doppler_max), bool(is_ris),
                       float(rng.uniform(-ris_lim, ris_lim)) if is_ris else None,
                       float(rng.uniform(-ris_lim, ris_lim)) if is_ris else None))
    # shuffle so RIS paths are not always last
    order = rng.permutation(n_paths)
    return [out[i] for i in order]


def rmsee_sweep(k_values=(4, 5, 6), snr_values=(0.0, 10.0, 20.0), trials: int = 100, n_paths: int = 3,
                n_ris: int = 1, seed: int = 0, grid: SoundingGrid = None, config: EstimatorConfig = None,
                layout: str = "nested") -> list:
    """Pooled RMSEE for every (K, SNR) cell. Truth and noise streams are shared across cells."""
    grid = grid or SoundingGrid()
    spans = grid.spans()
    errs = {(k, s): [] for k in k_values for s in snr_values}
    for t in range(trials):
        truth = random_truth(np.random.default_rng([int(seed), t]), grid, n_paths, n_ris)
        for K in k_values:
            modes = default_modes(K, layout=layout)
            for snr in snr_values:
                obs = synthesize_observations(truth, modes, grid, snr, seed=int(seed) * 100003 + t)
                res = estimate_mpc_parameters(obs, n_paths, modes, config)
                errs[(K, snr)].append(parameter_errors(res.mpcs, truth, spans,
                                                       [p.ris_angles for p in res.paths]))
    rows = []
    for (K, snr), e in errs.items():
        s = summarize_errors(e, spans)
        rows.append({"K": K, "snr_db": snr, "rmsee": s["aggregate"], "per_parameter": s["per_parameter"],
                     "trials": trials})
    return rows
