"""Simulated and analytical channel statistics.

Time ACF, spatial CCF, local Doppler spread, and RMS delay spread of the
small-scale channel (large-scale factors never enter the statistics).

Estimators
----------
Expectations are Monte-Carlo averages over independent cluster/scatterer
realizations; trial k of a run draws from the stream (seed, "trial", k, ...)
so results are reproducible and extending the trial count never changes
earlier trials.  "Analytical" curves evaluate the closed diagonal-ray
expressions, conditioned on the same realizations and then averaged, e.g.
for one sub-channel pair

    R(dt) = K/(K+1) * exp(j kappa (D(t) - D(t+dt)))
          + 1/(K+1) * sum_rays sqrt(P(t) P(t+dt)) exp(j kappa (d(t) - d(t+dt)))

with kappa = 2 pi (f_c - f)/c.  The full-IRS ACF combines the two
sub-channels' spatial CCF tensors over IRS element pairs (r1, r2) with the
reflection-phase factor exp(-j(theta_r1(t) - theta_r2(t + dt))), so one
ensemble serves any phase resolution.  Every correlation is normalized by
sqrt(R0(anchor1) * R0(anchor2)), making the zero-lag value exactly 1.

Trials are reduced in fixed blocks of 256 so that results are bit-identical
whatever the worker-pool size.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .assembly import phase_model_for
from .clusters import ClusterRealization, realize_subchannel
from .config import ScenarioConfig, parse_config, serialize_config
from .rng import rng_stream
from .smallscale import (
    pair_field,
    ray_delays,
    ray_field,
    ray_path_rates,
    ray_powers_at,
)

_BLOCK = 256


@dataclass(frozen=True)
class CorrelationCurve:
    """One correlation statistic over a lag grid (time lag or element spacing)."""

    anchor_t: float
    anchor_f: float
    elements: tuple
    lags: np.ndarray
    values: np.ndarray
    kind: str                  # "sim" | "analytical"
    trials: int | None = None
    label: str = ""

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


def _times(t: float, lags: np.ndarray) -> np.ndarray:
    lags = np.asarray(lags, dtype=float)
    if lags[0] != 0.0:
        raise ValueError("lag grid must start at 0")
    return t + lags


def _sub_arrays(real: ClusterRealization, t, lags, f, tx_el, rx_el, sweep=None):
    """Per-realization transfer values plus analytical CCF / zero-lag tensors.

    Returns (h, ana, gram): h is (E, T); ana[r1, r2, dt] the analytical
    cross-correlation anchored at t; gram[r1, r2, s] the equal-time tensor
    used for normalization.
    """
    bundle = ray_field(real, _times(t, lags), f, tx_el, rx_el, sweep)
    w_l = real.k_factor / (real.k_factor + 1.0)
    w_n = 1.0 / (real.k_factor + 1.0)
    h = bundle.transfer()
    gc = np.conj(bundle.g)
    uc = np.conj(bundle.u)
    ana = (w_l * bundle.u[:, 0][:, None, None] * uc[None, :, :]
           + w_n * np.einsum("nr,nst->rst", bundle.g[:, :, 0], gc))
    gram = (w_l * bundle.u[:, None, :] * uc[None, :, :]
            + w_n * np.einsum("nrt,nst->rst", bundle.g, gc))
    return h, ana, gram


# ---------------------------------------------------------------------------
# per-trial kernels (module level so worker processes can run them)

def _trial_sub(cfg: ScenarioConfig, seed: int, k: int, params: dict) -> dict:
    """Sub-channel ACF contributions for each configured (kind, tx, rx)."""
    t, lags, f = params["t"], params["lags"], params["f"]
    times = _times(t, lags)
    out = {}
    for kind, tx_el, rx_el in params["kinds"]:
        real = realize_subchannel(cfg, kind, rng_stream(seed, "trial", k, kind))
        field = pair_field(real, times, f, tx_el, rx_el)
        h, g, u = field["h"], field["g"], field["u"]
        key = kind.lower()
        out[f"{key}_prod"] = h[0] * np.conj(h)
        out[f"{key}_pow"] = np.abs(h) ** 2
        out[f"{key}_ana"] = (field["w_l2"] * u[0] * np.conj(u)
                             + field["w_n2"] * (g[:, 0][:, None] * np.conj(g)).sum(axis=0))
        out[f"{key}_ana0"] = field["w_l2"] + field["w_n2"] * field["powers"].sum(axis=0)
    return out


def _trial_cascade(cfg: ScenarioConfig, seed: int, k: int, params: dict) -> dict:
    """Full-IRS contributions: CCF tensors plus direct cascade products."""
    t, lags, f = params["t"], params["lags"], params["f"]
    q, p = params["q"], params["p"]
    bi = realize_subchannel(cfg, "BI", rng_stream(seed, "trial", k, "BI"))
    iu = realize_subchannel(cfg, "IU", rng_stream(seed, "trial", k, "IU"))
    out = {}
    if params.get("analytical", True):
        h_bi, ana_bi, gram_bi = _sub_arrays(bi, t, lags, f, q, 1, sweep="rx")
        h_iu, ana_iu, gram_iu = _sub_arrays(iu, t, lags, f, 1, p, sweep="tx")
        out.update({"ana_ccf_bi": ana_bi, "ana_gram_bi": gram_bi,
                    "ana_ccf_iu": ana_iu, "ana_gram_iu": gram_iu})
    else:
        times = _times(t, lags)
        h_bi = ray_field(bi, times, f, q, 1, sweep="rx").transfer()
        h_iu = ray_field(iu, times, f, 1, p, sweep="tx").transfer()
    if params.get("tensors", True):
        out.update({
            "sim_ccf_bi": h_bi[:, 0][:, None, None] * np.conj(h_bi)[None, :, :],
            "sim_gram_bi": h_bi[:, None, :] * np.conj(h_bi)[None, :, :],
            "sim_ccf_iu": h_iu[:, 0][:, None, None] * np.conj(h_iu)[None, :, :],
            "sim_gram_iu": h_iu[:, None, :] * np.conj(h_iu)[None, :, :],
        })
    for label, theta in params["theta"].items():
        h_part = np.sum(h_bi * h_iu * np.exp(-1j * theta), axis=0)  # (T,)
        out[f"trial_prod_{label}"] = h_part[0] * np.conj(h_part)
        out[f"trial_pow_{label}"] = np.abs(h_part) ** 2
    return out


def _trial_ccf(cfg: ScenarioConfig, seed: int, k: int, params: dict) -> dict:
    """Spatial CCF contributions across one array axis of one sub-channel."""
    kind, axis = params["subchannel"], params["axis"]
    t, dt, f = params["t"], params["dt"], params["f"]
    real = realize_subchannel(cfg, kind, rng_stream(seed, "trial", k, kind))
    bundle = ray_field(real, np.array([t, t + dt]), f, 1, 1, sweep=axis)
    w_l = real.k_factor / (real.k_factor + 1.0)
    w_n = 1.0 / (real.k_factor + 1.0)
    h = bundle.transfer()  # (E, 2)
    ana = (w_l * bundle.u[0, 0] * np.conj(bundle.u[:, 1])
           + w_n * np.einsum("n,ne->e", bundle.g[:, 0, 0], np.conj(bundle.g[:, :, 1])))
    return {
        "prod": h[0, 0] * np.conj(h[:, 1]),
        "pow_ref": np.array([np.abs(h[0, 0]) ** 2]),
        "pow": np.abs(h[:, 1]) ** 2,
        "ana": ana,
        "ana0_ref": np.array([w_l + w_n * bundle.powers[:, 0, 0].sum()]),
        "ana0": w_l + w_n * bundle.powers[:, :, 1].sum(axis=0),
    }


def doppler_frequency(bi: ClusterRealization, iu: ClusterRealization, t: float,
                      q: int = 1, r: int = 1, p: int = 1):
    """Instantaneous per-ray Doppler of the cascaded link, Hz.

    nu = -(1/lambda) d/dt [d_B_BI + d_I_BI + d_I_IU + d_U_IU], so motion that
    shortens the total path gives a positive shift.  Rays of the two
    sub-channels are paired index-wise up to the smaller visible count;
    returns (nu, power_weights).
    """
    vis_bi = np.nonzero(bi.visible_rays(q, r))[0]
    vis_iu = np.nonzero(iu.visible_rays(r, p))[0]
    m = min(vis_bi.size, vis_iu.size)
    if m == 0:
        return np.zeros(0), np.zeros(0)
    vis_bi, vis_iu = vis_bi[:m], vis_iu[:m]
    rate = (ray_path_rates(bi, q, r, t)[vis_bi]
            + ray_path_rates(iu, r, p, t)[vis_iu])
    nu = -rate / bi.wavelength
    p_bi = ray_powers_at(bi, ray_delays(bi, q, r, t), bi.visible_rays(q, r))[vis_bi, 0]
    p_iu = ray_powers_at(iu, ray_delays(iu, r, p, t), iu.visible_rays(r, p))[vis_iu, 0]
    weights = p_bi * p_iu
    weights = weights / weights.sum()
    return nu, weights


def local_doppler_spread(nu: np.ndarray, weights: np.ndarray | None = None) -> float:
    """Power-weighted standard deviation of the instantaneous Doppler, Hz."""
    nu = np.asarray(nu, dtype=float)
    if nu.size == 0:
        raise ValueError("local Doppler spread needs at least one ray")
    if weights is None:
        weights = np.full(nu.size, 1.0 / nu.size)
    mean = float(np.dot(weights, nu))
    second = float(np.dot(weights, nu**2))
    return float(np.sqrt(max(second - mean**2, 0.0)))


def _trial_doppler(cfg: ScenarioConfig, seed: int, k: int, params: dict) -> dict:
    bi = realize_subchannel(cfg, "BI", rng_stream(seed, "trial", k, "BI"))
    iu = realize_subchannel(cfg, "IU", rng_stream(seed, "trial", k, "IU"))
    q, r, p = params["q"], params["r"], params["p"]
    spread = np.zeros(len(params["times"]))
    valid = np.zeros(len(params["times"]))
    for i, s in enumerate(params["times"]):
        nu, weights = doppler_frequency(bi, iu, s, q, r, p)
        if nu.size:  # trials whose visible ray set is empty carry no spread
            spread[i] = local_doppler_spread(nu, weights)
            valid[i] = 1.0
    return {"spread": spread, "valid": valid}


def rms_delay_spread(delays, powers) -> float:
    """sqrt(sum P tau^2 - (sum P tau)^2) for normalized tap powers."""
    delays = np.asarray(delays, dtype=float)
    powers = np.asarray(powers, dtype=float)
    if delays.size == 0:
        raise ValueError("RMS delay spread needs at least one tap")
    if abs(powers.sum() - 1.0) > 1e-6:
        raise ValueError(f"tap powers must sum to 1, got {powers.sum()}")
    mean = float(np.dot(powers, delays))
    second = float(np.dot(powers, delays**2))
    return float(np.sqrt(max(second - mean**2, 0.0)))


def rms_delay_spread_taps(taps) -> float:
    """RMS delay spread of a RayTap list (powers are amplitude^2)."""
    if not taps:
        raise ValueError("RMS delay spread needs at least one tap")
    return rms_delay_spread([tp.delay for tp in taps],
                            [tp.amplitude**2 for tp in taps])


def _trial_ds(cfg: ScenarioConfig, seed: int, k: int, params: dict) -> dict:
    real = realize_subchannel(cfg, "BI", rng_stream(seed, "trial", k, "BI"))
    if real.num_rays == 0:
        return {"trial_ds": np.array([np.nan])}  # no cluster at all: skip trial
    t = params["t"]
    visible = real.visible_rays(1, 1)
    delays = ray_delays(real, 1, 1, t)
    powers = ray_powers_at(real, delays, visible)[:, 0]
    keep = powers > 0
    if not keep.any():
        return {"trial_ds": np.array([np.nan])}
    return {"trial_ds": np.array([rms_delay_spread(delays[keep, 0], powers[keep])])}


_TRIAL_FNS = {
    "sub": _trial_sub,
    "cascade": _trial_cascade,
    "ccf": _trial_ccf,
    "doppler": _trial_doppler,
    "ds": _trial_ds,
}


# ---------------------------------------------------------------------------
# ensemble runner: fixed 256-trial blocks, deterministic reduction order

def _block_sums(cfg: ScenarioConfig, stat: str, params: dict, seed: int,
                lo: int, hi: int) -> dict:
    fn = _TRIAL_FNS[stat]
    acc: dict = {}
    for k in range(lo, hi):
        out = fn(cfg, seed, k, params)
        for key, value in out.items():
            if key.startswith("trial_"):
                acc.setdefault(key, []).append(value)
            elif key in acc:
                acc[key] = acc[key] + value
            else:
                acc[key] = value.astype(value.dtype, copy=True)
    for key in list(acc):
        if key.startswith("trial_"):
            acc[key] = np.stack(acc[key])
    return acc


def _block_worker(payload: dict) -> dict:
    cfg = parse_config(payload["config"])
    return _block_sums(cfg, payload["stat"], payload["params"], payload["seed"],
                       payload["lo"], payload["hi"])


def run_ensemble(cfg: ScenarioConfig, stat: str, params: dict,
                 trials: int | None = None, seed: int | None = None,
                 threads: int = 1) -> tuple[dict, int]:
    """Accumulate per-trial outputs over the run; returns (reduced, trials).

    Keys starting with ``trial_`` stack one row per trial; all other keys sum.
    Results are independent of ``threads``.
    """
    trials = cfg.trials if trials is None else trials
    seed = cfg.seed if seed is None else seed
    blocks = [(lo, min(lo + _BLOCK, trials)) for lo in range(0, trials, _BLOCK)]
    if threads <= 1 or len(blocks) == 1:
        partials = [_block_sums(cfg, stat, params, seed, lo, hi) for lo, hi in blocks]
    else:
        payloads = [{"config": serialize_config(cfg), "stat": stat, "params": params,
                     "seed": seed, "lo": lo, "hi": hi} for lo, hi in blocks]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(_block_worker, payloads))
    reduced: dict = {}
    for part in partials:
        for key, value in part.items():
            if key.startswith("trial_"):
                reduced.setdefault(key, []).append(value)
            elif key in reduced:
                reduced[key] = reduced[key] + value
            else:
                reduced[key] = value
    for key in list(reduced):
        if key.startswith("trial_"):
            reduced[key] = np.concatenate(reduced[key])
    return reduced, trials


def _normalize(prod: np.ndarray, power: np.ndarray) -> np.ndarray:
    """prod / sqrt(power[0] * power), guarding empty-channel zeros."""
    denom = np.sqrt(power[0] * power)
    return np.divide(prod, denom, out=np.zeros_like(prod), where=denom > 0)


# ---------------------------------------------------------------------------
# public statistics

def acf_analytical_subchannel(real: ClusterRealization, t: float, lags,
                              f: float = 0.0, tx_element: int = 1,
                              rx_element: int = 1) -> CorrelationCurve:
    """Closed-form time ACF of one element pair, conditioned on a realization.

    R(dt) = K/(K+1) exp(j kappa (D(t)-D(t+dt)))
          + 1/(K+1) sum_rays sqrt(P(t) P(t+dt)) exp(j kappa (d(t)-d(t+dt))).
    """
    lags = np.asarray(lags, dtype=float)
    field = pair_field(real, _times(t, lags), f, tx_element, rx_element)
    g, u = field["g"], field["u"]
    vals = (field["w_l2"] * u[0] * np.conj(u)
            + field["w_n2"] * (g[:, 0][:, None] * np.conj(g)).sum(axis=0))
    anchors = field["w_l2"] + field["w_n2"] * field["powers"].sum(axis=0)
    return CorrelationCurve(t, f, (tx_element, rx_element), lags,
                            _normalize(vals, anchors), "analytical", None,
                            real.subchannel)


def acf_subchannel(cfg: ScenarioConfig, subchannel: str, t: float,
                   lags: np.ndarray | None = None, f: float | None = None,
                   tx_element: int = 1, rx_element: int = 1,
                   trials: int | None = None, seed: int | None = None,
                   threads: int = 1) -> dict[str, CorrelationCurve]:
    """Simulated and analytical time ACF of one sub-channel element pair."""
    lags = cfg.lag_grid() if lags is None else np.asarray(lags, dtype=float)
    f = cfg.eval_offset_hz if f is None else f
    params = {"t": t, "lags": lags, "f": f,
              "kinds": [(subchannel, tx_element, rx_element)]}
    acc, n = run_ensemble(cfg, "sub", params, trials, seed, threads)
    key = subchannel.lower()
    elements = (tx_element, rx_element)
    sim = CorrelationCurve(t, f, elements, lags,
                           _normalize(acc[f"{key}_prod"] / n, acc[f"{key}_pow"] / n),
                           "sim", n, subchannel)
    ana = CorrelationCurve(t, f, elements, lags,
                           _normalize(acc[f"{key}_ana"] / n, acc[f"{key}_ana0"] / n),
                           "analytical", n, subchannel)
    return {"sim": sim, "analytical": ana}


def acf_single_irs_element(cfg: ScenarioConfig, t: float,
                           lags: np.ndarray | None = None, f: float | None = None,
                           q: int = 1, r: int = 1, p: int = 1,
                           bits: int | None = "config",
                           trials: int | None = None, seed: int | None = None,
                           threads: int = 1) -> dict[str, CorrelationCurve]:
    """Cascaded-channel ACF through a single IRS element r.

    Product form: R = R_BI * R_IU * exp(-j(theta_r(t) - theta_r(t + dt))),
    so the magnitude is exactly |R_BI| * |R_IU| for any phase plan.
    """
    lags = cfg.lag_grid() if lags is None else np.asarray(lags, dtype=float)
    f = cfg.eval_offset_hz if f is None else f
    params = {"t": t, "lags": lags, "f": f,
              "kinds": [("BI", q, r), ("IU", r, p)]}
    acc, n = run_ensemble(cfg, "sub", params, trials, seed, threads)
    model = phase_model_for(cfg, bits=bits)
    theta = model.applied_profile(_times(t, lags))[r - 1]
    factor = np.exp(-1j * (theta[0] - theta))
    out = {}
    for kind_label in ("sim", "ana"):
        suffix = "prod" if kind_label == "sim" else "ana"
        norm_suffix = "pow" if kind_label == "sim" else "ana0"
        r_bi = _normalize(acc[f"bi_{suffix}"] / n, acc[f"bi_{norm_suffix}"] / n)
        r_iu = _normalize(acc[f"iu_{suffix}"] / n, acc[f"iu_{norm_suffix}"] / n)
        label = "sim" if kind_label == "sim" else "analytical"
        out[label] = CorrelationCurve(t, f, (q, r, p), lags, r_bi * r_iu * factor,
                                      label, n, "cascade")
        out[f"{label}_bi"] = CorrelationCurve(t, f, (q, r), lags, r_bi, label, n, "BI")
        out[f"{label}_iu"] = CorrelationCurve(t, f, (r, p), lags, r_iu, label, n, "IU")
    return out


def _combine_full(ccf_bi, gram_bi, ccf_iu, gram_iu, theta) -> np.ndarray:
    """Double sum over IRS element pairs with the reflection-phase factors."""
    phase = np.exp(-1j * (theta[:, None, 0:1] - theta[None, :, :]))
    phase0 = np.exp(-1j * (theta[:, None, :] - theta[None, :, :]))
    r_vals = np.einsum("rst,rst,rst->t", ccf_bi, ccf_iu, phase)
    a0 = np.real(np.einsum("rst,rst,rst->t", gram_bi, gram_iu, phase0))
    return _normalize(r_vals, a0)


def acf_full_irs(cfg: ScenarioConfig, t: float,
                 lags: np.ndarray | None = None, f: float | None = None,
                 q: int = 1, p: int = 1,
                 bits_variants: tuple = ("config",),
                 trials: int | None = None, seed: int | None = None,
                 threads: int = 1, keep_trials: bool = False,
                 analytical: bool = True) -> dict:
    """Time ACF of the cascade over every IRS element, per phase resolution.

    One ensemble estimates the sub-channel spatial CCF tensors; each entry of
    ``bits_variants`` (None = continuous, int = quantizer bits, "config" =
    scenario setting) is then combined with its own phase factors.  Returns
    {variant_label: {"sim": curve, "analytical": curve}} plus, when
    ``keep_trials`` is set, per-trial direct products for bootstrap use.
    ``analytical=False`` skips the per-ray analytical tensors (they dominate
    the cost for large surfaces).
    """
    lags = cfg.lag_grid() if lags is None else np.asarray(lags, dtype=float)
    f = cfg.eval_offset_hz if f is None else f
    times = _times(t, lags)
    thetas = {}
    for variant in bits_variants:
        bits = cfg.irs.phase_bits if variant == "config" else variant
        label = "continuous" if bits is None else f"{bits}bit"
        thetas[label] = phase_model_for(cfg, bits=bits).applied_profile(times)
    params = {"t": t, "lags": lags, "f": f, "q": q, "p": p, "theta": thetas,
              "analytical": analytical}
    acc, n = run_ensemble(cfg, "cascade", params, trials, seed, threads)

    out: dict = {}
    for label, theta in thetas.items():
        sim_vals = _combine_full(acc["sim_ccf_bi"] / n, acc["sim_gram_bi"] / n,
                                 acc["sim_ccf_iu"] / n, acc["sim_gram_iu"] / n, theta)
        out[label] = {
            "sim": CorrelationCurve(t, f, (q, p), lags, sim_vals, "sim", n, label),
        }
        if analytical:
            ana_vals = _combine_full(acc["ana_ccf_bi"] / n, acc["ana_gram_bi"] / n,
                                     acc["ana_ccf_iu"] / n, acc["ana_gram_iu"] / n,
                                     theta)
            out[label]["analytical"] = CorrelationCurve(
                t, f, (q, p), lags, ana_vals, "analytical", n, label)
        if keep_trials:
            out[label]["trial_prod"] = acc[f"trial_prod_{label}"]
            out[label]["trial_pow"] = acc[f"trial_pow_{label}"]
    return out


def cascade_trial_products(cfg: ScenarioConfig, t: float,
                           lags: np.ndarray | None = None, f: float | None = None,
                           q: int = 1, p: int = 1, bits: int | None = "config",
                           trials: int | None = None, seed: int | None = None,
                           threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial direct cascade products h(t) h*(t+dt) and powers |h|^2.

    Lean path for bootstrap probes on large surfaces: skips every CCF tensor.
    Returns (trial_prod, trial_pow) with one row per trial.
    """
    lags = cfg.lag_grid() if lags is None else np.asarray(lags, dtype=float)
    f = cfg.eval_offset_hz if f is None else f
    use_bits = cfg.irs.phase_bits if bits == "config" else bits
    label = "continuous" if use_bits is None else f"{use_bits}bit"
    theta = phase_model_for(cfg, bits=use_bits).applied_profile(_times(t, lags))
    params = {"t": t, "lags": lags, "f": f, "q": q, "p": p,
              "theta": {label: theta}, "analytical": False, "tensors": False}
    acc, _ = run_ensemble(cfg, "cascade", params, trials, seed, threads)
    return acc[f"trial_prod_{label}"], acc[f"trial_pow_{label}"]


def ccf_spatial(cfg: ScenarioConfig, t: float | None = None,
                dt: float | None = None, subchannel: str | None = None,
                axis: str | None = None, f: float | None = None,
                trials: int | None = None, seed: int | None = None,
                threads: int = 1) -> dict[str, CorrelationCurve]:
    """Spatial CCF across one array axis, element 1 against every element."""
    ccf_cfg = cfg.ccf
    subchannel = ccf_cfg["subchannel"] if subchannel is None else subchannel
    axis = ccf_cfg["axis"] if axis is None else axis
    t = ccf_cfg["t_s"] if t is None else t
    dt = ccf_cfg["dt_s"] if dt is None else dt
    f = cfg.eval_offset_hz if f is None else f
    params = {"subchannel": subchannel, "axis": axis, "t": t, "dt": dt, "f": f}
    acc, n = run_ensemble(cfg, "ccf", params, trials, seed, threads)
    side = {"BI": ("bs", "irs"), "IU": ("irs", "user"),
            "BU": ("bs", "user")}[subchannel][axis == "rx"]
    layout = {"bs": cfg.bs.layout("BS"), "user": cfg.user.layout("USER"),
              "irs": cfg.irs.layout()}[side]
    seps = layout.spacings[0] * np.arange(layout.num_elements)

    def norm(vals, ref, anchors):
        denom = np.sqrt((ref[0] / n) * (anchors / n))
        return np.divide(vals / n, denom, out=np.zeros_like(vals), where=denom > 0)

    sim_vals = norm(acc["prod"], acc["pow_ref"], acc["pow"])
    ana_vals = norm(acc["ana"], acc["ana0_ref"], acc["ana0"])
    return {
        "sim": CorrelationCurve(t, f, (subchannel, axis), seps, sim_vals, "sim", n),
        "analytical": CorrelationCurve(t, f, (subchannel, axis), seps, ana_vals,
                                       "analytical", n),
    }


def doppler_spread_series(cfg: ScenarioConfig, times: np.ndarray | None = None,
                          q: int = 1, r: int = 1, p: int = 1,
                          trials: int | None = None, seed: int | None = None,
                          threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Ensemble-mean local Doppler spread over a time grid."""
    if times is None:
        d = cfg.doppler
        times = np.linspace(d["start_s"], d["stop_s"], d["num"])
    params = {"times": np.asarray(times, dtype=float), "q": q, "r": r, "p": p}
    acc, _ = run_ensemble(cfg, "doppler", params, trials, seed, threads)
    valid = np.maximum(acc["valid"], 1.0)
    return np.asarray(times, dtype=float), acc["spread"] / valid


def ds_cdf(cfg: ScenarioConfig, sigma_scales: list[float] | None = None,
           t: float | None = None, trials: int | None = None,
           seed: int | None = None, threads: int = 1) -> dict[float, np.ndarray]:
    """Empirical RMS delay-spread samples (sorted) per scatterer-sigma scale.

    Scaling multiplies the configured sigma triple; trials reuse the same
    random streams across scales so the sweeps are paired.
    """
    if sigma_scales is None:
        sigma_scales = cfg.ds_cdf["sigma_scales"]
    t = cfg.ds_cdf["t_s"] if t is None else t
    out = {}
    for scale in sigma_scales:
        scaled = dataclasses.replace(
            cfg, clusters=dataclasses.replace(
                cfg.clusters,
                sigma_xyz_m=tuple(scale * s for s in cfg.clusters.sigma_xyz_m)))
        acc, _ = run_ensemble(scaled, "ds", {"t": t}, trials, seed, threads)
        samples = acc["trial_ds"][:, 0]
        out[scale] = np.sort(samples[~np.isnan(samples)])
    return out


def empirical_cdf(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(sorted samples, CDF levels in (0, 1])."""
    s = np.sort(np.asarray(samples, dtype=float))
    return s, np.arange(1, s.size + 1) / s.size


def bootstrap_mean_abs(trial_prod: np.ndarray, trial_pow: np.ndarray,
                       rng: np.random.Generator, n_boot: int = 400,
                       lag_mask: np.ndarray | None = None) -> np.ndarray:
    """Bootstrap samples of mean |ACF| over a lag subset, resampling trials."""
    n = trial_prod.shape[0]
    if lag_mask is None:
        lag_mask = np.ones(trial_prod.shape[1], dtype=bool)
    out = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, n, n)
        prod = trial_prod[idx].mean(axis=0)
        power = trial_pow[idx].mean(axis=0)
        out[b] = np.abs(_normalize(prod, power))[lag_mask].mean()
    return out
