"""Time-varying small-scale channel impulse response of one sub-channel.

Rays: a ray bounces off paired scatterers (S_A near Tx, S_Z near Rx); its
path length is |d_tx| + |d_rx| where, with constant velocities,

    d_tx(t) = d0_tx - l_q - (v_tx - v_A) * t
    d_rx(t) = d0_rx - l_r - (v_rx - v_Z) * t

(d0 are the initial reference-to-scatterer vectors, l the element offsets).
Delay tau = path/c + tau_v with the cluster's virtual-link delay.  The tap
phase is exp(+j 2 pi f_c tau); the exponent sign is a fixed convention and
correlation magnitudes do not depend on it.  Ray powers follow an
exponential power-delay profile exp(-tau/gamma), renormalized at every
(element pair, time) over the rays visible to that pair, so the NLoS power
always sums to 1.

The LoS component has unit power and delay |D(t)|/c with
D(t) = D0 - l_q + l_r + (v_rx - v_tx) * t.

Rician mixing: h = sqrt(K/(K+1)) h_LoS + sqrt(1/(K+1)) h_NLoS.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clusters import ClusterRealization
from .geometry import SPEED_OF_LIGHT, element_offset

TWO_PI = 2.0 * np.pi

# cap on the float64 count of the largest per-side geometry temp
_BLOCK_FLOATS = 12_000_000


@dataclass(frozen=True)
class RayTap:
    """One resolvable ray: delay, linear amplitude, carrier phase."""

    delay: float
    amplitude: float
    phase: float
    cluster_id: int
    ray_id: int
    is_los: bool = False


@dataclass(frozen=True)
class SubchannelCIR:
    """LoS tap plus NLoS tap set for one element pair at one time instant."""

    pair: tuple[int, int]
    t: float
    k_factor: float
    fc_hz: float
    los_tap: RayTap
    nlos_taps: tuple[RayTap, ...]

    def __post_init__(self):
        if self.k_factor < 0:
            raise ValueError(f"Rician K must be >= 0, got {self.k_factor}")

    @property
    def los_weight(self) -> float:
        return np.sqrt(self.k_factor / (self.k_factor + 1.0))

    @property
    def nlos_weight(self) -> float:
        return np.sqrt(1.0 / (self.k_factor + 1.0))

    def weighted_taps(self) -> list[RayTap]:
        """All taps with the Rician weights folded into the amplitudes."""
        out = [RayTap(self.los_tap.delay, self.los_weight * self.los_tap.amplitude,
                      self.los_tap.phase, -1, -1, True)]
        w = self.nlos_weight
        out.extend(RayTap(tp.delay, w * tp.amplitude, tp.phase, tp.cluster_id, tp.ray_id)
                   for tp in self.nlos_taps)
        return out


def _side_lengths(d0, v_rel, offset, times):
    """Norms of d0 - offset - v_rel * t; shapes (n_rays, n_times)."""
    diff = (d0 - offset)[:, None, :] - v_rel[:, None, :] * times[None, :, None]
    return np.linalg.norm(diff, axis=-1)


def ray_path_lengths(real: ClusterRealization, tx_element: int, rx_element: int,
                     times) -> np.ndarray:
    """Geometric path length |d_tx| + |d_rx| per ray; shape (n_rays, n_times)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    rays = real.rays
    l_tx = element_offset(real.tx_layout, tx_element)
    l_rx = element_offset(real.rx_layout, rx_element)
    return (_side_lengths(rays["d0_tx"], rays["v_rel_tx"], l_tx, times)
            + _side_lengths(rays["d0_rx"], rays["v_rel_rx"], l_rx, times))


def ray_delays(real: ClusterRealization, tx_element: int, rx_element: int,
               times) -> np.ndarray:
    """Ray delays path/c + tau_v; shape (n_rays, n_times)."""
    d = ray_path_lengths(real, tx_element, rx_element, times)
    return d / SPEED_OF_LIGHT + real.rays["tau_v"][:, None]


def ray_path_rates(real: ClusterRealization, tx_element: int, rx_element: int,
                   t: float) -> np.ndarray:
    """Analytic d/dt of each ray's path length at time t, m/s, shape (n_rays,).

    d|a - v t|/dt = -v . (a - v t)/|a - v t| per side.
    """
    rays = real.rays
    out = np.zeros(real.num_rays)
    for d0, v_rel, layout, elem in (
        (rays["d0_tx"], rays["v_rel_tx"], real.tx_layout, tx_element),
        (rays["d0_rx"], rays["v_rel_rx"], real.rx_layout, rx_element),
    ):
        diff = d0 - element_offset(layout, elem) - v_rel * t
        norm = np.linalg.norm(diff, axis=-1)
        out += -np.einsum("ij,ij->i", v_rel, diff) / norm
    return out


def los_vector(real: ClusterRealization, tx_element: int, rx_element: int,
               times) -> np.ndarray:
    """LoS vector D(t) between the two elements; shape (n_times, 3)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    d0 = (real.rx_ref - real.tx_ref
          - element_offset(real.tx_layout, tx_element)
          + element_offset(real.rx_layout, rx_element))
    return d0 + (real.v_rx - real.v_tx) * times[:, None]


def los_distance(real: ClusterRealization, tx_element: int, rx_element: int,
                 times) -> np.ndarray:
    return np.linalg.norm(los_vector(real, tx_element, rx_element, times), axis=-1)


def los_delay(real: ClusterRealization, tx_element: int, rx_element: int,
              t: float) -> float:
    """LoS propagation delay |D(t)|/c, seconds."""
    return float(los_distance(real, tx_element, rx_element, t)[0] / SPEED_OF_LIGHT)


def ray_powers_at(real: ClusterRealization, delays: np.ndarray,
                  visible: np.ndarray) -> np.ndarray:
    """Normalized ray powers exp(-tau/gamma) over the visible set.

    ``delays`` is (n_rays, n_times), ``visible`` a boolean (n_rays,) mask.
    Powers of invisible rays are zero; each time column sums to 1 (or 0 when
    nothing is visible).
    """
    w = np.exp(-delays / real.gamma_ds) * visible[:, None]
    total = w.sum(axis=0)
    return np.divide(w, total, out=np.zeros_like(w), where=total > 0)


def los_tap(real: ClusterRealization, t: float, tx_element: int = 1,
            rx_element: int = 1) -> RayTap:
    """Unit-power LoS tap of an element pair."""
    tau = los_delay(real, tx_element, rx_element, t)
    phase = float(np.mod(TWO_PI * real.fc_hz * tau, TWO_PI))
    return RayTap(tau, 1.0, phase, -1, -1, True)


def nlos_cir(real: ClusterRealization, t: float, tx_element: int = 1,
             rx_element: int = 1) -> list[RayTap]:
    """NLoS taps of an element pair: one per (visible cluster, ray).

    An empty visible set returns an empty list (deep non-stationarity).
    """
    if real.num_rays == 0:
        return []
    visible = real.visible_rays(tx_element, rx_element)
    delays = ray_delays(real, tx_element, rx_element, t)
    powers = ray_powers_at(real, delays, visible)[:, 0]
    delays = delays[:, 0]
    rays = real.rays
    taps = []
    for i in np.nonzero(visible)[0]:
        phase = float(np.mod(TWO_PI * real.fc_hz * delays[i], TWO_PI))
        taps.append(RayTap(float(delays[i]), float(np.sqrt(powers[i])), phase,
                           int(rays["cluster_ids"][i]), int(rays["ray_ids"][i])))
    return taps


def compose_cir(los: RayTap, nlos: list[RayTap], k_factor: float,
                pair: tuple[int, int], t: float, fc_hz: float) -> SubchannelCIR:
    """Rician combination of the LoS tap and the NLoS tap list."""
    return SubchannelCIR(pair=pair, t=t, k_factor=float(k_factor), fc_hz=fc_hz,
                         los_tap=los, nlos_taps=tuple(nlos))


def subchannel_cir(real: ClusterRealization, t: float, tx_element: int = 1,
                   rx_element: int = 1) -> SubchannelCIR:
    return compose_cir(los_tap(real, t, tx_element, rx_element),
                       nlos_cir(real, t, tx_element, rx_element),
                       real.k_factor, (tx_element, rx_element), t, real.fc_hz)


def transfer_function(cir: SubchannelCIR, f: float = 0.0) -> complex:
    """H(t, f) = sum over weighted taps of a * exp(j 2 pi (f_c - f) tau)."""
    total = 0.0 + 0.0j
    for tap in cir.weighted_taps():
        total += tap.amplitude * np.exp(1j * TWO_PI * (cir.fc_hz - f) * tap.delay)
    return complex(total)


@dataclass(frozen=True)
class FieldBundle:
    """Vectorized per-ray field factors over (swept element, time).

    g[n, e, t] = sqrt(P) * exp(j kappa d) with kappa = 2 pi (f_c - f)/c and d
    the geometric path length (invisible rays zeroed); u[e, t] the LoS phasor
    exp(j kappa D).  ``vlink`` carries the per-ray virtual-delay phasor so
    that transfer values are g * vlink summed over rays.
    """

    g: np.ndarray
    u: np.ndarray
    tau: np.ndarray
    los_tau: np.ndarray
    powers: np.ndarray
    visible: np.ndarray
    vlink: np.ndarray
    k_factor: float

    def transfer(self) -> np.ndarray:
        """Rician-weighted transfer values, shape (n_elements, n_times)."""
        w_los = np.sqrt(self.k_factor / (self.k_factor + 1.0))
        w_nlos = np.sqrt(1.0 / (self.k_factor + 1.0))
        h_nlos = np.einsum("net,n->et", self.g, self.vlink)
        return w_los * self.u + w_nlos * h_nlos


def ray_field(real: ClusterRealization, times, f: float = 0.0,
              tx_element: int = 1, rx_element: int = 1,
              sweep: str | None = None) -> FieldBundle:
    """Compute the field bundle for one pair or for a swept element axis.

    ``sweep`` of "tx"/"rx" evaluates every element on that side (the other
    side stays fixed); None keeps both fixed with a singleton element axis.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    rays = real.rays
    kappa = TWO_PI * (real.fc_hz - f) / SPEED_OF_LIGHT

    l_tx = element_offset(real.tx_layout, tx_element)[None, :]
    l_rx = element_offset(real.rx_layout, rx_element)[None, :]
    if sweep == "tx":
        l_tx = real.tx_offsets()
    elif sweep == "rx":
        l_rx = real.rx_offsets()
    elif sweep is not None:
        raise ValueError(f"sweep must be None, 'tx' or 'rx', got {sweep!r}")
    n_elem = max(l_tx.shape[0], l_rx.shape[0])
    n_rays, n_t = real.num_rays, times.size

    # visibility mask over (rays, swept elements)
    if n_rays == 0:
        visible = np.zeros((0, n_elem), dtype=bool)
    elif sweep == real.evolved_side:
        visible = real.visibility.matrix[:, rays["cluster_ids"]].T  # (n_rays, E)
    else:
        fixed = tx_element if real.evolved_side == "tx" else rx_element
        visible = np.broadcast_to(real.ray_visibility(fixed)[:, None], (n_rays, n_elem))

    def side_norms(d0, v_rel, offs):
        if offs.shape[0] == 1:
            diff = (d0 - offs[0])[:, None, :] - v_rel[:, None, :] * times[None, :, None]
            return np.linalg.norm(diff, axis=-1)[:, None, :]  # (n, 1, T)
        out = np.empty((n_rays, offs.shape[0], n_t))
        step = max(1, int(_BLOCK_FLOATS // max(1, n_rays * n_t * 3)))
        for lo in range(0, offs.shape[0], step):
            block = offs[lo: lo + step]
            diff = (d0[:, None, :] - block[None, :, :])[:, :, None, :] \
                - v_rel[:, None, None, :] * times[None, None, :, None]
            out[:, lo: lo + block.shape[0], :] = np.linalg.norm(diff, axis=-1)
        return out

    if n_rays:
        d = (side_norms(rays["d0_tx"], rays["v_rel_tx"], l_tx)
             + side_norms(rays["d0_rx"], rays["v_rel_rx"], l_rx))
        if d.shape[1] == 1 and n_elem > 1:
            d = np.broadcast_to(d, (n_rays, n_elem, n_t))
        tau = d / SPEED_OF_LIGHT + rays["tau_v"][:, None, None]
        w = np.exp(-tau / real.gamma_ds) * visible[:, :, None]
        total = w.sum(axis=0)
        powers = np.divide(w, total, out=np.zeros_like(w), where=total > 0)
        g = np.sqrt(powers) * np.exp(1j * kappa * d) * visible[:, :, None]
        vlink = np.exp(1j * TWO_PI * (real.fc_hz - f) * rays["tau_v"])
    else:
        tau = np.zeros((0, n_elem, n_t))
        powers = np.zeros((0, n_elem, n_t))
        g = np.zeros((0, n_elem, n_t), dtype=complex)
        vlink = np.zeros(0, dtype=complex)

    # LoS over the swept axis
    d0_los = (real.rx_ref - real.tx_ref) - l_tx + l_rx  # (E, 3) after broadcast
    if d0_los.shape[0] == 1 and n_elem > 1:
        d0_los = np.broadcast_to(d0_los, (n_elem, 3))
    d_los = np.linalg.norm(
        d0_los[:, None, :] + (real.v_rx - real.v_tx) * times[None, :, None], axis=-1)
    los_tau_ = d_los / SPEED_OF_LIGHT
    u = np.exp(1j * kappa * d_los)

    return FieldBundle(g=g, u=u, tau=tau, los_tau=los_tau_, powers=powers,
                       visible=np.ascontiguousarray(visible), vlink=vlink,
                       k_factor=real.k_factor)


def transfer_values(real: ClusterRealization, times, f: float = 0.0,
                    tx_element: int = 1, rx_element: int = 1,
                    sweep: str | None = None) -> np.ndarray:
    """Rician-weighted H(t, f); shape (n_times,) or (n_elements, n_times)."""
    bundle = ray_field(real, times, f, tx_element, rx_element, sweep)
    h = bundle.transfer()
    return h[0] if sweep is None else h


def pair_field(real: ClusterRealization, times, f: float = 0.0,
               tx_element: int = 1, rx_element: int = 1) -> dict:
    """Lean single-pair variant of :func:`ray_field` (no element axis).

    Returns g (n_rays, T), u (T,), powers (n_rays, T), h (T,) where g and u
    are the NLoS/LoS phasors used by the correlation statistics and h the
    Rician-weighted transfer value.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    rays = real.rays
    kappa = TWO_PI * (real.fc_hz - f) / SPEED_OF_LIGHT
    l_tx = element_offset(real.tx_layout, tx_element)
    l_rx = element_offset(real.rx_layout, rx_element)
    k = real.k_factor
    w_l2, w_n2 = k / (k + 1.0), 1.0 / (k + 1.0)

    diff_los = ((real.rx_ref - real.tx_ref - l_tx + l_rx)
                + (real.v_rx - real.v_tx) * times[:, None])
    d_los = np.sqrt(np.einsum("ij,ij->i", diff_los, diff_los))
    u = np.exp(1j * kappa * d_los)

    if real.num_rays == 0:
        empty = np.zeros((0, times.size))
        return {"g": empty.astype(complex), "u": u, "powers": empty,
                "h": np.sqrt(w_l2) * u, "w_l2": w_l2, "w_n2": w_n2}

    visible = real.visible_rays(tx_element, rx_element)
    diff_tx = (rays["d0_tx"] - l_tx)[:, None, :] - rays["v_rel_tx"][:, None, :] \
        * times[None, :, None]
    diff_rx = (rays["d0_rx"] - l_rx)[:, None, :] - rays["v_rel_rx"][:, None, :] \
        * times[None, :, None]
    d = (np.sqrt(np.einsum("nti,nti->nt", diff_tx, diff_tx))
         + np.sqrt(np.einsum("nti,nti->nt", diff_rx, diff_rx)))
    tau = d / SPEED_OF_LIGHT + rays["tau_v"][:, None]
    w = np.exp(-tau / real.gamma_ds) * visible[:, None]
    total = w.sum(axis=0)
    powers = np.divide(w, total, out=np.zeros_like(w), where=total > 0)
    g = np.sqrt(powers) * np.exp(1j * kappa * d)
    vlink = np.exp(1j * TWO_PI * (real.fc_hz - f) * rays["tau_v"])
    h = np.sqrt(w_l2) * u + np.sqrt(w_n2) * (g * vlink[:, None]).sum(axis=0)
    return {"g": g, "u": u, "powers": powers, "h": h, "w_l2": w_l2, "w_n2": w_n2}


def cir_rows(real: ClusterRealization, t: float, tx_element: int, rx_element: int):
    """CSV rows (t, tx, rx, cluster, ray, delay_s, amplitude, phase_rad, is_los)."""
    cir = subchannel_cir(real, t, tx_element, rx_element)
    for tap in cir.weighted_taps():
        yield (t, tx_element, rx_element, tap.cluster_id, tap.ray_id,
               tap.delay, tap.amplitude, tap.phase, int(tap.is_los))
