"""Network position and velocity error bounds.

Information from independent links adds: each link contributes a local
effective Fisher matrix, transformed to the global frame, and the network
bound is the trace of the inverse of the sum. Per-link velocity information
is rank one (a link only measures the radial velocity component), so
velocity bounds require at least two links with non-collinear geometry.

Degenerate links (target behind the array, coincident with a node, or on a
tx-rx baseline) contribute nothing and raise a structured flag instead of
aborting, so that coverage maps can render degenerate regions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geom
from .errors import (
    NoInformationError,
    OutOfFieldError,
    SingularGeometryError,
    UndefinedHeadingError,
)
from .link import FisherMatrix, LinkGeometry, link_snr
from .model import SPEED_OF_LIGHT, Node, Scenario, SystemParams, TargetState, derive_frame

C = SPEED_OF_LIGHT

# Relative determinant threshold below which a 2x2 information matrix is
# treated as singular (rank deficient up to roundoff).
DET_RTOL = 1e-12


@dataclass(frozen=True)
class SensingLink:
    """One information-bearing link of a scenario."""

    node_id: str   # reporting node: the monostatic node itself, or the rx
    tx: Node
    rx: Node
    kind: str      # "monostatic" | "bistatic"
    power_scale: float


def sensing_links(s: Scenario) -> tuple[SensingLink, ...]:
    """All sensing links of a scenario (monostatic nodes and tx/rx pairs)."""
    by_id = {n.id: n for n in s.nodes}
    links = []
    for n in s.nodes:
        if n.role == "monostatic":
            links.append(SensingLink(n.id, n, n, "monostatic", n.power_scale))
        elif n.role == "rx":
            tx = by_id[n.tx_id]
            links.append(SensingLink(n.id, tx, n, "bistatic", tx.power_scale))
    return tuple(links)


def link_geometry(link: SensingLink, t: TargetState) -> LinkGeometry:
    """Ranges and local DoA of a link for a given target."""
    doa, r_rx = geom.local_doa(link.rx, t.position)
    if link.kind == "monostatic":
        return LinkGeometry.monostatic(r_rx, doa)
    r_tx = math.hypot(t.position[0] - link.tx.position[0],
                      t.position[1] - link.tx.position[1])
    if r_tx == 0.0:
        raise SingularGeometryError("target coincides with the tx node")
    return LinkGeometry(kind="bistatic", range_tx=r_tx, range_rx=r_rx, doa_local=doa)


# ---------------------------------------------------------------------------
# closed-form single-link position bounds


def peb_mono_closed(p: SystemParams, node: Node, t: TargetState) -> float:
    """Closed-form position error bound of a single co-located Tx/Rx node."""
    doa, r = geom.local_doa(node, t.position)
    g = LinkGeometry.monostatic(r, doa)
    snr = link_snr(p, g, t.rcs, node.power_scale)["snr"]
    fr = derive_frame(p)
    k, m, nr = fr.k_subcarriers, fr.m_symbols, p.n_rx_ant
    eta = p.constellation.penalty
    crlb = 6.0 * eta / (math.pi**2 * k * m * nr * snr) * (
        C**2 / 16.0 / (p.subcarrier_spacing**2 * (k**2 - 1))
        + r**2 / ((nr**2 - 1) * math.cos(doa) ** 2)
    )
    return math.sqrt(crlb)


def peb_bis_closed(p: SystemParams, tx: Node, rx: Node, t: TargetState) -> float:
    """Closed-form position error bound of a single separated Tx/Rx pair."""
    obs = geom.bis_observables(tx, rx, t, p.wavelength)
    rbar, l, thl = obs.bistatic_range, obs.baseline, obs.look_angle
    guard = rbar - l * math.cos(thl)
    if guard <= geom.BASELINE_DEGENERACY_RTOL * rbar:
        return math.inf
    r_rx = math.hypot(t.position[0] - rx.position[0], t.position[1] - rx.position[1])
    g = LinkGeometry(kind="bistatic", range_tx=rbar - r_rx,
                     range_rx=r_rx, doa_local=obs.doa)
    snr = link_snr(p, g, t.rcs, tx.power_scale)["snr"]
    fr = derive_frame(p)
    k, m, nr = fr.k_subcarriers, fr.m_symbols, p.n_rx_ant
    eta = p.constellation.penalty
    a = l**2 + rbar**2 - 2.0 * l * rbar * math.cos(thl)
    crlb = (3.0 * eta * a / (8.0 * math.pi**2 * snr * nr * k * m * guard**4)) * (
        C**2 * a / (p.subcarrier_spacing**2 * (k**2 - 1))
        + 4.0 * (l**2 - rbar**2) ** 2 / ((nr**2 - 1) * math.cos(obs.doa) ** 2)
    )
    return math.sqrt(crlb)


# ---------------------------------------------------------------------------
# per-link information pieces (global frame)


def _efim_diag(p: SystemParams, snr: float, doa: float) -> tuple[float, float, float]:
    """Diagonal (doppler, delay, doa) of the local effective Fisher matrix."""
    fr = derive_frame(p)
    k, m, nr = fr.k_subcarriers, fr.m_symbols, p.n_rx_ant
    pref = snr * nr * k * m / p.constellation.penalty
    pi = math.pi
    return (
        pref * 2.0 * pi**2 * p.symbol_duration**2 * (m**2 - 1) / 3.0,
        pref * 2.0 * pi**2 * p.subcarrier_spacing**2 * (k**2 - 1) / 3.0,
        pref * pi**2 * (nr**2 - 1) * math.cos(doa) ** 2 / 6.0,
    )


def _mono_local_position_info(p: SystemParams, snr: float, p_local, doa: float) -> np.ndarray:
    """Local-frame position information of a co-located node, element form."""
    fr = derive_frame(p)
    k, m, nr = fr.k_subcarriers, fr.m_symbols, p.n_rx_ant
    x, y = float(p_local[0]), float(p_local[1])
    r2 = x * x + y * y
    xi = (math.pi**2 * k * m * nr * snr
          / (6.0 * p.constellation.penalty * C**2 * r2**2))
    cos2 = math.cos(doa) ** 2
    df2k = 16.0 * p.subcarrier_spacing**2 * (k**2 - 1)
    cnr = C**2 * (nr**2 - 1) * cos2
    return xi * np.array([
        [df2k * x * x * r2 + cnr * y * y, x * y * (df2k * r2 - cnr)],
        [x * y * (df2k * r2 - cnr), df2k * y * y * r2 + cnr * x * x],
    ])


def _bis_local_position_info(p: SystemParams, snr: float, obs: geom.LocalObservables) -> np.ndarray:
    """Local-frame position information of a separated pair via the inverse
    of the analytic (delay, doa) -> local-position Jacobian."""
    _, d_tau, d_theta = _efim_diag(p, snr, obs.doa)
    j_inv = geom.jac_bis_position(obs)  # raises on baseline degeneracy
    j_fwd = np.linalg.inv(j_inv)
    return j_fwd.T @ np.diag([d_tau, d_theta]) @ j_fwd


def _k_mono(p: SystemParams, snr: float, doa: float, dx: float, dy: float,
            r: float, vx, vy):
    """Coefficient of the rank-one velocity information of a co-located
    node; vx, vy may be arrays over Monte-Carlo headings."""
    fr = derive_frame(p)
    k, m, nr = fr.k_subcarriers, fr.m_symbols, p.n_rx_ant
    ts, lam = p.symbol_duration, p.wavelength
    cos2 = math.cos(doa) ** 2
    cross = dx * vy - dy * vx
    num = (8.0 * math.pi**2 * snr * nr * k * m * ts**2
           * (m**2 - 1) * (nr**2 - 1) * cos2)
    den = p.constellation.penalty * (
        48.0 * ts**2 * (m**2 - 1) * cross**2
        + 3.0 * (nr**2 - 1) * r**2 * lam**2 * cos2
    )
    return num / den


def _k_bis(p: SystemParams, snr: float, doa: float, dxt: float, dyt: float,
           dxn: float, dyn: float, r_tx: float, r_rx: float, vx, vy):
    """Coefficient of the rank-one velocity information of a separated pair;
    vx, vy may be arrays over Monte-Carlo headings."""
    fr = derive_frame(p)
    k, m, nr = fr.k_subcarriers, fr.m_symbols, p.n_rx_ant
    ts, df, lam = p.symbol_duration, p.subcarrier_spacing, p.wavelength
    cos2 = math.cos(doa) ** 2
    a_coef = (2.0 * math.pi**2 * df**2 * ts**2 * snr
              * k * (k**2 - 1) * m * (m**2 - 1) * nr * (nr**2 - 1)
              / p.constellation.penalty)
    dot_tn = dxn * dxt + dyn * dyt
    rn2 = dxn * dxn + dyn * dyn
    rt2 = dxt * dxt + dyt * dyt
    q_n = vy * dxn - vx * dyn
    q_t = vy * dxt - vx * dyt
    u1 = (r_tx**4 * q_n * rn2 + r_rx * r_tx**3 * q_n * dot_tn
          + r_rx**3 * r_tx * q_t * dot_tn + r_rx**4 * q_t * rt2)
    u2 = (C**2 * ts**2 * (m**2 - 1) * r_rx**2 * q_t**2 * (dxt * dyn - dxn * dyt) ** 2
          + lam**2 * df**2 * (k**2 - 1) * r_tx**4
          * (r_tx * rn2 + r_rx * dot_tn) ** 2)
    num = a_coef * r_tx**4 * cos2 * (r_tx * rn2 + r_rx * dot_tn) ** 2
    den = (12.0 * df**2 * ts**2 * (k**2 - 1) * (m**2 - 1) * u1**2
           + 3.0 * (nr**2 - 1) * r_rx**2 * r_tx**2 * cos2 * u2)
    return num / den


def node_velocity_efim(link: SensingLink, t: TargetState, p: SystemParams) -> np.ndarray:
    """Rank-one velocity information of a single link, global frame."""
    g = link_geometry(link, t)
    snr = link_snr(p, g, t.rcs, link.power_scale)["snr"]
    vx, vy = t.velocity
    if link.kind == "monostatic":
        dx = t.position[0] - link.rx.position[0]
        dy = t.position[1] - link.rx.position[1]
        kn = _k_mono(p, snr, g.doa_local, dx, dy, g.range_rx, vx, vy)
        w = np.array([dx, dy])
    else:
        obs = geom.bis_observables(link.tx, link.rx, t, p.wavelength)
        guard = obs.bistatic_range - obs.baseline * math.cos(obs.look_angle)
        if guard <= geom.BASELINE_DEGENERACY_RTOL * obs.bistatic_range:
            raise SingularGeometryError("target on the tx-rx baseline")
        dxt = t.position[0] - link.tx.position[0]
        dyt = t.position[1] - link.tx.position[1]
        dxn = t.position[0] - link.rx.position[0]
        dyn = t.position[1] - link.rx.position[1]
        kn = _k_bis(p, snr, g.doa_local, dxt, dyt, dxn, dyn,
                    g.range_tx, g.range_rx, vx, vy)
        w = np.array([g.range_tx * dxn + g.range_rx * dxt,
                      g.range_tx * dyn + g.range_rx * dyt])
    return kn * np.outer(w, w)


def _link_state_info(link: SensingLink, t: TargetState, p: SystemParams) -> np.ndarray:
    """4x4 information over (x, y, vx, vy) of one link, global frame."""
    g = link_geometry(link, t)
    snr = link_snr(p, g, t.rcs, link.power_scale)["snr"]
    e3 = np.diag(_efim_diag(p, snr, g.doa_local))
    if link.kind == "monostatic":
        j = geom.jac_mono_state(link.rx, t, p.wavelength)
    else:
        j = geom.jac_bis_state(link.tx, link.rx, t, p.wavelength)
    return j.T @ e3 @ j


# ---------------------------------------------------------------------------
# network aggregation


@dataclass
class BoundReport:
    """Bounds and per-link contributions for one target."""

    peb: float
    veb: float | None
    crlb_heading: float | None
    position_efim: np.ndarray
    velocity_efim: np.ndarray | None
    per_node: list[dict] = field(default_factory=list)
    flags: tuple[str, ...] = ()


def _position_pieces(s: Scenario, t: TargetState):
    """Per-link global-frame position information with flags."""
    contributions = []
    flags = []
    for link in sensing_links(s):
        entry = {"node_id": link.node_id, "kind": link.kind,
                 "snr_db": None, "position_info": None}
        try:
            g = link_geometry(link, t)
            snr = link_snr(s.params, g, t.rcs, link.power_scale)["snr"]
            entry["snr_db"] = 10.0 * math.log10(snr)
            if link.kind == "monostatic":
                p_local = geom.global_to_local(t.position, link.rx)
                local = _mono_local_position_info(s.params, snr, p_local, g.doa_local)
            else:
                obs = geom.bis_observables(link.tx, link.rx, t, s.params.wavelength)
                local = _bis_local_position_info(s.params, snr, obs)
            j_rot = geom.jac_rotation(link.rx.orientation)
            entry["position_info"] = j_rot.T @ local @ j_rot
        except OutOfFieldError:
            flags.append(f"{link.node_id}: out-of-field")
        except SingularGeometryError as exc:
            flags.append(f"{link.node_id}: {exc}")
        contributions.append(entry)
    return contributions, flags


def network_position_efim(s: Scenario, t: TargetState) -> FisherMatrix:
    """Sum of per-link position information in the global frame."""
    contributions, _ = _position_pieces(s, t)
    infos = [c["position_info"] for c in contributions if c["position_info"] is not None]
    if not infos:
        raise NoInformationError("no link contributes position information")
    total = np.zeros((2, 2))
    for m in infos:
        total += m
    return FisherMatrix(labels=("x", "y"), values=total)


def _trace_inverse_2x2(m: np.ndarray) -> float:
    """Trace of the inverse, +inf when numerically singular."""
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if det <= DET_RTOL * abs(m[0, 0] * m[1, 1]) or not math.isfinite(det):
        return math.inf
    return (m[0, 0] + m[1, 1]) / det


def network_peb(s: Scenario, t: TargetState) -> float:
    """Network position error bound, sqrt of the trace of the inverse
    summed information; +inf when the summed information is singular."""
    efim = network_position_efim(s, t)
    return math.sqrt(_trace_inverse_2x2(efim.values))


def _velocity_pieces(s: Scenario, t: TargetState):
    contributions = []
    flags = []
    for link in sensing_links(s):
        try:
            contributions.append((link.node_id, node_velocity_efim(link, t, s.params)))
        except OutOfFieldError:
            flags.append(f"{link.node_id}: out-of-field")
        except SingularGeometryError as exc:
            flags.append(f"{link.node_id}: {exc}")
    return contributions, flags


def _polar_crlbs(vxx: float, vxy: float, vyy: float, speed: float, heading: float):
    """(speed CRLB, heading CRLB) from summed velocity information."""
    det = vxx * vyy - vxy * vxy
    if det <= DET_RTOL * abs(vxx * vyy) or not math.isfinite(det):
        return math.inf, math.inf
    c, sn = math.cos(heading), math.sin(heading)
    s2 = math.sin(2.0 * heading)
    crlb_speed = (vyy * c * c + vxx * sn * sn - vxy * s2) / det
    crlb_heading = (vxx * c * c + vyy * sn * sn + vxy * s2) / (det * speed**2)
    return crlb_speed, crlb_heading


def network_velocity_bounds(s: Scenario, t: TargetState) -> dict:
    """Velocity error bound and heading CRLB from per-link rank-one pieces.

    Requires a moving target; returns +inf values with a flag when the
    summed velocity information is numerically singular.
    """
    if t.speed == 0.0:
        raise UndefinedHeadingError("velocity bounds undefined at zero speed")
    contributions, flags = _velocity_pieces(s, t)
    if not contributions:
        raise NoInformationError("no link contributes velocity information")
    total = np.zeros((2, 2))
    for _, m in contributions:
        total += m
    crlb_speed, crlb_heading = _polar_crlbs(
        total[0, 0], total[0, 1], total[1, 1], t.speed, t.heading)
    if math.isinf(crlb_speed):
        flags = flags + ["velocity-info-singular"]
    return {
        "veb": math.sqrt(crlb_speed),
        "crlb_heading": crlb_heading,
        "velocity_efim": total,
        "flags": tuple(flags),
    }


def network_velocity_bounds_exact(s: Scenario, t: TargetState) -> dict:
    """Velocity bound from the summed 4x4 state information.

    Sums the per-link (x, y, vx, vy) information, removes position by Schur
    complement, and reads the speed bound in polar coordinates. Tighter
    than network_velocity_bounds, which discards cross-information between
    links by reducing each link to its own rank-one velocity piece.
    """
    if t.speed == 0.0:
        raise UndefinedHeadingError("velocity bounds undefined at zero speed")
    total = np.zeros((4, 4))
    flags = []
    n_ok = 0
    for link in sensing_links(s):
        try:
            total += _link_state_info(link, t, s.params)
            n_ok += 1
        except OutOfFieldError:
            flags.append(f"{link.node_id}: out-of-field")
        except SingularGeometryError as exc:
            flags.append(f"{link.node_id}: {exc}")
    if n_ok == 0:
        raise NoInformationError("no link contributes state information")
    i_p = total[:2, :2]
    i_pv = total[:2, 2:]
    i_v = total[2:, 2:]
    det_p = i_p[0, 0] * i_p[1, 1] - i_p[0, 1] * i_p[1, 0]
    if det_p <= DET_RTOL * abs(i_p[0, 0] * i_p[1, 1]) or not math.isfinite(det_p):
        return {"veb_exact": math.inf, "flags": tuple(flags + ["position-info-singular"])}
    ev = i_v - i_pv.T @ np.linalg.solve(i_p, i_pv)
    j_pol = geom.jac_polar_velocity(t.velocity)
    m_pol = j_pol.T @ ev @ j_pol
    det = m_pol[0, 0] * m_pol[1, 1] - m_pol[0, 1] * m_pol[1, 0]
    if det <= DET_RTOL * abs(m_pol[0, 0] * m_pol[1, 1]) or not math.isfinite(det):
        return {"veb_exact": math.inf, "flags": tuple(flags + ["velocity-info-singular"])}
    return {"veb_exact": math.sqrt(m_pol[1, 1] / det), "flags": tuple(flags)}


def evaluate_bounds(s: Scenario, t: TargetState) -> BoundReport:
    """Full report for one target: position bound always, velocity bounds
    when the target moves."""
    contributions, flags = _position_pieces(s, t)
    infos = [c["position_info"] for c in contributions if c["position_info"] is not None]
    if not infos:
        raise NoInformationError("no link contributes position information")
    pos_total = np.zeros((2, 2))
    for m in infos:
        pos_total += m
    peb = math.sqrt(_trace_inverse_2x2(pos_total))
    if math.isinf(peb):
        flags = flags + ["position-info-singular"]

    veb = crlb_heading = vel_total = None
    if t.speed > 0.0:
        vel_pieces, vel_flags = _velocity_pieces(s, t)
        if not vel_pieces:
            raise NoInformationError("no link contributes velocity information")
        vel_by_id = dict(vel_pieces)
        for c in contributions:
            c["velocity_info"] = vel_by_id.get(c["node_id"])
        vel_total = np.zeros((2, 2))
        for _, m in vel_pieces:
            vel_total += m
        crlb_speed, crlb_heading = _polar_crlbs(
            vel_total[0, 0], vel_total[0, 1], vel_total[1, 1], t.speed, t.heading)
        veb = math.sqrt(crlb_speed)
        if math.isinf(crlb_speed):
            vel_flags = vel_flags + ["velocity-info-singular"]
        flags = flags + [f for f in vel_flags if f not in flags]

    return BoundReport(
        peb=peb,
        veb=veb,
        crlb_heading=crlb_heading,
        position_efim=pos_total,
        velocity_efim=vel_total,
        per_node=contributions,
        flags=tuple(flags),
    )


def heading_velocity_metrics(s: Scenario, position, speed: float,
                             headings: np.ndarray, rcs: float = 1.0) -> dict:
    """Velocity bound and heading CRLB over an array of headings.

    Vectorized over headings for Monte-Carlo averaging: per-link geometry is
    computed once, only the velocity-dependent coefficient varies. Singular
    headings are reported in the mask; callers decide how to aggregate.
    """
    if speed <= 0.0:
        raise UndefinedHeadingError("velocity bounds undefined at zero speed")
    headings = np.asarray(headings, dtype=float)
    vx = speed * np.cos(headings)
    vy = speed * np.sin(headings)
    probe = TargetState(position=tuple(position), rcs=rcs)
    vxx = np.zeros_like(headings)
    vxy = np.zeros_like(headings)
    vyy = np.zeros_like(headings)
    flags = []
    n_ok = 0
    for link in sensing_links(s):
        try:
            g = link_geometry(link, probe)
            snr = link_snr(s.params, g, probe.rcs, link.power_scale)["snr"]
            if link.kind == "monostatic":
                dx = position[0] - link.rx.position[0]
                dy = position[1] - link.rx.position[1]
                kn = _k_mono(s.params, snr, g.doa_local, dx, dy, g.range_rx, vx, vy)
                w1, w2 = dx, dy
            else:
                obs = geom.bis_observables(link.tx, link.rx, probe, s.params.wavelength)
                guard = obs.bistatic_range - obs.baseline * math.cos(obs.look_angle)
                if guard <= geom.BASELINE_DEGENERACY_RTOL * obs.bistatic_range:
                    raise SingularGeometryError("target on the tx-rx baseline")
                dxt = position[0] - link.tx.position[0]
                dyt = position[1] - link.tx.position[1]
                dxn = position[0] - link.rx.position[0]
                dyn = position[1] - link.rx.position[1]
                kn = _k_bis(s.params, snr, g.doa_local, dxt, dyt, dxn, dyn,
                            g.range_tx, g.range_rx, vx, vy)
                w1 = g.range_tx * dxn + g.range_rx * dxt
                w2 = g.range_tx * dyn + g.range_rx * dyt
            vxx += kn * w1 * w1
            vxy += kn * w1 * w2
            vyy += kn * w2 * w2
            n_ok += 1
        except OutOfFieldError:
            flags.append(f"{link.node_id}: out-of-field")
        except SingularGeometryError as exc:
            flags.append(f"{link.node_id}: {exc}")
    if n_ok == 0:
        raise NoInformationError("no link contributes velocity information")
    det = vxx * vyy - vxy * vxy
    singular = (det <= DET_RTOL * np.abs(vxx * vyy)) | ~np.isfinite(det)
    safe_det = np.where(singular, 1.0, det)
    c, sn = np.cos(headings), np.sin(headings)
    s2 = np.sin(2.0 * headings)
    crlb_speed = np.where(singular, np.inf, (vyy * c * c + vxx * sn * sn - vxy * s2) / safe_det)
    crlb_heading = np.where(
        singular, np.inf, (vxx * c * c + vyy * sn * sn + vxy * s2) / (safe_det * speed**2))
    return {
        "veb": np.sqrt(crlb_speed),
        "crlb_heading": crlb_heading,
        "singular": singular,
        "flags": tuple(flags),
    }
