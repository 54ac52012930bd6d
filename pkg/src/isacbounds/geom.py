"""Coordinate transforms and analytic Jacobians.

Links local observables (delay, direction of arrival, Doppler shift) to the
global target position and velocity, for two-way links (co-located Tx/Rx)
and for separated Tx/Rx pairs. Local DoA is only valid inside the array
field of view (-pi/2, pi/2); targets behind the array raise OutOfFieldError.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidBistaticRangeError, OutOfFieldError, SingularGeometryError, UndefinedHeadingError
from .model import SPEED_OF_LIGHT, Node, TargetState, wrap_angle

C = SPEED_OF_LIGHT

# Denominator guard for the ellipse inversion, relative to the bistatic range.
BASELINE_DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True)
class LocalObservables:
    """Observables of one link. The last four fields are populated only for
    separated Tx/Rx geometry (baseline and ellipse quantities)."""

    delay: float          # s
    doa: float            # rad, in the receiver's local frame
    doppler: float        # Hz
    baseline: float | None = None        # m, Tx-Rx distance
    bistatic_range: float | None = None  # m, r_tx + r_rx
    look_angle: float | None = None      # rad, DoA measured from the Rx->Tx direction
    theta_shift: float | None = None     # rad, orientation minus Rx->Tx bearing


def global_to_local(p, node: Node) -> np.ndarray:
    """Express a global point in the node's local (boresight-aligned) frame."""
    dx = p[0] - node.position[0]
    dy = p[1] - node.position[1]
    c, s = math.cos(node.orientation), math.sin(node.orientation)
    return np.array([dx * c + dy * s, -dx * s + dy * c])


def local_doa(node: Node, p) -> tuple[float, float]:
    """(DoA in the node frame, range). Raises if coincident or out of field."""
    pn = global_to_local(p, node)
    r = float(np.hypot(pn[0], pn[1]))
    if r == 0.0:
        raise SingularGeometryError(f"target coincides with node {node.id!r}")
    doa = math.atan2(pn[1], pn[0])
    if abs(doa) >= math.pi / 2:
        raise OutOfFieldError(f"target behind array of node {node.id!r} (|doa| >= pi/2)")
    return doa, r


def mono_observables(node: Node, t: TargetState, wavelength: float) -> LocalObservables:
    """Two-way delay, local DoA, and Doppler for a co-located Tx/Rx node."""
    doa, r = local_doa(node, t.position)
    dx = t.position[0] - node.position[0]
    dy = t.position[1] - node.position[1]
    doppler = (2.0 / wavelength) * (dx * t.velocity[0] + dy * t.velocity[1]) / r
    return LocalObservables(delay=2.0 * r / C, doa=doa, doppler=doppler)


def bis_observables(tx: Node, rx: Node, t: TargetState, wavelength: float) -> LocalObservables:
    """One-way sum delay, Rx-local DoA, two-path Doppler, and the baseline /
    ellipse quantities of a separated Tx/Rx pair."""
    px, py = t.position
    dxt, dyt = px - tx.position[0], py - tx.position[1]
    dxr, dyr = px - rx.position[0], py - rx.position[1]
    r_tx = math.hypot(dxt, dyt)
    r_rx = math.hypot(dxr, dyr)
    if r_tx == 0.0 or r_rx == 0.0:
        raise SingularGeometryError("target coincides with tx or rx node")
    doa, _ = local_doa(rx, t.position)
    vx, vy = t.velocity
    doppler = (1.0 / wavelength) * ((vx * dxt + vy * dyt) / r_tx + (vx * dxr + vy * dyr) / r_rx)
    baseline = math.hypot(tx.position[0] - rx.position[0], tx.position[1] - rx.position[1])
    beta = math.atan2(tx.position[1] - rx.position[1], tx.position[0] - rx.position[0])
    theta_shift = wrap_angle(rx.orientation - beta)
    return LocalObservables(
        delay=(r_tx + r_rx) / C,
        doa=doa,
        doppler=doppler,
        baseline=baseline,
        bistatic_range=r_tx + r_rx,
        look_angle=wrap_angle(doa + theta_shift),
        theta_shift=theta_shift,
    )


def bistatic_range_to_distance(bistatic_range: float, baseline: float, look_angle: float) -> float:
    """Target-to-Rx distance from the range ellipse with foci at Tx and Rx."""
    if baseline < 0.0 or bistatic_range <= baseline:
        raise InvalidBistaticRangeError(
            f"bistatic range {bistatic_range} must exceed baseline {baseline}"
        )
    return (bistatic_range**2 - baseline**2) / (
        2.0 * (bistatic_range - baseline * math.cos(look_angle))
    )


def jac_mono_position(p_local) -> np.ndarray:
    """d(delay, doa)/d(local position) for a two-way link.

    Rows are (delay, doa), columns the local coordinates.
    """
    x, y = float(p_local[0]), float(p_local[1])
    r = math.hypot(x, y)
    if r == 0.0:
        raise SingularGeometryError("zero range")
    return np.array([
        [2.0 * x / (C * r), 2.0 * y / (C * r)],
        [-y / r**2, x / r**2],
    ])


def jac_bis_position(obs: LocalObservables) -> np.ndarray:
    """d(local position)/d(delay, doa) for a separated pair.

    Inverse-direction Jacobian: rows are the local coordinates, columns
    (delay, doa). Requires the ellipse quantities of bis_observables.
    """
    if obs.bistatic_range is None:
        raise SingularGeometryError("observables carry no bistatic geometry")
    rbar, l = obs.bistatic_range, obs.baseline
    th, tsh, thl = obs.doa, obs.theta_shift, obs.look_angle
    guard = rbar - l * math.cos(thl)
    if guard <= BASELINE_DEGENERACY_RTOL * rbar:
        raise SingularGeometryError("target on the tx-rx baseline (ellipse degenerates)")
    den = 2.0 * guard**2
    a = l**2 + rbar**2 - 2.0 * l * rbar * math.cos(thl)
    return np.array([
        [C * math.cos(th) * a / den,
         (l**2 - rbar**2) * (rbar * math.sin(th) + l * math.sin(tsh)) / den],
        [C * math.sin(th) * a / den,
         (l**2 - rbar**2) * (l * math.cos(tsh) - rbar * math.cos(th)) / den],
    ])


def jac_rotation(angle: float) -> np.ndarray:
    """Global-to-local frame Jacobian (plain rotation, orthonormal)."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, s], [-s, c]])


def jac_mono_state(node: Node, t: TargetState, wavelength: float) -> np.ndarray:
    """d(doppler, delay, doa)/d(x, y, vx, vy) for a two-way link.

    Delay and DoA rows do not depend on velocity; the Doppler row couples
    position and velocity through the radial projection.
    """
    dx = t.position[0] - node.position[0]
    dy = t.position[1] - node.position[1]
    r = math.hypot(dx, dy)
    if r == 0.0:
        raise SingularGeometryError(f"target coincides with node {node.id!r}")
    vx, vy = t.velocity
    lam = wavelength
    return np.array([
        [2.0 / lam * dy * (dy * vx - dx * vy) / r**3,
         2.0 / lam * dx * (dx * vy - dy * vx) / r**3,
         2.0 / lam * dx / r,
         2.0 / lam * dy / r],
        [2.0 / C * dx / r, 2.0 / C * dy / r, 0.0, 0.0],
        [-dy / r**2, dx / r**2, 0.0, 0.0],
    ])


def jac_bis_state(tx: Node, rx: Node, t: TargetState, wavelength: float) -> np.ndarray:
    """d(doppler, delay, doa)/d(x, y, vx, vy) for a separated pair."""
    px, py = t.position
    xt, yt = px - tx.position[0], py - tx.position[1]
    xr, yr = px - rx.position[0], py - rx.position[1]
    r_tx = math.hypot(xt, yt)
    r_rx = math.hypot(xr, yr)
    if r_tx == 0.0 or r_rx == 0.0:
        raise SingularGeometryError("target coincides with tx or rx node")
    vx, vy = t.velocity
    lam = wavelength
    return np.array([
        [vx / lam * (yt**2 / r_tx**3 + yr**2 / r_rx**3)
         - vy / lam * (xt * yt / r_tx**3 + xr * yr / r_rx**3),
         -vx / lam * (xt * yt / r_tx**3 + xr * yr / r_rx**3)
         + vy / lam * (xt**2 / r_tx**3 + xr**2 / r_rx**3),
         xt / (lam * r_tx) + xr / (lam * r_rx),
         yt / (lam * r_tx) + yr / (lam * r_rx)],
        [xt / (C * r_tx) + xr / (C * r_rx), yt / (C * r_tx) + yr / (C * r_rx), 0.0, 0.0],
        [-yr / r_rx**2, xr / r_rx**2, 0.0, 0.0],
    ])


def jac_polar_velocity(v) -> np.ndarray:
    """d(vx, vy)/d(speed, heading); determinant equals the speed."""
    speed = math.hypot(float(v[0]), float(v[1]))
    if speed == 0.0:
        raise UndefinedHeadingError("polar velocity Jacobian undefined at zero speed")
    heading = math.atan2(float(v[1]), float(v[0]))
    c, s = math.cos(heading), math.sin(heading)
    return np.array([[c, -speed * s], [s, speed * c]])
