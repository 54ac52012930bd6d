"""Independent numerical ground truth for the closed forms.

The Fisher matrix of one link is recomputed here from first principles: the
noiseless mean of the processed samples is differentiated by central finite
differences and assembled through the Gaussian-likelihood identity
I_ij = (2/sigma^2) * sum Re{(d mu/d theta_i)^H (d mu/d theta_j)}, valid
because the noise is circular complex Gaussian with parameter-independent
covariance. Nothing in this module reuses the closed-form expressions it is
meant to check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OracleDomainError
from .link import PARAM_LABELS, FisherMatrix, LinkGeometry, link_snr, steering_vector
from .model import SPEED_OF_LIGHT, ConstellationSpec, SystemParams, derive_frame

# Per-parameter absolute step floors: the five parameters live on wildly
# different scales (amplitude ~1e-7, delay ~1e-7 s, Doppler ~1e3 Hz).
STEP_FLOORS = {"alpha": 0.0, "phi": 1e-8, "doppler": 1e-3, "delay": 1e-12, "aoa": 1e-8}
REL_STEP = 1e-6


@dataclass(frozen=True)
class MeanSignalModel:
    """Noiseless mean of the processed receive grid for one link.

    theta holds (alpha, phi, doppler, delay, aoa) in that order. The
    transmit beam points at dod_local + pointing_offset of the geometry.
    """

    params: SystemParams
    geom: LinkGeometry
    theta: np.ndarray
    power_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float).copy())
        if self.theta.shape != (5,):
            raise ValueError("theta must hold (alpha, phi, doppler, delay, aoa)")

    @classmethod
    def from_link(cls, params: SystemParams, geom: LinkGeometry, rcs: float,
                  power_scale: float = 1.0, phase: float = 0.0,
                  doppler: float = 0.0) -> "MeanSignalModel":
        snr = link_snr(params, geom, rcs, power_scale)
        if geom.kind == "monostatic":
            delay = 2.0 * geom.range_rx / SPEED_OF_LIGHT
        else:
            delay = (geom.range_tx + geom.range_rx) / SPEED_OF_LIGHT
        theta = np.array([snr["alpha"], phase, doppler, delay, geom.doa_local])
        return cls(params=params, geom=geom, theta=theta, power_scale=power_scale)

    def beam_coupling(self) -> complex:
        """gamma = a^H(dod) w_T with w_T = sqrt(P_avg/N_T) a(dod + offset)."""
        fr = derive_frame(self.params)
        p_avg = self.power_scale * fr.p_avg
        nt = self.params.n_tx_ant
        a_true = steering_vector(nt, self.geom.dod_local)
        w_t = math.sqrt(p_avg / nt) * steering_vector(
            nt, self.geom.dod_local + self.geom.pointing_offset)
        return complex(np.vdot(a_true, w_t))


def mean_signal(m: MeanSignalModel, k: int, m_idx: int, theta=None) -> np.ndarray:
    """Mean receive vector (length N_R) at subcarrier k, symbol m_idx."""
    fr = derive_frame(m.params)
    if not (0 <= k < fr.k_subcarriers and 0 <= m_idx < fr.m_symbols):
        raise IndexError("subcarrier or symbol index out of the sensing grid")
    th = m.theta if theta is None else np.asarray(theta, dtype=float)
    alpha, phi, fd, tau, aoa = th
    gamma = m.beam_coupling()
    b = steering_vector(m.params.n_rx_ant, aoa)
    phase = (phi + 2.0 * math.pi * m_idx * m.params.symbol_duration * fd
             - 2.0 * math.pi * k * m.params.subcarrier_spacing * tau)
    return alpha * np.exp(1j * phase) * gamma * b


def _mean_grid(m: MeanSignalModel, theta) -> np.ndarray:
    """Mean of the full K x M x N_R grid, flattened. Vectorized mean_signal."""
    fr = derive_frame(m.params)
    alpha, phi, fd, tau, aoa = theta
    gamma = m.beam_coupling()
    b = steering_vector(m.params.n_rx_ant, aoa)
    ks = np.arange(fr.k_subcarriers)
    ms = np.arange(fr.m_symbols)
    w_time = np.exp(2j * math.pi * m.params.symbol_duration * fd * ms)
    w_freq = np.exp(-2j * math.pi * m.params.subcarrier_spacing * tau * ks)
    grid = (alpha * np.exp(1j * phi)) * np.einsum("k,m,n->kmn", w_freq, w_time, gamma * b)
    return grid.ravel()


def fim_numeric(m: MeanSignalModel, rel_step: float = REL_STEP) -> FisherMatrix:
    """5x5 Fisher matrix from central differences of the mean signal."""
    fr = derive_frame(m.params)
    sigma2 = fr.noise_var_postdiv
    theta = m.theta
    n_obs = fr.k_subcarriers * fr.m_symbols * m.params.n_rx_ant
    jac = np.empty((n_obs, 5), dtype=complex)
    for i, label in enumerate(PARAM_LABELS):
        h = max(STEP_FLOORS[label], rel_step * abs(theta[i]))
        if h == 0.0:
            raise OracleDomainError(f"zero step for parameter {label!r}")
        tp = theta.copy(); tp[i] += h
        tm = theta.copy(); tm[i] -= h
        fp = _mean_grid(m, tp)
        fm = _mean_grid(m, tm)
        if not (np.all(np.isfinite(fp.view(float))) and np.all(np.isfinite(fm.view(float)))):
            raise OracleDomainError(f"non-finite mean signal while perturbing {label!r}")
        jac[:, i] = (fp - fm) / (2.0 * h)
    fim = (2.0 / sigma2) * np.real(jac.conj().T @ jac)
    fim = (fim + fim.T) / 2.0
    return FisherMatrix(labels=PARAM_LABELS, values=fim)


def jacobian_numeric(f, x, rel_step: float = REL_STEP, abs_step=1e-6) -> np.ndarray:
    """Central-difference Jacobian of a vector map at x.

    abs_step may be a scalar or one floor per coordinate; the step for
    coordinate i is max(abs_step_i, rel_step * |x_i|).
    """
    x = np.asarray(x, dtype=float)
    floors = np.broadcast_to(np.asarray(abs_step, dtype=float), x.shape)
    f0 = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(f0)):
        raise OracleDomainError("non-finite function value at the expansion point")
    jac = np.empty((f0.size, x.size))
    for i in range(x.size):
        h = max(floors[i], rel_step * abs(x[i]))
        xp = x.copy(); xp[i] += h
        xm = x.copy(); xm[i] -= h
        fp = np.asarray(f(xp), dtype=float)
        fm = np.asarray(f(xm), dtype=float)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise OracleDomainError(f"non-finite function value near coordinate {i}")
        jac[:, i] = (fp - fm).ravel() / (2.0 * h)
    return jac


_CONSTELLATIONS = (
    ConstellationSpec.qpsk(),
    ConstellationSpec.qam(16),
    ConstellationSpec.qam(64),
)


def random_link_case(rng: np.random.Generator, kind: str | None = None
                     ) -> tuple[SystemParams, LinkGeometry, float]:
    """Random but physically sensible (params, geometry, rcs) draw.

    Frame sizes are kept small so that the numeric Fisher matrix stays
    cheap; the closed forms are exact in K and M, so small grids test them
    as well as full-size ones.
    """
    df = float(rng.uniform(15e3, 480e3))
    params = SystemParams(
        n_tx_ant=int(rng.integers(1, 17)),
        n_rx_ant=int(rng.integers(2, 17)),
        symbols_per_frame=int(rng.integers(8, 64)),
        active_subcarriers=int(rng.integers(8, 128)),
        carrier_freq=float(rng.uniform(1e9, 100e9)),
        subcarrier_spacing=df,
        symbol_duration=float(rng.uniform(1.0, 1.25)) / df,
        frac_subcarriers=float(rng.uniform(0.3, 1.0)),
        frac_symbols=float(rng.uniform(0.3, 1.0)),
        total_power=float(rng.uniform(1e-3, 1.0)),
        noise_psd=float(rng.uniform(1e-21, 1e-19)),
        tx_gain=float(rng.uniform(0.5, 4.0)),
        rx_gain=float(rng.uniform(0.5, 4.0)),
        constellation=_CONSTELLATIONS[int(rng.integers(0, len(_CONSTELLATIONS)))],
    )
    kind = kind or ("monostatic" if rng.random() < 0.5 else "bistatic")
    if kind == "monostatic":
        r = float(rng.uniform(5.0, 500.0))
        geom = LinkGeometry.monostatic(r, float(rng.uniform(-1.4, 1.4)))
    else:
        geom = LinkGeometry(
            kind="bistatic",
            range_tx=float(rng.uniform(5.0, 500.0)),
            range_rx=float(rng.uniform(5.0, 500.0)),
            doa_local=float(rng.uniform(-1.4, 1.4)),
        )
    rcs = float(rng.lognormal(0.0, 0.5))
    return params, geom, rcs
