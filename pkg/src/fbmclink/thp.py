"""Tomlinson-Harashima precoding: OQAM modulo, transmit loop, downlink MSE,
and the two uplink-to-downlink duality transforms."""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .equalizer import feedback_signs, target_vector
from .oqam import apply_phase_grid, is_real_slot

logger = logging.getLogger(__name__)

POWER_TOL = 1e-9


class InfeasibleDualityError(RuntimeError):
    """The duality scaling has no valid positive solution."""


def tau_for_qam(order):
    """Modulo constant for a unit-energy square QAM.

    With per-dimension amplitudes (2i - L + 1)*s, s = sqrt(3/(2(order-1))),
    the wrap interval is 2*(max level + spacing/2) = 2*L*s; order 16 gives
    8/sqrt(10).
    """
    levels = int(round(np.sqrt(order)))
    return 2.0 * levels * np.sqrt(3.0 / (2.0 * (order - 1)))


def wrap_real(values, tau):
    """Reduce real values into [-tau/2, tau/2)."""
    values = np.asarray(values, dtype=float)
    return values - np.floor(values / tau + 0.5) * tau


def oqam_modulo(x, l, n, tau):
    """Modulo adapted to the staggered structure: wrap the component the
    slot actually carries (real when l+n is odd, imaginary otherwise) and
    emit it on that component."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    x = np.asarray(x)
    real_slot = is_real_slot(l, n)
    wrapped_re = wrap_real(x.real, tau)
    wrapped_im = wrap_real(x.imag, tau)
    return np.where(real_slot, wrapped_re + 0.0j, 1j * wrapped_im)


@dataclass
class DlFilterSet:
    """Per-subcarrier downlink design derived from an uplink one."""

    k_abs: np.ndarray
    f1: np.ndarray            # (n_used, L_f) complex transmit taps
    b: np.ndarray             # (n_used, L_b) real feedback taps
    f2: np.ndarray            # (n_used,) positive receive scalars
    gamma: np.ndarray         # (n_used,) scaling factors (equal for sum-MSE)
    tau: float
    sigma_v2: float
    mse: np.ndarray
    nu: int

    @property
    def L_b(self):
        return self.b.shape[1]

    @property
    def transmit_power(self):
        return float(np.sum(np.abs(self.f1) ** 2))

    def dump_csv(self, path, design="thp"):
        rows = []
        for i, k in enumerate(self.k_abs):
            for t in range(self.f1.shape[1]):
                rows.append((design, "f1", int(k), t, self.f1[i, t].real, self.f1[i, t].imag))
            for t in range(self.b.shape[1]):
                rows.append((design, "b", int(k), t, self.b[i, t], 0.0))
            rows.append((design, "f2", int(k), 0, self.f2[i], 0.0))
        from .equalizer import write_filter_csv
        write_filter_csv(path, rows)


def thp_precode(xp, k_abs, b, tau, nu=0):
    """Transmit feedback loop at the half-symbol rate.

    v'[m] = wrap(x'[m] - sum_d b_d * v'[m-d]) with the feedback signs of
    :func:`feedback_signs` chosen by the parity of the receive instant
    k + m + nu; the wrap bounds every output.
    """
    xp = np.asarray(xp, dtype=float)
    n_used, n_half = xp.shape
    L_b = b.shape[1] if b is not None else 0
    if L_b == 0:
        return wrap_real(xp, tau)
    sign_real, sign_imag = feedback_signs(L_b)
    b_real = b * sign_real
    b_imag = b * sign_imag
    m = np.arange(n_half)
    out_real = is_real_slot(np.asarray(k_abs)[:, None], (m + nu)[None, :])
    v_pad = np.zeros((n_used, L_b + n_half))
    for t in range(n_half):
        window = v_pad[:, t:t + L_b][:, ::-1]
        beff = np.where(out_real[:, t:t + 1], b_real, b_imag)
        v_pad[:, L_b + t] = wrap_real(
            xp[:, t] - np.einsum("ij,ij->i", beff, window), tau)
    return v_pad[:, L_b:]


def dl_transmit_filter(v, k_abs, f1):
    """Apply the per-subcarrier transmit taps to phased sequences:
    t[m] = sum_p conj(f1[p]) * v[m-p]."""
    phased = apply_phase_grid(v, k_abs)
    out = np.empty((phased.shape[0], phased.shape[1] + f1.shape[1] - 1), dtype=complex)
    for i in range(phased.shape[0]):
        out[i] = np.convolve(phased[i], np.conj(f1[i]))
    return out


def dl_receive(y, k_abs, f2, tau, nu, n_targets, modulo=True):
    """Scalar receive stage: scale, take the component carried by the
    output slot, and (for THP) wrap it back into the fundamental interval."""
    k_arr = np.asarray(k_abs)
    need = n_targets + nu
    if y.shape[1] < need:
        y = np.pad(y, ((0, 0), (0, need - y.shape[1])))
    scaled = np.asarray(f2)[:, None] * y[:, nu:nu + n_targets]
    m = np.arange(n_targets)
    out_real = is_real_slot(k_arr[:, None], (m + nu)[None, :])
    est = np.where(out_real, scaled.real, (-1.0) ** nu * scaled.imag)
    return wrap_real(est, tau) if modulo else est


def dl_mse(S, f1_triplet, b_k, f2_k, sigma_v2, sigma_eta2, hp_norm2):
    """Analytic downlink MSE for one subcarrier.

    ``f1_triplet`` holds the stacked-real transmit filters of subcarriers
    (k-1, k, k+1); missing neighbors are None.
    """
    f1_m1, f1_0, f1_p1 = f1_triplet
    quad = 0.0
    for f1_l, Hbar in ((f1_m1, S.Hbar_km1), (f1_0, S.Hbar_kk), (f1_p1, S.Hbar_kp1)):
        if f1_l is not None:
            tmp = Hbar.T @ f1_l
            quad += float(tmp @ tmp)
    s, tail = target_vector(S.n_window, S.nu, b_k)
    cross = float(f1_0 @ S.Hbar_kk @ s)
    return (f2_k ** 2 * (sigma_v2 * quad + 0.5 * sigma_eta2 * hp_norm2)
            + sigma_v2 * (s @ s + tail @ tail - 2.0 * f2_k * cross))


def _stacked(f2_row):
    return np.concatenate([f2_row.real, f2_row.imag])


def _own_terms(S, f2bar, b, sigma_eta2):
    """Pieces of the uplink MSE reused by both duality transforms."""
    quad_full = float(f2bar @ (S.sigma_x2 * S.gram_signal() + 0.5 * sigma_eta2 * S.gram_noise) @ f2bar)
    r, tail = target_vector(S.n_window, S.nu, b)
    rho = float(r @ r + tail @ tail)
    cross = float(f2bar @ S.Hbar_kk @ r)
    own_gram = float(np.sum((S.Hbar_kk.T @ f2bar) ** 2))
    return quad_full, rho, cross, own_gram


def _ici_terms(sets, ul):
    """gains[j][i]: power coupled from transmit filter of neighbor k+off
    (off = -1, +1 for j = 0, 1) into receive subcarrier i."""
    n = len(sets)
    gains = np.zeros((2, n))
    for i, S in enumerate(sets):
        for j, (off, Hbar) in enumerate(((-1, S.Hbar_km1), (1, S.Hbar_kp1))):
            li = i + off
            if 0 <= li < n:
                gains[j, i] = float(np.sum((Hbar.T @ _stacked(ul.f2[li])) ** 2))
    return gains


def _check_power(f1, m_u, label):
    power = float(np.sum(np.abs(f1) ** 2))
    if power > m_u * (1.0 + POWER_TOL):
        logger.warning("%s transmit power %.12g exceeds the budget %d", label, power, m_u)
    return power


def sum_mse_duality(ul, sets, sigma_v2, sigma_eta2, hp_norm2, tau):
    """Single scaling factor conserving the summed MSE across the band.

    gamma^2 = M_u * (sigma_eta^2/2) * ||h_p||^2 / delta with delta collecting
    the uplink quadratic terms minus the downlink ICI reuse of the same
    filters.
    """
    n = len(sets)
    gains = _ici_terms(sets, ul)
    delta = 0.0
    for i, S in enumerate(sets):
        f2bar = _stacked(ul.f2[i])
        quad_full, rho, cross, own_gram = _own_terms(S, f2bar, ul.b[i], sigma_eta2)
        dl_ici = own_gram + gains[0, i] + gains[1, i]
        delta += quad_full - sigma_v2 * dl_ici + (S.sigma_x2 - sigma_v2) * (rho - 2.0 * cross)
    if delta <= 0:
        raise InfeasibleDualityError(f"nonpositive duality denominator {delta:.6g}")
    gamma2 = n * 0.5 * sigma_eta2 * hp_norm2 / delta
    gamma = float(np.sqrt(gamma2))
    f1 = gamma * ul.f2
    f2 = np.full(n, 1.0 / gamma)
    _check_power(f1, n, "sum-MSE")
    mse = _dl_mse_band(sets, ul, f1, f2, sigma_v2, sigma_eta2, hp_norm2)
    return DlFilterSet(k_abs=ul.k_abs, f1=f1, b=ul.b.copy(), f2=f2,
                       gamma=np.full(n, gamma), tau=tau, sigma_v2=sigma_v2,
                       mse=mse, nu=ul.nu)


def sc_scaling_system(ul, sets, sigma_v2, sigma_eta2, hp_norm2):
    """Tridiagonal system for the squared per-subcarrier scaling factors.

    Returns (diag, lower, upper, rhs) with lower[i] coupling row i+1 to
    column i and upper[i] coupling row i to column i+1.
    """
    n = len(sets)
    gains = _ici_terms(sets, ul)
    diag = np.empty(n)
    for i, S in enumerate(sets):
        f2bar = _stacked(ul.f2[i])
        quad_full, rho, cross, own_gram = _own_terms(S, f2bar, ul.b[i], sigma_eta2)
        diag[i] = (quad_full - sigma_v2 * own_gram
                   + (S.sigma_x2 - sigma_v2) * (rho - 2.0 * cross))
    lower = -sigma_v2 * gains[0, 1:]    # couples gamma_{k-1} into row k
    upper = -sigma_v2 * gains[1, :-1]   # couples gamma_{k+1} into row k
    rhs = np.full(n, 0.5 * sigma_eta2 * hp_norm2)
    return diag, lower, upper, rhs


def sc_mse_duality(ul, sets, sigma_v2, sigma_eta2, hp_norm2, tau):
    """Per-subcarrier scaling factors conserving each subcarrier's MSE.

    Solving the tridiagonal system T @ gamma^2 = (sigma_eta^2/2)*||h_p||^2*1;
    the diagonal collects the subcarrier's own uplink terms, the
    off-diagonals the ICI injected by the neighbors' scaled filters.
    """
    n = len(sets)
    diag, lower, upper, rhs = sc_scaling_system(ul, sets, sigma_v2, sigma_eta2, hp_norm2)
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    try:
        gamma2 = scipy.linalg.solve_banded((1, 1), ab, rhs)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise InfeasibleDualityError(f"singular scaling system: {exc}") from exc
    if not np.all(np.isfinite(gamma2)) or np.any(gamma2 <= 0):
        raise InfeasibleDualityError(
            f"nonpositive scaling factors (min {gamma2.min():.6g})")
    gamma = np.sqrt(gamma2)
    f1 = gamma[:, None] * ul.f2
    f2 = 1.0 / gamma
    _check_power(f1, n, "SC-MSE")
    mse = _dl_mse_band(sets, ul, f1, f2, sigma_v2, sigma_eta2, hp_norm2)
    return DlFilterSet(k_abs=ul.k_abs, f1=f1, b=ul.b.copy(), f2=f2,
                       gamma=gamma, tau=tau, sigma_v2=sigma_v2, mse=mse, nu=ul.nu)


def _dl_mse_band(sets, ul, f1, f2, sigma_v2, sigma_eta2, hp_norm2):
    n = len(sets)
    out = np.empty(n)
    for i, S in enumerate(sets):
        triplet = (
            _stacked(f1[i - 1]) if i > 0 else None,
            _stacked(f1[i]),
            _stacked(f1[i + 1]) if i < n - 1 else None,
        )
        out[i] = dl_mse(S, triplet, ul.b[i], float(f2[i]), sigma_v2, sigma_eta2, hp_norm2)
    return out
