"""Closed-form MMSE decision-feedback equalizer and its runtime loop."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .oqam import SIGMA_X2_HALF, is_real_slot, slice_pam


class SingularDesignError(RuntimeError):
    """Raised when the normal-equation system cannot be factorized."""


@dataclass
class UlFilterSet:
    """Per-subcarrier uplink design: complex feed-forward taps, real feedback
    taps, unit scalar precoder, shared latency, analytic MSE."""

    k_abs: np.ndarray
    f2: np.ndarray          # (n_used, L_f) complex
    b: np.ndarray           # (n_used, L_b) real
    nu: int
    mse: np.ndarray         # (n_used,)
    f1: float = 1.0

    @property
    def L_f(self):
        return self.f2.shape[1]

    @property
    def L_b(self):
        return self.b.shape[1]

    def w(self, i):
        """Stacked real design vector [Re f2; Im f2; b] of subcarrier row i."""
        return np.concatenate([self.f2[i].real, self.f2[i].imag, self.b[i]])

    def dump_csv(self, path, design="dfe-ul"):
        rows = []
        for i, k in enumerate(self.k_abs):
            for t in range(self.L_f):
                rows.append((design, "f2", int(k), t, self.f2[i, t].real, self.f2[i, t].imag))
            for t in range(self.L_b):
                rows.append((design, "b", int(k), t, self.b[i, t], 0.0))
        write_filter_csv(path, rows)


def write_filter_csv(path, rows):
    with open(path, "w") as fh:
        fh.write("design,filter,k,tap,re,im\n")
        for design, name, k, tap, re, im in rows:
            fh.write(f"{design},{name},{k},{tap},{re:.17g},{im:.17g}\n")


def solve_mmse(S, sigma_eta2):
    """Minimizer of E||w'(A x1 + B x2 + Xi noise) - x'[n-nu]||^2."""
    rhs = S.A @ (S.Psi @ S.e_target)
    M = S.normal_matrix(sigma_eta2)
    if sigma_eta2 > 0:
        try:
            w = scipy.linalg.cho_solve(scipy.linalg.cho_factor(M), rhs)
        except scipy.linalg.LinAlgError as exc:
            raise SingularDesignError(f"subcarrier {S.k}: {exc}") from exc
    else:
        w, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return w


def normal_residual(S, w, sigma_eta2):
    rhs = S.A @ (S.Psi @ S.e_target)
    return np.linalg.norm(S.normal_matrix(sigma_eta2) @ w - rhs) / np.linalg.norm(rhs)


def ul_mse_w(S, w, sigma_eta2):
    """Exact analytic MSE of an arbitrary stacked design vector w."""
    rhs = S.A @ (S.Psi @ S.e_target)
    return float(w @ S.normal_matrix(sigma_eta2) @ w - 2.0 * w @ rhs + S.sigma_x2)


def ul_mse_r_form(S, f2bar, b, sigma_eta2):
    """The printed quadratic form with the combined target/feedback vector r.

    Exact whenever the feedback window lies inside the input window
    (L >= L_b); trailing feedback taps outside the window add their own
    variance.
    """
    r, tail = target_vector(S.n_window, S.nu, b)
    quad = f2bar @ (S.sigma_x2 * S.gram_signal() + 0.5 * sigma_eta2 * S.gram_noise) @ f2bar
    return float(quad + S.sigma_x2 * (r @ r + tail @ tail - 2.0 * f2bar @ S.Hbar_kk @ r))


def target_vector(n_window, nu, b):
    """r = [0_nu, 1, b, 0__] truncated to the window; returns (r, overflow)."""
    r = np.zeros(n_window)
    r[nu] = 1.0
    n_fit = max(0, min(b.size, n_window - nu - 1))
    r[nu + 1:nu + 1 + n_fit] = b[:n_fit]
    return r, b[n_fit:]


def design_dfe(sets, sigma_eta2, k_abs=None):
    """MMSE feed-forward + feedback filters for every assembled subcarrier."""
    n = len(sets)
    L_f, L_b = sets[0].L_f, sets[0].L_b
    f2 = np.empty((n, L_f), dtype=complex)
    b = np.empty((n, L_b))
    mse = np.empty(n)
    for i, S in enumerate(sets):
        w = solve_mmse(S, sigma_eta2)
        f2[i] = w[:L_f] + 1j * w[L_f:2 * L_f]
        b[i] = w[2 * L_f:]
        mse[i] = ul_mse_w(S, w, sigma_eta2)
    if k_abs is None:
        k_abs = np.array([S.k for S in sets])
    return UlFilterSet(k_abs=np.asarray(k_abs), f2=f2, b=b, nu=sets[0].nu, mse=mse)


def design_linear(sets, sigma_eta2, k_abs=None):
    """Linear MMSE equalizer: the L_b = 0 special case."""
    if sets[0].L_b != 0:
        raise ValueError("linear design expects matrices assembled with L_b = 0")
    return design_dfe(sets, sigma_eta2, k_abs=k_abs)


def select_latency(builder, nu_range):
    """Pick the latency minimizing the mean analytic MSE; ties go low.

    ``builder(nu)`` must return the mean MSE across subcarriers for that
    latency.
    """
    nu_range = list(nu_range)
    if not nu_range:
        raise ValueError("empty latency range")
    scores = [(builder(nu), nu) for nu in nu_range]
    return min(scores, key=lambda t: (t[0], t[1]))[1]


def feedback_signs(L_b):
    """Per-tap feedback signs for real-slot and imaginary-slot outputs.

    The effective real channel seen through an imaginary-slot output flips
    sign on taps an odd number of half-symbols away, so the feedback must
    follow.  Which rule applies is decided by the parity of the output
    instant k + m + nu, not of the target slot.
    """
    d = np.arange(1, L_b + 1)
    return np.ones(L_b), (-1.0) ** d


def dfe_run(y, k_abs, filters, order, n_targets, mode="decision", truth=None):
    """Run the per-subcarrier DFE over analysis-bank outputs.

    y        : (n_used, T) complex subcarrier sequences at twice symbol rate
    filters  : UlFilterSet
    n_targets: number of half-symbol estimates per subcarrier
    mode     : 'decision' feeds back sliced estimates, 'genie' the true
               half-symbols (``truth`` required).
    Returns (estimates, decisions), both (n_used, n_targets) real arrays.
    """
    if mode not in ("decision", "genie"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "genie" and truth is None:
        raise ValueError("genie mode needs the transmitted half-symbols")
    k_arr = np.asarray(k_abs)
    nu, L_f, L_b = filters.nu, filters.L_f, filters.L_b
    n_used = y.shape[0]

    need = n_targets + nu
    if y.shape[1] < need:
        y = np.pad(y, ((0, 0), (0, need - y.shape[1])))
    z = np.empty((n_used, need), dtype=complex)
    for i in range(n_used):
        z[i] = np.convolve(y[i], np.conj(filters.f2[i]))[:need]

    m = np.arange(n_targets)
    out_real = is_real_slot(k_arr[:, None], (m + nu)[None, :])
    zwin = z[:, nu:nu + n_targets]
    raw = np.where(out_real, zwin.real, (-1.0) ** nu * zwin.imag)

    if L_b == 0:
        est = raw
        dec = slice_pam(est, order)
        return est, dec

    sign_real, sign_imag = feedback_signs(L_b)
    b_real = filters.b * sign_real
    b_imag = filters.b * sign_imag
    est = np.empty((n_used, n_targets))
    dec_pad = np.zeros((n_used, L_b + n_targets))
    for t in range(n_targets):
        window = dec_pad[:, t:t + L_b][:, ::-1]
        beff = np.where(out_real[:, t:t + 1], b_real, b_imag)
        est[:, t] = raw[:, t] - np.einsum("ij,ij->i", beff, window)
        fed = truth[:, t] if mode == "genie" else slice_pam(est[:, t], order)
        dec_pad[:, L_b + t] = fed
    return est, slice_pam(est, order)
