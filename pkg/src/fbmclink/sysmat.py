"""Real-valued stacked system matrices for the per-subcarrier MMSE designs.

All blocks are laid out for estimating a real half-symbol on the slot where
its carrier phase is 1 (k+n odd); the window vectors are ordered most
recent first, so row p of a filtering matrix produces output n-p.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import total_subchannel_response
from .oqam import SIGMA_X2_HALF


def convolution_matrix(g, rows):
    """Filtering matrix T with T[p, q] = g[q - p]: T @ window gives the
    sliding inner products [y[n], y[n-1], ...] for a most-recent-first
    window of length len(g) + rows - 1."""
    g = np.asarray(g)
    if g.size == 0:
        raise ValueError("empty filter")
    if rows < 1:
        raise ValueError("rows must be >= 1")
    n = g.size
    out = np.zeros((rows, n + rows - 1), dtype=g.dtype)
    for p in range(rows):
        out[p, p:p + n] = g
    return out


def phase_diag(first_slot_real, length):
    """The alternating 1/j phases of a most-recent-first window whose newest
    entry sits on a real slot (True) or an imaginary one (False)."""
    pattern = np.empty(length, dtype=complex)
    pattern[0::2] = 1.0 if first_slot_real else 1.0j
    pattern[1::2] = 1.0j if first_slot_real else 1.0
    return pattern


def realify(H, first_slot_real=True):
    """Stack real over imaginary parts of H @ diag(phases): the bar operator
    applied after re-inserting the OQAM phases of the window entries."""
    H = np.asarray(H)
    phased = H * phase_diag(first_slot_real, H.shape[1])[None, :]
    return np.vstack([phased.real, phased.imag])


def build_gamma(H_noise):
    """[[Re, -Im], [Im, Re]] block matrix of the complex noise-filtering map."""
    H_noise = np.asarray(H_noise)
    return np.block([[H_noise.real, -H_noise.imag], [H_noise.imag, H_noise.real]])


def noise_conv_matrix(h_k, L_f, half):
    """Map from the raw noise window (most recent first) to the L_f analysis
    outputs feeding the feed-forward filter: row p holds h_k shifted by
    p*M/2, so the width is (L_f-1)*M/2 + L_p."""
    h_k = np.asarray(h_k)
    width = (L_f - 1) * half + h_k.size
    out = np.zeros((L_f, width), dtype=complex)
    for p in range(L_f):
        out[p, p * half:p * half + h_k.size] = h_k
    return out


def overlap_matrix(n_window, L_b, nu):
    """Cross-correlation pattern between the current input window and the
    feedback window delayed by nu+1: ones where row = nu + 1 + column."""
    out = np.zeros((n_window, L_b))
    cols = np.arange(L_b)
    rows = nu + 1 + cols
    keep = rows < n_window
    out[rows[keep], cols[keep]] = 1.0
    return out


@dataclass
class SubchannelMatrixSet:
    """All design-time matrices for one receive subcarrier."""

    k: int
    Hbar_kk: np.ndarray
    Hbar_km1: np.ndarray
    Hbar_kp1: np.ndarray
    Gamma: np.ndarray
    A: np.ndarray
    B: np.ndarray
    Xi: np.ndarray
    Psi: np.ndarray
    L_f: int
    L_b: int
    N: int
    nu: int
    sigma_x2: float = SIGMA_X2_HALF

    @property
    def n_window(self):
        return self.N + self.L_f - 1

    @property
    def e_target(self):
        e = np.zeros(self.n_window + self.L_b)
        e[self.nu] = 1.0
        return e

    @property
    def gram_noise(self):
        return self.Gamma @ self.Gamma.T

    def gram_signal(self, include_neighbors=True):
        g = self.Hbar_kk @ self.Hbar_kk.T
        if include_neighbors:
            g = g + self.Hbar_km1 @ self.Hbar_km1.T + self.Hbar_kp1 @ self.Hbar_kp1.T
        return g

    def normal_matrix(self, sigma_eta2):
        return (self.A @ self.Psi @ self.A.T
                + self.sigma_x2 * (self.B @ self.B.T)
                + 0.5 * sigma_eta2 * (self.Xi @ self.Xi.T))

    def dump_csv(self, name, path):
        np.savetxt(path, getattr(self, name), delimiter=",")


def assemble(proto, ch, k, nu, L_f, L_b, used_set=None, sigma_x2=SIGMA_X2_HALF,
             responses=None):
    """Build the full matrix set for receive subcarrier k.

    ``used_set`` restricts which neighbors carry signal; a missing neighbor
    contributes an all-zero block (guard band).  The window phases follow
    the physical carrier of each stream: the own stream has phase 1 on the
    newest slot (design parity), the adjacent streams the opposite pattern.
    ``responses`` may cache the decimated responses keyed by the unordered
    subcarrier pair.
    """
    if responses is None:
        responses = {}

    def response(l):
        key = (min(l, k), max(l, k))
        if key not in responses:
            responses[key] = total_subchannel_response(proto, l, k, ch)
        return responses[key]

    g_kk = response(k)
    N = g_kk.size
    n_window = N + L_f - 1
    if not 0 <= nu <= n_window - 1:
        raise ValueError(f"latency {nu} outside [0, {n_window - 1}]")

    Hbar_kk = realify(convolution_matrix(g_kk, L_f), first_slot_real=True)
    blocks = {}
    for l in (k - 1, k + 1):
        if used_set is not None and l not in used_set:
            blocks[l] = np.zeros((2 * L_f, n_window))
        else:
            blocks[l] = realify(convolution_matrix(response(l), L_f), first_slot_real=False)

    half = proto.M // 2
    Gamma = build_gamma(noise_conv_matrix(proto.modulated(k), L_f, half))

    A = np.zeros((2 * L_f + L_b, n_window + L_b))
    A[:2 * L_f, :n_window] = Hbar_kk
    A[2 * L_f:, n_window:] = -np.eye(L_b)

    B = np.zeros((2 * L_f + L_b, 2 * n_window))
    B[:2 * L_f, :n_window] = blocks[k - 1]
    B[:2 * L_f, n_window:] = blocks[k + 1]

    Xi = np.zeros((2 * L_f + L_b, Gamma.shape[1]))
    Xi[:2 * L_f] = Gamma

    ups = overlap_matrix(n_window, L_b, nu)
    Psi = sigma_x2 * np.block([[np.eye(n_window), ups], [ups.T, np.eye(L_b)]])

    return SubchannelMatrixSet(
        k=k, Hbar_kk=Hbar_kk, Hbar_km1=blocks[k - 1], Hbar_kp1=blocks[k + 1],
        Gamma=Gamma, A=A, B=B, Xi=Xi, Psi=Psi,
        L_f=L_f, L_b=L_b, N=N, nu=nu, sigma_x2=sigma_x2)


def assemble_band(proto, ch, k_abs, nu, L_f, L_b, sigma_x2=SIGMA_X2_HALF):
    """Matrix sets for every used subcarrier, guard-aware at the band edges."""
    used = set(int(k) for k in k_abs)
    cache = {}
    return [assemble(proto, ch, int(k), nu, L_f, L_b, used_set=used,
                     sigma_x2=sigma_x2, responses=cache)
            for k in k_abs]


def with_latency(S, nu):
    """Copy of a matrix set re-targeted to a different latency; only the
    input covariance and the target selector change."""
    from dataclasses import replace
    if not 0 <= nu <= S.n_window - 1:
        raise ValueError(f"latency {nu} outside [0, {S.n_window - 1}]")
    ups = overlap_matrix(S.n_window, S.L_b, nu)
    Psi = S.sigma_x2 * np.block([[np.eye(S.n_window), ups], [ups.T, np.eye(S.L_b)]])
    return replace(S, Psi=Psi, nu=nu)
