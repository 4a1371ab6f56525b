"""Prototype filter design and the synthesis/analysis filter banks.

The direct form (per-subcarrier upsample/convolve) defines the semantics;
the FFT-based polyphase routines are fast paths that must match it to
numerical precision.  The prototype is a truncated root-raised-cosine with
unit L2 norm, which is the constant that enters the downlink noise terms.
"""

import numpy as np

from .oqam import apply_phase_grid


class PrototypeFilter:
    """Lowpass prototype, length K*M+1, symmetric, ||h||_2 = 1."""

    def __init__(self, coefficients, M, K):
        self.h = np.asarray(coefficients, dtype=float)
        self.M = int(M)
        self.K = int(K)
        if self.h.size != self.K * self.M + 1:
            raise ValueError(f"expected {K * M + 1} taps, got {self.h.size}")

    @property
    def length(self):
        return self.h.size

    @property
    def center(self):
        return (self.length - 1) // 2

    @property
    def norm2(self):
        return float(np.dot(self.h, self.h))

    def modulated(self, k):
        """Subcarrier filter h_k[r] = h_p[r] * exp(j*2*pi*k*(r - center)/M)."""
        if not 0 <= k < self.M:
            raise ValueError(f"subcarrier index {k} outside [0, {self.M})")
        r = np.arange(self.length)
        return self.h * np.exp(2j * np.pi * k * (r - self.center) / self.M)

    def dump_csv(self, path):
        np.savetxt(path, self.h, fmt="%.17g")


def _rrc_impulse(t, beta):
    """Closed-form RRC time response, symbol period 1, evaluated at t."""
    t = np.asarray(t, dtype=float)
    h = np.empty_like(t)
    tiny = 1e-9
    at_zero = np.abs(t) < tiny
    at_pole = np.abs(np.abs(4.0 * beta * t) - 1.0) < tiny
    regular = ~(at_zero | at_pole)
    h[at_zero] = 1.0 + beta * (4.0 / np.pi - 1.0)
    h[at_pole] = (beta / np.sqrt(2.0)) * (
        (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * beta))
        + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * beta))
    )
    tr = t[regular]
    num = np.sin(np.pi * tr * (1.0 - beta)) + 4.0 * beta * tr * np.cos(np.pi * tr * (1.0 + beta))
    den = np.pi * tr * (1.0 - (4.0 * beta * tr) ** 2)
    h[regular] = num / den
    return h


def design_prototype(M, K, rolloff=1.0):
    """Sample the RRC response at symbol spacing M and truncate to K*M+1 taps."""
    if M < 4 or (M & (M - 1)) != 0:
        raise ValueError(f"M must be a power of two >= 4, got {M}")
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if not 0.0 < rolloff <= 1.0:
        raise ValueError(f"rolloff must be in (0, 1], got {rolloff}")
    length = K * M + 1
    t = (np.arange(length) - (length - 1) / 2.0) / M
    h = _rrc_impulse(t, rolloff)
    h /= np.linalg.norm(h)
    return PrototypeFilter(h, M, K)


def modulated_filter(proto, k):
    return proto.modulated(k)


# ---------------------------------------------------------------------------
# direct-form reference

def _upsampled_length(n_sym, half):
    return (n_sym - 1) * half + 1


def sfb_direct(streams, k_abs, proto):
    """Reference SFB: upsample each complex subcarrier stream by M/2 and sum
    the convolutions with the modulated filters."""
    streams = np.atleast_2d(np.asarray(streams))
    half = proto.M // 2
    n_sym = streams.shape[1]
    out = np.zeros(_upsampled_length(n_sym, half) + proto.length - 1, dtype=complex)
    for row, k in enumerate(np.atleast_1d(k_abs)):
        up = np.zeros(_upsampled_length(n_sym, half), dtype=complex)
        up[::half] = streams[row]
        out += np.convolve(up, proto.modulated(k))
    return out


def afb_direct(signal, k_abs, proto):
    """Reference AFB: convolve with each modulated filter, keep every M/2-th
    sample starting at r = 0."""
    signal = np.asarray(signal)
    half = proto.M // 2
    rows = []
    for k in np.atleast_1d(k_abs):
        rows.append(np.convolve(signal, proto.modulated(k))[::half])
    return np.asarray(rows)


# ---------------------------------------------------------------------------
# polyphase fast path
#
# t[r] = sum_n h_p[r - n*M/2] * U_n[(r - n*M/2 - center) mod M]
# with U_n = M * ifft of the length-M symbol vector at time n.

def sfb_synthesize(streams, k_abs, proto):
    """Fast SFB on complex per-subcarrier streams (rows follow ``k_abs``)."""
    streams = np.atleast_2d(np.asarray(streams))
    M, half, L = proto.M, proto.M // 2, proto.length
    n_sym = streams.shape[1]
    full = np.zeros((M, n_sym), dtype=complex)
    full[np.atleast_1d(k_abs)] = streams
    U = M * np.fft.ifft(full, axis=0)
    idx = (np.arange(L) - proto.center) % M
    out = np.zeros(_upsampled_length(n_sym, half) + L - 1, dtype=complex)
    for c in range(2 * proto.K):
        taps = proto.h[c * half:(c + 1) * half]
        seg = out[c * half:(c + n_sym) * half].reshape(n_sym, half)
        seg += U[idx[c * half:(c + 1) * half], :].T * taps
    out[2 * proto.K * half::half][:n_sym] += proto.h[-1] * U[idx[-1], :]
    return out


def sfb_synthesize_real(streams, k_abs, proto):
    """Fast SFB on real half-symbol streams: applies the OQAM phases first."""
    return sfb_synthesize(apply_phase_grid(streams, k_abs), k_abs, proto)


def afb_analyze(signal, k_abs, proto, block=4096):
    """Fast AFB: per output instant fold the windowed signal modulo M and
    evaluate all subcarriers with one inverse FFT."""
    signal = np.asarray(signal, dtype=complex)
    M, half, L = proto.M, proto.M // 2, proto.length
    n_out = (signal.size + L - 2) // half + 1
    padded = np.concatenate([
        np.zeros(L - 1, dtype=complex),
        signal,
        np.zeros(max(0, (n_out - 1) * half + 1 - signal.size), dtype=complex),
    ])
    k_arr = np.atleast_1d(k_abs)
    rot = np.exp(-2j * np.pi * k_arr * proto.center / M)
    rev = proto.h[::-1]
    out = np.empty((k_arr.size, n_out), dtype=complex)
    n_fold = -(-L // M)
    for start in range(0, n_out, block):
        stop = min(start + block, n_out)
        pos = (np.arange(start, stop) * half)[:, None] + np.arange(L)[None, :]
        w = padded[pos] * rev
        folded = np.zeros((stop - start, n_fold * M), dtype=complex)
        folded[:, :L] = w[:, ::-1]
        folded = folded.reshape(stop - start, n_fold, M).sum(axis=1)
        spectrum = M * np.fft.ifft(folded, axis=1)
        out[:, start:stop] = rot[:, None] * spectrum[:, k_arr].T
    return out
