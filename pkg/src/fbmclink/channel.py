"""Multipath channel generation and per-subcarrier total responses."""

from dataclasses import dataclass

import numpy as np
import scipy.signal

# 6-tap COST 207 bad-urban reference profile: (delay us, relative power dB).
# Delays are rounded to the nearest sample of the configured rate and each
# realization is renormalized to unit energy.
BU6_DELAYS_US = np.array([0.0, 0.4, 1.0, 1.6, 5.0, 6.6])
BU6_POWERS_DB = np.array([-3.0, 0.0, -3.0, -5.0, -2.0, -4.0])


@dataclass
class ChannelRealization:
    taps: np.ndarray
    f_s: float

    @property
    def length(self):
        return self.taps.size

    def dump_csv(self, path):
        data = np.column_stack([np.arange(self.length), self.taps.real, self.taps.imag])
        np.savetxt(path, data, fmt=["%d", "%.17g", "%.17g"], delimiter=",")


def generate_bu_channel(rng, f_s, L_ch, delays_us=BU6_DELAYS_US, powers_db=BU6_POWERS_DB):
    """Rayleigh taps on the bad-urban power-delay profile, unit total energy."""
    if L_ch < 1:
        raise ValueError("L_ch must be >= 1")
    positions = np.round(np.asarray(delays_us) * 1e-6 * f_s).astype(int)
    if positions.max() >= L_ch:
        raise ValueError(
            f"profile delay {delays_us[positions.argmax()]}us exceeds the "
            f"{L_ch / f_s * 1e6:.2f}us channel window")
    amp = np.sqrt(10.0 ** (np.asarray(powers_db) / 10.0) / 2.0)
    gains = amp * (rng.standard_normal(positions.size) + 1j * rng.standard_normal(positions.size))
    taps = np.zeros(L_ch, dtype=complex)
    np.add.at(taps, positions, gains)
    taps /= np.linalg.norm(taps)
    return ChannelRealization(taps, f_s)


def ideal_channel(f_s=1.0):
    return ChannelRealization(np.array([1.0 + 0.0j]), f_s)


def apply_channel(signal, ch, sigma_eta2, rng=None):
    """Convolve with the channel taps and add circular complex AWGN of
    variance ``sigma_eta2`` per complex sample."""
    if sigma_eta2 < 0:
        raise ValueError("noise variance must be >= 0")
    out = scipy.signal.oaconvolve(np.asarray(signal), ch.taps)
    if sigma_eta2 > 0:
        if rng is None:
            raise ValueError("rng required when sigma_eta2 > 0")
        scale = np.sqrt(sigma_eta2 / 2.0)
        out = out + scale * (rng.standard_normal(out.size) + 1j * rng.standard_normal(out.size))
    return out


def response_length(L_p, L_ch, M):
    """Length N of the decimated subcarrier-to-subcarrier response."""
    return -(-(2 * (L_p - 1) + L_ch) // (M // 2))


def total_subchannel_response(proto, l, k, ch, pad_to=None):
    """Decimated total response from transmit subcarrier l into receive
    subcarrier k: (h_l * h_ch * h_k)[r] kept at r = n*M/2 from r = 0."""
    if abs(l - k) > 1:
        raise ValueError(f"only adjacent crossings are modeled, got l={l}, k={k}")
    half = proto.M // 2
    g_full = np.convolve(np.convolve(proto.modulated(l), ch.taps), proto.modulated(k))
    g = g_full[::half]
    n = pad_to or response_length(proto.length, ch.length, proto.M)
    if g.size < n:
        g = np.concatenate([g, np.zeros(n - g.size, dtype=complex)])
    return g[:n]
