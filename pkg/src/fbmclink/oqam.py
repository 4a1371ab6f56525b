"""Square-QAM mapping and OQAM staggering utilities.

Symbols are Gray-mapped, scaled to unit average energy per complex symbol,
so each real half-symbol has variance 1/2 (``SIGMA_X2_HALF``).  Subcarrier
indices used for parity decisions are always the absolute indices in the
full M-point bank, not positions inside the used band.
"""

import numpy as np

# Variance of one real half-symbol under unit complex-symbol energy.
SIGMA_X2_HALF = 0.5

_SUPPORTED_ORDERS = (4, 16, 64)


def _pam_scale(order):
    # unit complex energy: E|d|^2 = 2*(L^2-1)/3 * s^2 = 1 with L = sqrt(order)
    levels_per_dim = int(round(np.sqrt(order)))
    return np.sqrt(3.0 / (2.0 * (order - 1))), levels_per_dim


def pam_levels(order):
    """Per-dimension PAM amplitudes of a unit-energy square QAM, ascending."""
    s, n = _pam_scale(order)
    return (2.0 * np.arange(n) - n + 1) * s


def _gray_code(i):
    return i ^ (i >> 1)


def _gray_to_index(order_1d):
    # bits value (Gray code) -> level index
    out = np.zeros(order_1d, dtype=np.int64)
    for idx in range(order_1d):
        out[_gray_code(idx)] = idx
    return out


def constellation(order):
    """Gray-mapped constellation table of size ``order``, indexed by the
    integer formed from the symbol bits (I bits first, then Q bits)."""
    if order not in _SUPPORTED_ORDERS:
        raise ValueError(f"constellation order must be one of {_SUPPORTED_ORDERS}, got {order}")
    levels = pam_levels(order)
    n = levels.size
    g2i = _gray_to_index(n)
    i_idx = g2i[np.arange(order) >> (n.bit_length() - 1)]
    q_idx = g2i[np.arange(order) & (n - 1)]
    return levels[i_idx] + 1j * levels[q_idx]


def qam_modulate(bits, order):
    """Map a flat 0/1 array (length divisible by log2(order)) to symbols."""
    bits = np.asarray(bits)
    bps = int(np.log2(order))
    if bits.size % bps:
        raise ValueError(f"bit count {bits.size} not divisible by {bps}")
    table = constellation(order)
    ints = bits.reshape(-1, bps).dot(1 << np.arange(bps)[::-1])
    return table[ints]


def qam_demodulate(symbols, order):
    """Hard-decision demapping back to a flat bit array."""
    idx = _nearest_index(np.asarray(symbols).ravel(), order)
    bps = int(np.log2(order))
    return ((idx[:, None] >> np.arange(bps)[::-1]) & 1).astype(np.int8).ravel()


def _nearest_pam_index(values, order):
    """Nearest PAM level index per entry; midpoint ties go to the level whose
    Gray code (the bit pattern) is smaller."""
    s, n = _pam_scale(order)
    u = (np.asarray(values, dtype=float) / s + n - 1) / 2.0
    lo = np.floor(u)
    frac = u - lo
    idx = np.where(frac > 0.5, lo + 1, lo)
    tie = frac == 0.5
    if np.any(tie):
        j = np.clip(lo[tie].astype(np.int64), 0, n - 2)
        take_upper = np.array([_gray_code(v + 1) < _gray_code(v) for v in j])
        idx[tie] = j + take_upper
    return np.clip(idx, 0, n - 1).astype(np.int64)


def _nearest_index(symbols, order):
    n = int(round(np.sqrt(order)))
    i_idx = _nearest_pam_index(symbols.real, order)
    q_idx = _nearest_pam_index(symbols.imag, order)
    return (_gray_code(i_idx) << n.bit_length() - 1) | _gray_code(q_idx)


def slice_qam(symbols, order):
    """Nearest constellation point per entry (hard decision)."""
    table = constellation(order)
    return table[_nearest_index(np.asarray(symbols), order)]


def slice_pam(values, order):
    """Nearest real half-symbol amplitude (used for DFE decision feedback)."""
    levels = pam_levels(order)
    return levels[_nearest_pam_index(values, order)]


def is_real_slot(k, n):
    """True where half-symbol slot (k, n) carries a real (non-j) value."""
    return (np.asarray(k) + np.asarray(n)) % 2 == 1


def oqam_stagger(grid, k_abs):
    """Split complex symbols into the real half-symbol stream.

    ``grid`` has one row per used subcarrier and one column per complex
    symbol; ``k_abs`` holds the absolute bank indices of the rows.  Output
    column n holds Re(d[n//2]) on rows where k+n is odd and Im(d[n//2])
    elsewhere, doubling the rate.
    """
    grid = np.asarray(grid)
    if grid.size == 0:
        raise ValueError("empty symbol grid")
    n_sc, n_sym = grid.shape
    out = np.empty((n_sc, 2 * n_sym), dtype=float)
    cols = np.arange(2 * n_sym)
    real_mask = is_real_slot(np.asarray(k_abs)[:, None], cols[None, :])
    rep = np.repeat(grid, 2, axis=1)
    out[real_mask] = rep.real[real_mask]
    out[~real_mask] = rep.imag[~real_mask]
    return out


def oqam_destagger(stream, k_abs):
    """Inverse of :func:`oqam_stagger`: pair half-symbols back into alpha+j*beta."""
    stream = np.asarray(stream)
    n_sc, n_half = stream.shape
    if n_half % 2:
        raise ValueError("stream length per subcarrier must be even")
    cols = np.arange(n_half)
    real_mask = is_real_slot(np.asarray(k_abs)[:, None], cols[None, :])
    re = np.where(real_mask, stream, 0.0).reshape(n_sc, -1, 2).sum(axis=2)
    im = np.where(real_mask, 0.0, stream).reshape(n_sc, -1, 2).sum(axis=2)
    return re + 1j * im


def phase_pattern(k, n, length):
    """Phases multiplying x'[n], x'[n+1], ... on subcarrier k: 1 on real
    slots (k+index odd), j on imaginary slots."""
    idx = n + np.arange(length)
    return np.where(is_real_slot(k, idx), 1.0 + 0.0j, 1.0j)


def apply_phase(segment, k, n):
    """Re-insert the alternating j factors on a real half-symbol segment
    starting at time index n."""
    segment = np.asarray(segment)
    return segment * phase_pattern(k, n, segment.shape[-1])


def apply_phase_grid(stream, k_abs):
    """Vectorised :func:`apply_phase` over a (subcarrier, time) stream."""
    stream = np.asarray(stream)
    cols = np.arange(stream.shape[1])
    real_mask = is_real_slot(np.asarray(k_abs)[:, None], cols[None, :])
    return np.where(real_mask, stream, 1j * stream)
