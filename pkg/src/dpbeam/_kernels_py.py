"""NumPy implementations of the array-gain kernels (used when the extension is absent)."""
import numpy as np

_CHUNK = 4096


def gain_points(e, psi_az, psi_el):
    e = np.ascontiguousarray(e, dtype=complex)
    psi_az = np.asarray(psi_az, dtype=float)
    psi_el = np.asarray(psi_el, dtype=float)
    if psi_az.shape != psi_el.shape:
        raise ValueError("psi_az and psi_el lengths differ")
    mh, mv = e.shape
    hh, vv = np.arange(mh), np.arange(mv)
    out = np.empty(psi_az.shape[0])
    for s in range(0, psi_az.shape[0], _CHUNK):
        pa, pe = psi_az[s:s + _CHUNK], psi_el[s:s + _CHUNK]
        ph = np.exp(-1j * np.outer(pa, hh))
        pv = np.exp(-1j * np.outer(pe, vv))
        acc = np.einsum("nh,nh->n", ph, pv @ e.T)
        out[s:s + _CHUNK] = np.abs(acc) ** 2
    return out / (mh * mv)


def gain_separable(e, psi_az, psi_el):
    e = np.asarray(e, dtype=complex)
    mh, mv = e.shape
    ph = np.exp(-1j * np.outer(np.asarray(psi_az, dtype=float), np.arange(mh)))
    pv = np.exp(-1j * np.outer(np.asarray(psi_el, dtype=float), np.arange(mv)))
    return np.abs(ph @ e @ pv.T) ** 2 / (mh * mv)
