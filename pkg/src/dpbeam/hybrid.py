"""Greedy analog/digital decomposition of a digital codeword."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

log = logging.getLogger(__name__)

RIDGE = 1e-12


@dataclass(frozen=True, eq=False)
class HybridBeamformer:
    """Fully connected hybrid beamformer ``analog @ digital``.

    ``analog`` is ``M x N`` with entries of magnitude ``1/sqrt(M)``;
    ``digital`` has length ``N`` and makes the product unit norm.
    """

    analog: np.ndarray
    digital: np.ndarray
    phase_bits: Optional[int] = None

    @property
    def weights(self) -> np.ndarray:
        return self.analog @ self.digital

    @property
    def n_rf(self) -> int:
        return self.analog.shape[1]

    def check(self, tol: float = 1e-10) -> None:
        m = self.analog.shape[0]
        if not np.allclose(np.abs(self.analog), 1 / np.sqrt(m), atol=1e-12):
            raise AssertionError("analog entries are not constant modulus")
        if abs(np.linalg.norm(self.weights) - 1) > tol:
            raise AssertionError("hybrid product is not unit norm")
        if self.phase_bits is not None:
            step = 2 * np.pi / 2 ** self.phase_bits
            k = np.angle(self.analog) / step
            if not np.allclose(k, np.round(k), atol=1e-9):
                raise AssertionError("analog phases off the quantization grid")


def residual_phase(r: np.ndarray) -> np.ndarray:
    """Phase in ``[0, 2pi)``; exactly-zero entries get phase 0."""
    ph = np.mod(np.angle(r), 2 * np.pi)
    ph[r == 0] = 0.0
    return ph


def quantize_phases(phases: np.ndarray, bits: int) -> np.ndarray:
    step = 2 * np.pi / 2 ** bits
    return np.mod(np.round(np.asarray(phases) / step), 2 ** bits) * step


def least_squares(f: np.ndarray, target: np.ndarray) -> np.ndarray:
    """``(F^H F)^{-1} F^H target`` by Cholesky, with a ridge fallback."""
    gram = f.conj().T @ f
    rhs = f.conj().T @ target
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        log.debug("singular gram (cond=%.3g), using ridge", np.linalg.cond(gram))
        gram = gram + RIDGE * np.eye(gram.shape[0])
        # drop directions the ridge alone keeps alive
        return np.linalg.pinv(gram, rcond=1e-10, hermitian=True) @ rhs
    y = np.linalg.solve(chol, rhs)
    return np.linalg.solve(chol.conj().T, y)


def omp_decompose(target: np.ndarray, n_rf: int, phase_bits: Optional[int] = None,
                  trace: Optional[list] = None) -> HybridBeamformer:
    """Build ``n_rf`` constant-modulus columns from successive residual phases.

    Column ``n`` is ``exp(j angle(r_{n-1})) / sqrt(M)`` with ``r_0 = target``;
    the digital part is the least-squares fit scaled to unit product norm, and
    the residual is taken against that scaled fit.  With ``phase_bits`` the
    finished analog matrix is snapped to the ``2^bits`` phase grid and the
    digital part refit.

    If ``trace`` is a list, ``(u_n, v_n, r_n)`` is appended per iteration.
    """
    target = np.asarray(target, dtype=complex)
    if n_rf < 1:
        raise ValueError("n_rf must be >= 1")
    m = target.shape[0]
    cols = []
    r = target
    v = None
    for _ in range(n_rf):
        cols.append(np.exp(1j * residual_phase(r)) / np.sqrt(m))
        f = np.column_stack(cols)
        u = least_squares(f, target)
        v = u / np.linalg.norm(f @ u)
        r = target - f @ v
        if trace is not None:
            trace.append((u, v, r))
    f = np.column_stack(cols)
    if phase_bits is not None:
        f = np.exp(1j * quantize_phases(np.angle(f), phase_bits)) / np.sqrt(m)
        u = least_squares(f, target)
        v = u / np.linalg.norm(f @ u)
    return HybridBeamformer(f, v, phase_bits)
