"""Deterministic invariant suite behind ``dpbeam verify``.

Every check is a function returning ``(ok, detail)``; the report lists one
line per check with numbers at 9 significant digits, so two runs with the
same config are byte-identical whatever the thread count.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .array import (ArrayGeometry, RegionPartition, az_section_centers, build_dictionaries,
                    region_transform, steering_paired, steering_unpaired)
from .channel import (ChannelConfig, PolarizationState, db_to_linear, rotation_matrix, sample_channel,
                      tx_side_los)
from .design import (lift_tx, mip_single, pattern_single, pattern_vector,
                     rayleigh_quotient)
from .hybrid import least_squares, omp_decompose, quantize_phases
from .protocol import build_pilots, check_pilots, estimate_ratios, final_tx
from .sim import (ExperimentConfig, build_design, gain_integral, nominal_pol,
                  region_rate_bound_gap, run_trials, summarize)


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def _g(x) -> str:
    return f"{float(x):.9g}"


def random_unit(rng, n):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def random_pol(rng, phi_max=np.pi / 36) -> PolarizationState:
    return PolarizationState(rng.uniform(0, 1), rng.uniform(-phi_max, phi_max), *rng.uniform(0, 2 * np.pi, 4))


# --- oracles shared with the test-suite --------------------------------------

def decomposition_gap(rng, tx_geom=ArrayGeometry(4, 8), rx_geom=ArrayGeometry(4, 4)) -> float:
    """``|c_rx^H H0 c_tx|^2`` against its rx factor times tx factor, one random LOS draw."""
    pol = random_pol(rng, np.pi)
    aod = (rng.uniform(-np.pi / 2, np.pi / 2), rng.uniform(-np.pi / 4, np.pi / 4))
    aoa = (rng.uniform(-np.pi / 2, np.pi / 2), rng.uniform(-np.pi / 4, np.pi / 4))
    h0 = np.exp(1j * rng.uniform(0, 2 * np.pi))
    rx_single = rx_geom.single()
    h = tx_side_los(pol, aod, aoa, tx_geom, rx_single, h0)
    c_tx = random_unit(rng, tx_geom.port_count())
    c_rx = random_unit(rng, rx_single.port_count())
    lhs = abs(np.vdot(c_rx, h @ c_tx)) ** 2
    d_tx = steering_paired(*aod, tx_geom.single())
    d_rx = steering_paired(*aoa, rx_single)
    row = np.kron(np.array([[pol.rho_vv, pol.rho_vh]]), d_tx.conj()[None, :])
    tx_factor = abs((row @ rotation_matrix(pol.phi, tx_geom.panel_size) @ c_tx)[0]) ** 2
    rhs = abs(h0) ** 2 * abs(np.vdot(c_rx, d_rx)) ** 2 * pol.b ** 2 * tx_factor
    return abs(lhs - rhs) / max(lhs, 1e-300)


def noiseless_ratio_errors(seed: int, geom=ArrayGeometry(8, 8), j: int = 1) -> tuple[float, float]:
    """Ratio errors against ground truth on a LOS channel with known chi and phi."""
    rng = np.random.default_rng(seed)
    cfg = ChannelConfig(k_db=np.inf)
    ch = sample_channel(cfg, rng, geom, geom)
    pol = ch.pol
    los = ch.los
    c_tx = steering_paired(*los.aod, geom.single())
    c_rx = steering_paired(*los.aoa, geom.single())
    rt, rr = estimate_ratios(ch, c_tx, c_rx, build_pilots(j), np.inf, pol.chi, pol.phi)
    want_tx = np.exp(1j * (pol.zeta_vv - pol.zeta_vh))
    want_rx = pol.xi_v / pol.xi_h
    return abs(rt - want_tx), abs(rr - want_rx) / abs(want_rx)


# --- checks ------------------------------------------------------------------

def check_steering(cfg):
    err = max(np.abs(steering_unpaired(np.pi / 2, 4) - np.array([1, 1j, -1, -1j]) / 2).max(),
              np.abs(steering_unpaired(1.3 + 2 * np.pi, 7) - steering_unpaired(1.3, 7)).max())
    return err < 1e-12, f"max_err={_g(err)}"


def check_dictionaries(cfg):
    part = RegionPartition(2, 1, 2, 1)
    centers = az_section_centers(part)
    err = np.abs(centers - np.pi * np.array([-0.75, -0.25, 0.25, 0.75])).max()
    dic = build_dictionaries(cfg.tx.geom, cfg.tx.part)
    norms = np.abs(np.linalg.norm(dic.d_h, axis=0) - 1).max()
    full = build_dictionaries(ArrayGeometry(4, 1), RegionPartition(1, 1, 5, 1))
    ident = np.abs(full.d_h @ full.d_h.conj().T - 5 / 4 * np.eye(4)).max()
    err = max(err, norms, ident)
    return err < 1e-10, f"max_err={_g(err)}"


def check_region_transform(cfg):
    geom, part = cfg.tx.geom.single(), cfg.tx.part
    dic = build_dictionaries(geom, part)
    base = mip_single(dic, 1, 1)
    ok = True
    for p, q in part.regions():
        c = region_transform(base, p, q, geom, part)
        ok &= abs(np.linalg.norm(c) - 1) < 1e-12
        ok &= int(np.argmax(pattern_single(c, dic))) in set(part.section_index(p, q).tolist())
    return bool(ok), f"regions={part.region_count}"


def check_channel_algebra(cfg):
    r = rotation_matrix(0.3, 4)
    err = np.abs(r.T @ r - np.eye(8)).max()
    err = max(err, np.abs(rotation_matrix(0.3, 4) @ rotation_matrix(-0.3, 4) - np.eye(8)).max())
    k_err = abs(db_to_linear(13.2) - 20.8929613)
    rng = np.random.default_rng(1)
    gap = max(decomposition_gap(rng) for _ in range(20))
    return err < 1e-12 and k_err < 1e-6 and gap < 1e-10, f"decomposition_gap={_g(gap)}"


def check_lift_identity(cfg):
    rng = np.random.default_rng(2)
    geom, part = ArrayGeometry(4, 8), RegionPartition(4, 4)
    dic = build_dictionaries(geom, part)
    err = 0.0
    for _ in range(20):
        c = random_unit(rng, 32)
        pol = random_pol(rng, np.pi)
        err = max(err, np.abs(pattern_vector(lift_tx(c, pol), pol, dic) - pattern_single(c, dic)).max())
    return err < 1e-12, f"max_err={_g(err)}"


def check_gain_integral(cfg):
    rng = np.random.default_rng(3)
    geom = ArrayGeometry(4, 8)
    bound = (2 * np.pi) ** 2 / 32
    pol = random_pol(rng)
    rel = abs(gain_integral(lift_tx(random_unit(rng, 32), pol), pol, geom, 128) / bound - 1)
    worst = max(gain_integral(random_unit(rng, 64), random_pol(rng), geom, 128) / bound for _ in range(20))
    return rel < 0.01 and worst <= 1.001, f"lifted_rel_err={_g(rel)} worst_ratio={_g(worst)}"


def check_mip(cfg):
    rng = np.random.default_rng(4)
    geom, part = ArrayGeometry(4, 8), RegionPartition(4, 4)
    dic = build_dictionaries(geom, part)
    ok = True
    for p, q in part.regions():
        d = dic.d_pq(p, q)
        a = d @ d.conj().T
        best = rayleigh_quotient(a, mip_single(dic, p, q))
        others = max(rayleigh_quotient(a, random_unit(rng, 32)) for _ in range(50))
        ok &= best >= others
    deg = build_dictionaries(ArrayGeometry(4, 1), RegionPartition(1, 1, 6, 1))
    a = deg.d_pq(1, 1) @ deg.d_pq(1, 1).conj().T
    closed = abs(rayleigh_quotient(a, mip_single(deg, 1, 1)) - 6 / 4)
    return bool(ok) and closed < 1e-9, f"closed_form_err={_g(closed)}"


def check_omp(cfg):
    rng = np.random.default_rng(5)
    m = 64
    t = np.exp(1j * quantize_phases(rng.uniform(0, 2 * np.pi, m), 4)) / np.sqrt(m)
    hb = omp_decompose(t, 1, 4)
    fixed = np.linalg.norm(t - hb.weights)
    mono = True
    for _ in range(20):
        target = random_unit(rng, m)
        trace = []
        omp_decompose(target, 4, None, trace)
        cols = omp_decompose(target, 4).analog
        res = [np.linalg.norm(target - cols[:, :n + 1] @ least_squares(cols[:, :n + 1], target)) for n in range(4)]
        mono &= all(b <= a + 1e-12 for a, b in zip(res, res[1:]))
        omp_decompose(target, 4, 4).check()
    return fixed < 1e-10 and bool(mono), f"fixed_point_residual={_g(fixed)}"


def check_pilots_and_ratios(cfg):
    ok = all(check_pilots(build_pilots(j)) for j in (1, 2, 4, 8, 16, 64))
    errs = [max(noiseless_ratio_errors(s)) for s in range(5)]
    return ok and max(errs) < 1e-9, f"ratio_err={_g(max(errs))}"


def check_finalize(cfg):
    rng = np.random.default_rng(6)
    err = 0.0
    for _ in range(10):
        pol = random_pol(rng)
        c = random_unit(rng, 64)
        w = final_tx(c, np.exp(1j * (pol.zeta_vv - pol.zeta_vh)), pol.chi, pol.phi)
        err = max(err, abs(1 - abs(np.vdot(w, lift_tx(c, pol)))))
    return err < 1e-9, f"max_err={_g(err)}"


def check_rate_bound(cfg):
    """Region-averaged LOS rate never beats the flat ideal gain."""
    pol = nominal_pol(cfg)
    worst = -np.inf
    for crit in ("se", "mip", "baseline"):
        d = build_design(cfg, crit)
        for cw in d.align_tx.codewords[:4]:
            gap = region_rate_bound_gap(cw.weights, pol, d.align_tx.geom, d.align_tx.part, *cw.region, 10.0)
            worst = max(worst, gap)
    return worst <= 1e-6, f"worst_gap={_g(worst)}"


def check_monte_carlo(cfg):
    """Short rate curve: nonnegative, monotone within 3 stderr, serial equals threaded."""
    d = build_design(cfg)
    n = min(cfg.trials, 40)
    snrs = sorted(cfg.snr_db)
    means, errs = [], []
    for s in snrs:
        par = run_trials(d, s, n, cfg.seed, cfg.threads)
        ser = run_trials(d, s, n, cfg.seed, 1) if cfg.threads > 1 else par
        if [t.rate for t in par] != [t.rate for t in ser]:
            return False, f"thread mismatch at snr_db={_g(s)}"
        m, e = summarize([t.rate for t in par])
        means.append(m)
        errs.append(e)
    ok = min(means) >= 0 and all(b >= a - 3 * np.hypot(ea, eb)
                                 for a, b, ea, eb in zip(means, means[1:], errs, errs[1:]))
    return ok, "means=" + ";".join(_g(m) for m in means)


CHECKS: list[tuple[str, Callable]] = [
    ("steering", check_steering),
    ("dictionaries", check_dictionaries),
    ("region_transform", check_region_transform),
    ("channel_algebra", check_channel_algebra),
    ("lift_pattern_identity", check_lift_identity),
    ("reference_gain_integral", check_gain_integral),
    ("mip_optimality", check_mip),
    ("omp", check_omp),
    ("pilots_and_ratios", check_pilots_and_ratios),
    ("finalize_matches_lift", check_finalize),
    ("rate_upper_bound", check_rate_bound),
    ("monte_carlo", check_monte_carlo),
]


def run_verify(cfg: ExperimentConfig) -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn(cfg)
        except Exception as e:  # a crashing check is a failing check
            ok, detail = False, f"{type(e).__name__}: {e}"
        out.append(CheckResult(name, bool(ok), detail))
    return out


def format_report(results: list[CheckResult]) -> str:
    return "".join(f"{'PASS' if r.ok else 'FAIL'} {r.name} {r.detail}\n" for r in results)
