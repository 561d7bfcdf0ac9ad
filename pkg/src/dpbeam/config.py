"""JSON experiment configuration with line-precise validation errors.

Angles are given in degrees and converted here; K is given in dB and kept
in dB inside :class:`ChannelConfig`.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, fields
from typing import Any, Optional

from .channel import ChannelConfig
from .sim import ExperimentConfig, LinkEnd


class ConfigError(ValueError):
    """Invalid configuration; the message names the file line when known."""


@dataclass(frozen=True)
class PatternSpec:
    az_points: int = 91
    el_points: int = 45
    region: tuple[int, int] = (1, 1)
    end: str = "tx"


@dataclass(frozen=True)
class RunConfig:
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    pattern: PatternSpec = field(default_factory=PatternSpec)
    cdf_snr_db: float = 0.0
    out: Optional[str] = None


_LINK_KEYS = {f.name for f in fields(LinkEnd)}
_CHANNEL_KEYS = {"k_db", "n_nlos", "chi_range", "phi_range_deg", "az_range_deg", "el_range_deg"}
_TOP_KEYS = {"tx", "rx", "phase_bits", "hybrid", "channel", "criterion", "pilot_j", "snr_db", "trials",
             "seed", "b_levels", "kappa1", "kappa2", "threads", "pattern", "cdf_snr_db", "out"}
_PATTERN_KEYS = {f.name for f in fields(PatternSpec)}


def locate(text: str, path: tuple[str, ...]) -> Optional[int]:
    """1-based line of the last key in ``path``, searching each key after its parent."""
    pos = 0
    for key in path:
        m = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, pos)
        if m is None:
            return None
        pos = m.start()
    return text.count("\n", 0, pos) + 1


class _Ctx:
    def __init__(self, text: str, source: str):
        self.text, self.source = text, source

    def fail(self, path: tuple[str, ...], msg: str):
        line = locate(self.text, path) if path else None
        where = f"{self.source}:{line}" if line else self.source
        key = ".".join(path) if path else "<root>"
        raise ConfigError(f"{where}: {key}: {msg}")


def _int(ctx, path, v, lo=1):
    if isinstance(v, bool) or not isinstance(v, int):
        ctx.fail(path, f"expected integer, got {v!r}")
    if v < lo:
        ctx.fail(path, f"must be >= {lo}, got {v}")
    return v


def _float(ctx, path, v, allow_inf=False):
    if isinstance(v, str) and allow_inf and v.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        ctx.fail(path, f"expected number, got {v!r}")
    v = float(v)
    if math.isnan(v) or (math.isinf(v) and not allow_inf):
        ctx.fail(path, f"must be finite, got {v}")
    return v


def _pair(ctx, path, v, scale=1.0):
    if not isinstance(v, list) or len(v) != 2:
        ctx.fail(path, f"expected [low, high], got {v!r}")
    lo, hi = (_float(ctx, path, x) * scale for x in v)
    if hi < lo:
        ctx.fail(path, "high < low")
    return (lo, hi)


def _complex(ctx, path, v):
    if isinstance(v, list) and len(v) == 2:
        return complex(_float(ctx, path, v[0]), _float(ctx, path, v[1]))
    return complex(_float(ctx, path, v))


def _check_keys(ctx, path, obj, allowed):
    if not isinstance(obj, dict):
        ctx.fail(path, f"expected object, got {type(obj).__name__}")
    for k in obj:
        if k not in allowed:
            ctx.fail(path + (k,), "unknown key")


def _link(ctx, path, obj) -> LinkEnd:
    _check_keys(ctx, path, obj, _LINK_KEYS)
    return LinkEnd(**{k: _int(ctx, path + (k,), v) for k, v in obj.items()})


def _channel(ctx, obj) -> ChannelConfig:
    path = ("channel",)
    _check_keys(ctx, path, obj, _CHANNEL_KEYS)
    kw: dict[str, Any] = {}
    deg = math.pi / 180
    for k, v in obj.items():
        p = path + (k,)
        if k == "k_db":
            kw[k] = _float(ctx, p, v, allow_inf=True)
        elif k == "n_nlos":
            kw[k] = _int(ctx, p, v, lo=0)
        elif k == "chi_range":
            kw[k] = _pair(ctx, p, v)
        else:
            kw[k.removesuffix("_deg")] = _pair(ctx, p, v, deg)
    try:
        return ChannelConfig(**kw)
    except ValueError as e:
        ctx.fail(path, str(e))


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    ctx = _Ctx(text, source)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}:{e.lineno}: invalid JSON: {e.msg}") from None
    _check_keys(ctx, (), raw, _TOP_KEYS)
    kw: dict[str, Any] = {}
    for k, v in raw.items():
        p = (k,)
        if k in ("tx", "rx"):
            kw[k] = _link(ctx, p, v)
        elif k == "channel":
            kw[k] = _channel(ctx, v)
        elif k == "phase_bits":
            kw[k] = None if v is None else _int(ctx, p, v)
        elif k == "hybrid":
            if not isinstance(v, bool):
                ctx.fail(p, "expected true or false")
            kw[k] = v
        elif k == "criterion":
            if v not in ("se", "mip", "baseline"):
                ctx.fail(p, f"must be se, mip or baseline, got {v!r}")
            kw[k] = v
        elif k in ("pilot_j", "trials", "b_levels", "threads"):
            kw[k] = _int(ctx, p, v)
        elif k == "seed":
            kw[k] = check_seed(_int(ctx, p, v, lo=0), ctx, p)
        elif k == "snr_db":
            if not isinstance(v, list) or not v:
                ctx.fail(p, "expected a non-empty list of numbers")
            kw[k] = tuple(_float(ctx, p, x) for x in v)
        elif k in ("kappa1", "kappa2"):
            kw[k] = _complex(ctx, p, v)
            if kw[k] == 0:
                ctx.fail(p, "must be nonzero")
    run: dict[str, Any] = {}
    if "pattern" in raw:
        _check_keys(ctx, ("pattern",), raw["pattern"], _PATTERN_KEYS)
        pk = {}
        for k, v in raw["pattern"].items():
            p = ("pattern", k)
            if k in ("az_points", "el_points"):
                pk[k] = _int(ctx, p, v)
            elif k == "region":
                if not isinstance(v, list) or len(v) != 2:
                    ctx.fail(p, "expected [p, q]")
                pk[k] = (_int(ctx, p, v[0]), _int(ctx, p, v[1]))
            elif k == "end":
                if v not in ("tx", "rx"):
                    ctx.fail(p, "must be tx or rx")
                pk[k] = v
        run["pattern"] = PatternSpec(**pk)
    if "cdf_snr_db" in raw:
        run["cdf_snr_db"] = _float(ctx, ("cdf_snr_db",), raw["cdf_snr_db"])
    if "out" in raw:
        if raw["out"] is not None and not isinstance(raw["out"], str):
            ctx.fail(("out",), "expected a path string")
        run["out"] = raw["out"]
    try:
        exp = ExperimentConfig(**kw)
    except ValueError as e:
        ctx.fail((), str(e))
    cfg = RunConfig(exp, **run)
    pq = cfg.pattern.region
    part = (exp.tx if cfg.pattern.end == "tx" else exp.rx).part
    if not (1 <= pq[0] <= part.q_h and 1 <= pq[1] <= part.q_v):
        ctx.fail(("pattern", "region"), f"region {pq} outside the {part.q_h}x{part.q_v} grid")
    return cfg


def check_seed(seed: int, ctx=None, path=("seed",)) -> int:
    if not 0 <= seed < 2 ** 64:
        msg = f"seed must be an unsigned 64-bit integer, got {seed}"
        if ctx is not None:
            ctx.fail(path, msg)
        raise ConfigError(msg)
    return seed


def load_config(path: str) -> RunConfig:
    """Read and validate a config file.  ``OSError`` propagates for I/O failures."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, path)
