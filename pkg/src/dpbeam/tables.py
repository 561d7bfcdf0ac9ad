"""CSV writers and the codebook file format.

Every number is written with 9 significant digits.  A codebook file holds
one ``#`` metadata line per link end, a column header, then one row per
stored vector::

    # codebook end=tx criterion=se m_h=8 m_v=8 q_h=6 q_v=6 l_h=7 l_v=7 n_rf=4 phase_bits=4
    end,criterion,p,q,kind,w0_re,w0_im,...
    tx,se,1,1,single,...
    tx,se,1,1,dual,...
    tx,se,1,1,analog0,...
    tx,se,1,1,digital,...

``single`` rows are the per-polarization codeword, ``dual`` the deployed
weights; hybrid codebooks add one ``analog<n>`` row per RF chain and a
``digital`` row.  Rows are padded with empty cells to a common width.
"""
from __future__ import annotations

import csv
import io
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from .array import ArrayGeometry, RegionPartition
from .design import Codebook, Codeword
from .hybrid import HybridBeamformer


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.9g}"


def write_table(stream: TextIO, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])


def table_text(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    write_table(buf, columns, rows)
    return buf.getvalue()


def label(criterion: str) -> str:
    """Output name of a criterion; the baseline is only an approximation of the DFT scheme."""
    return "dft-baseline" if criterion == "baseline" else criterion


def interleave(w: np.ndarray) -> list[float]:
    out = np.empty(2 * w.size)
    out[0::2] = w.real
    out[1::2] = w.imag
    return out.tolist()


def deinterleave(cells: Sequence[str]) -> np.ndarray:
    vals = np.array([float(c) for c in cells if c != ""])
    if vals.size % 2:
        raise ValueError("odd number of weight cells")
    return vals[0::2] + 1j * vals[1::2]


def _meta_line(cb: Codebook, n_rf: Optional[int], bits: Optional[int]) -> str:
    g, p = cb.geom, cb.part
    items = dict(end=cb.end, criterion=label(cb.criterion), m_h=g.m_h, m_v=g.m_v, q_h=p.q_h, q_v=p.q_v,
                 l_h=p.l_h, l_v=p.l_v, n_rf=n_rf if n_rf is not None else "none",
                 phase_bits=bits if bits is not None else "none")
    return "# codebook " + " ".join(f"{k}={v}" for k, v in items.items())


def codebook_rows(cb: Codebook) -> list[list]:
    rows = []
    for cw in cb.codewords:
        head = [cb.end, label(cb.criterion), cw.region[0], cw.region[1]]
        if cw.single is not None:
            rows.append(head + ["single"] + interleave(cw.single))
        rows.append(head + ["dual" if cw.polarization == "dual" else "single"] + interleave(cw.weights))
        if cw.hybrid is not None:
            for n in range(cw.hybrid.n_rf):
                rows.append(head + [f"analog{n}"] + interleave(cw.hybrid.analog[:, n]))
            rows.append(head + ["digital"] + interleave(cw.hybrid.digital))
    return rows


def write_codebooks(stream: TextIO, codebooks: Sequence[Codebook]) -> None:
    all_rows = []
    for cb in codebooks:
        hyb = cb.codewords[0].hybrid
        stream.write(_meta_line(cb, hyb.n_rf if hyb else None, hyb.phase_bits if hyb else None) + "\n")
        all_rows.extend(codebook_rows(cb))
    width = max(len(r) for r in all_rows) - 5
    cols = ["end", "criterion", "p", "q", "kind"]
    cols += [f"w{k // 2}_{'re' if k % 2 == 0 else 'im'}" for k in range(width)]
    padded = [r + [""] * (5 + width - len(r)) for r in all_rows]
    write_table(stream, cols, padded)


def _parse_meta(line: str) -> dict:
    fields = dict(tok.split("=", 1) for tok in line.split()[2:])
    out = {}
    for k, v in fields.items():
        if k == "end":
            out[k] = v
        elif k == "criterion":
            out[k] = "baseline" if v == "dft-baseline" else v
        else:
            out[k] = None if v == "none" else int(v)
    return out


def _unit(w):
    # 9-digit text loses ~1e-9 of norm; restore it
    return w / np.linalg.norm(w)


def read_codebooks(stream: TextIO) -> dict[str, Codebook]:
    """Inverse of :func:`write_codebooks`, keyed by link end."""
    metas = {}
    lines = stream.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("# codebook"):
            m = _parse_meta(line)
            metas[m["end"]] = m
        elif line.strip():
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    if header[:5] != ["end", "criterion", "p", "q", "kind"]:
        raise ValueError("not a codebook file")
    groups: dict = {}
    for row in reader:
        end, p, q, kind = row[0], int(row[2]), int(row[3]), row[4]
        groups.setdefault(end, {}).setdefault((p, q), {})[kind] = deinterleave(row[5:])
    out = {}
    for end, meta in metas.items():
        geom = ArrayGeometry(meta["m_h"], meta["m_v"], dual=True)
        part = RegionPartition(meta["q_h"], meta["q_v"], meta["l_h"], meta["l_v"])
        words = []
        for (p, q) in part.regions():
            g = groups[end][(p, q)]
            hyb = None
            if "digital" in g:
                analog = np.column_stack([g[f"analog{n}"] for n in range(meta["n_rf"])])
                hyb = HybridBeamformer(analog, g["digital"], meta["phase_bits"])
            if "dual" in g:
                single = _unit(g["single"]) if "single" in g else None
                words.append(Codeword(_unit(g["dual"]), meta["criterion"], (p, q), "dual", end, hyb, single))
            else:
                words.append(Codeword(_unit(g["single"]), meta["criterion"], (p, q), "single", end))
        if words[0].polarization == "single":
            geom = geom.single()
        out[end] = Codebook(end, meta["criterion"], geom, part, words)
    return out
