"""File formats: edge-list lattice/network exports, trace and ensemble
CSVs, JSON summaries.

Every file opens with '#'-prefixed header lines echoing the resolved
configuration (seed and generator kind included), so any output can be
re-derived from its own header.  Edge lists carry one "i j J" line per
undirected edge.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .lattice import SUBLATTICE_NAMES
from .observables import ESTIMATOR_NOTE

FORMAT_VERSION = "1"


def _header_lines(meta: dict) -> list[str]:
    lines = []
    for key, val in meta.items():
        if isinstance(val, float):
            val = repr(val)
        lines.append(f"# {key} = {val}")
    return lines


def write_lattice(path, lattice, extra_meta: dict | None = None) -> None:
    path = Path(path)
    lines = [f"# pbitmc-lattice v{FORMAT_VERSION}"]
    lines += _header_lines({
        "kind": lattice.kind,
        "rows": lattice.rows,
        "cols": lattice.cols,
        "periodic_axis": lattice.periodic_axis,
        "spins_per_basis": lattice.spins_per_basis,
        "num_spins": lattice.num_spins,
        **(extra_meta or {}),
    })
    names = [SUBLATTICE_NAMES[s] for s in lattice.sublattice.tolist()]
    lines.append("# sublattice " + " ".join(names))
    lines.append("# basis " + " ".join(map(str, lattice.basis.tolist())))
    for p in lattice.plaquettes:
        lines.append(f"# plaquette {p.red_basis} {p.green_basis} {p.blue_basis}")
    for i, j, w in zip(lattice.edge_i.tolist(), lattice.edge_j.tolist(),
                       lattice.edge_coupling.tolist()):
        lines.append(f"{i} {j} {w!r}")
    path.write_text("\n".join(lines) + "\n")


def read_lattice_file(path) -> dict:
    """Parse an exported lattice/network file back into plain arrays."""
    meta, plaquettes, edges, colors = {}, [], [], {}
    sublattice = basis = None
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("# plaquette "):
            plaquettes.append(tuple(int(t) for t in line.split()[2:5]))
        elif line.startswith("# sublattice "):
            sublattice = [SUBLATTICE_NAMES.index(t) for t in line.split()[2:]]
        elif line.startswith("# basis "):
            basis = [int(t) for t in line.split()[2:]]
        elif line.startswith("#"):
            parts = line[1:].strip().split(" = ", 1)
            if len(parts) == 2:
                meta[parts[0]] = parts[1]
        elif line.startswith("v "):
            _, idx, col = line.split()
            colors[int(idx)] = int(col)
        else:
            i, j, w = line.split()
            edges.append((int(i), int(j), float(w)))
    return {"meta": meta, "plaquettes": plaquettes, "edges": edges,
            "sublattice": sublattice, "basis": basis, "colors": colors}


def write_network(path, network, coloring=None,
                  extra_meta: dict | None = None) -> None:
    """Edge list of the replicated p-bit network (sampler weights,
    H = -sum W m m) with an optional per-vertex color column."""
    path = Path(path)
    lines = [f"# pbitmc-network v{FORMAT_VERSION}"]
    lines += _header_lines({
        "base_kind": network.base.kind,
        "num_pbits": network.num_pbits,
        "replicas": network.r,
        "beta": network.beta,
        "gamma": network.gamma,
        "j_perp": network.j_perp,
        "coupling_convention": "H = -sum_edges W*m_i*m_j",
        **(extra_meta or {}),
    })
    if coloring is not None:
        for v, c in enumerate(coloring.color.tolist()):
            lines.append(f"v {v} {c}")
    coo = network.weights.tocoo()
    for i, j, w in zip(coo.row, coo.col, coo.data):
        if i < j:
            lines.append(f"{i} {j} {w!r}")
    path.write_text("\n".join(lines) + "\n")


def write_trace_csv(path, trace, meta: dict) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in _header_lines(meta):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["sweep_index", "time_ns", "observable"])
        for s, t, v in zip(trace.sweeps, trace.time_ns, trace.values):
            writer.writerow([int(s) if float(s).is_integer() else s,
                             repr(float(t)), repr(float(v))])


def write_async_trace_csv(path, trace, meta: dict,
                          tau_n_ns: float | None = None) -> None:
    """Async observable grid; time in tau_n units, ns column optional."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in _header_lines(meta):
            fh.write(line + "\n")
        cols = ["time_tau", "observable"]
        if tau_n_ns is not None:
            cols.append("time_ns")
        writer = csv.writer(fh)
        writer.writerow(cols)
        for t, v in zip(trace.grid_times, trace.grid_values):
            row = [repr(float(t) / trace.tau_n), repr(float(v))]
            if tau_n_ns is not None:
                row.append(repr(float(t) / trace.tau_n * tau_n_ns))
            writer.writerow(row)


def write_ensemble_csv(path, series, meta: dict) -> None:
    path = Path(path)
    full_meta = {**meta, "runs": series.runs, "estimator": ESTIMATOR_NOTE}
    with path.open("w", newline="") as fh:
        for line in _header_lines(full_meta):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(["time_ns", "mean", "ci_half_width", "R"])
        for t, m, h in zip(series.time_ns, series.mean, series.ci_half_width):
            writer.writerow([repr(float(t)), repr(float(m)),
                             repr(float(h)), series.runs])


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    """(header meta, column names, data matrix) of any of the CSVs."""
    meta, names, rows = {}, None, []
    for raw in Path(path).read_text().splitlines():
        if raw.startswith("#"):
            parts = raw[1:].strip().split(" = ", 1)
            if len(parts) == 2:
                meta[parts[0]] = parts[1]
        elif names is None:
            names = raw.split(",")
        elif raw.strip():
            rows.append([float(t) for t in raw.split(",")])
    return meta, names or [], np.asarray(rows)


def write_summary_json(path, summary: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(summary), indent=2,
                                     sort_keys=True) + "\n")


def write_scaling_csv(path, rows: list[dict], meta: dict) -> None:
    cols = ["L", "N_Q", "pbits", "t_conv_sweeps", "t_conv_ns"]
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in _header_lines(meta):
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            writer.writerow([row[c] for c in cols])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj
