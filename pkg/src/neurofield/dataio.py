"""File formats: metrics/trajectory CSV, dense kernel dumps, binary snapshots.

Trajectory CSV layout: a ``t`` column, then one column per metric, then
(optionally) flattened field columns named ``name[k]`` with ``k`` the
row-major flat index over (point, component).  Floats are written with
``repr`` so identical runs produce identical bytes.

Snapshot binary layout (little-endian):

    magic  b"NFSN" | version u32 | N u32 | n1 u32 | n2 u32 | dt f64 | t f64
    state_count u32, then per component:
        name_len u32, name utf-8, ndim u32, shape u32*, float64 payload
    tail_count u32, then per delayed component:
        name_len u32, name utf-8, m u32, then 4 payloads (times, values,
        derivs, right derivs), each preceded by ndim/shape as above

Snapshots carry everything :func:`neurofield.integrator.integrate` needs to
resume a run (``resume=load_snapshot(path)["snapshot"]``).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParameterError

SNAPSHOT_MAGIC = b"NFSN"
SNAPSHOT_VERSION = 1


def _fmt(x: float) -> str:
    return repr(float(x))


# -- metrics / trajectory CSV -----------------------------------------------------

def write_metrics_csv(path, times, columns: dict) -> None:
    """``columns`` maps metric name to a 1-D array aligned with ``times``."""
    path = Path(path)
    names = list(columns)
    with open(path, "w") as fh:
        fh.write(",".join(["t"] + names) + "\n")
        for i, t in enumerate(times):
            row = [_fmt(t)] + [_fmt(columns[name][i]) for name in names]
            fh.write(",".join(row) + "\n")


def read_metrics_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if header[0] != "t":
        raise ConfigError(f"{path}: not a metrics CSV (first column {header[0]!r})")
    times = data[:, 0]
    return times, {name: data[:, i + 1] for i, name in enumerate(header[1:])}


def write_trajectory_csv(path, traj, fields=None, metrics=None) -> None:
    """Flattened per-sample export of recorded components (+ metrics)."""
    fields = list(traj.components) if fields is None else list(fields)
    names, cols = [], []
    metrics = metrics or {}
    for mname, series in metrics.items():
        names.append(mname)
        cols.append(np.asarray(series))
    for fname in fields:
        arr = traj.components[fname]
        flat = arr.reshape(arr.shape[0], -1)
        for k in range(flat.shape[1]):
            names.append(f"{fname}[{k}]")
            cols.append(flat[:, k])
    with open(path, "w") as fh:
        fh.write(",".join(["t"] + names) + "\n")
        for i, t in enumerate(traj.times):
            fh.write(",".join([_fmt(t)] + [_fmt(c[i]) for c in cols]) + "\n")


def read_trajectory_csv(path):
    """Returns (times, {field: (M, D) flat array}, {metric: (M,) array})."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    times = data[:, 0]
    fields, metrics = {}, {}
    groups = {}
    for i, name in enumerate(header[1:], start=1):
        if name.endswith("]") and "[" in name:
            base, idx = name[:-1].split("[")
            groups.setdefault(base, []).append((int(idx), i))
        else:
            metrics[name] = data[:, i]
    for base, pairs in groups.items():
        pairs.sort()
        fields[base] = data[:, [i for _, i in pairs]]
    return times, fields, metrics


# -- dense kernel dumps --------------------------------------------------------------

def write_kernel_dense(path, blocks: np.ndarray, t: float = None) -> None:
    """Row-major dense dump with a dimension header."""
    blocks = np.asarray(blocks, dtype=float)
    n, _, ni, nj = blocks.shape
    dense = blocks.transpose(0, 2, 1, 3).reshape(n * ni, n * nj)
    header = f"N={n} ni={ni} nj={nj}" + ("" if t is None else f" t={_fmt(t)}")
    np.savetxt(path, dense, header=header)


def read_kernel_dense(path):
    with open(path) as fh:
        first = fh.readline()
    if not first.startswith("#"):
        raise ConfigError(f"{path}: missing kernel header")
    meta = dict(tok.split("=") for tok in first[1:].split())
    n, ni, nj = int(meta["N"]), int(meta["ni"]), int(meta["nj"])
    dense = np.loadtxt(path, ndmin=2)
    blocks = dense.reshape(n, ni, n, nj).transpose(0, 2, 1, 3)
    return blocks, meta


# -- binary snapshots ------------------------------------------------------------------

def _pack_array(arr: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(arr, dtype="<f8")
    head = struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + arr.tobytes()


def _unpack_array(buf, off):
    (ndim,) = struct.unpack_from("<I", buf, off)
    off += 4
    shape = struct.unpack_from(f"<{ndim}I", buf, off)
    off += 4 * ndim
    count = int(np.prod(shape)) if ndim else 1
    arr = np.frombuffer(buf, dtype="<f8", count=count, offset=off).reshape(shape)
    off += 8 * count
    return arr.copy(), off


def save_snapshot(path, snapshot: dict, n_points: int, n1: int, n2: int) -> None:
    out = [SNAPSHOT_MAGIC, struct.pack("<IIII", SNAPSHOT_VERSION, n_points, n1, n2)]
    out.append(struct.pack("<dd", snapshot["dt"], snapshot["t"]))
    state = snapshot["state"]
    out.append(struct.pack("<I", len(state)))
    for name, arr in state.items():
        raw = name.encode()
        out.append(struct.pack("<I", len(raw)) + raw)
        out.append(_pack_array(arr))
    tails = snapshot["tails"]
    out.append(struct.pack("<I", len(tails)))
    for name, arrays in tails.items():
        raw = name.encode()
        out.append(struct.pack("<I", len(raw)) + raw)
        for arr in arrays:
            out.append(_pack_array(arr))
    Path(path).write_bytes(b"".join(out))


def load_snapshot(path) -> dict:
    buf = Path(path).read_bytes()
    if buf[:4] != SNAPSHOT_MAGIC:
        raise ParameterError(f"{path}: not a snapshot file")
    version, n_points, n1, n2 = struct.unpack_from("<IIII", buf, 4)
    if version != SNAPSHOT_VERSION:
        raise ParameterError(f"{path}: unsupported snapshot version {version}")
    off = 20
    dt, t = struct.unpack_from("<dd", buf, off)
    off += 16
    (n_state,) = struct.unpack_from("<I", buf, off)
    off += 4
    state = {}
    for _ in range(n_state):
        (ln,) = struct.unpack_from("<I", buf, off)
        off += 4
        name = buf[off : off + ln].decode()
        off += ln
        state[name], off = _unpack_array(buf, off)
    (n_tails,) = struct.unpack_from("<I", buf, off)
    off += 4
    tails = {}
    for _ in range(n_tails):
        (ln,) = struct.unpack_from("<I", buf, off)
        off += 4
        name = buf[off : off + ln].decode()
        off += ln
        arrays = []
        for _k in range(4):
            arr, off = _unpack_array(buf, off)
            arrays.append(arr)
        tails[name] = tuple(arrays)
    return {
        "meta": {"version": version, "N": n_points, "n1": n1, "n2": n2},
        "snapshot": {"t": t, "dt": dt, "state": state, "tails": tails},
    }
