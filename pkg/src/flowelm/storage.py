"""On-disk formats: trajectory/model containers, CSV tables, PGM heatmaps.

Containers are an ASCII key=value header terminated by a blank line,
followed by raw little-endian float64 payload, row-major, states (or
matrices) concatenated in order.  All writes go through a temp file and
an atomic rename so interrupted runs never leave truncated artifacts.
Header floats use repr(), which round-trips exactly.
"""

from __future__ import annotations

import os
import tempfile
from typing import Iterable, Mapping, Sequence

import numpy as np

from .elm import ElmParams, Readout
from .equations import Trajectory
from .fields import Field, make_grid
from .surrogate import Surrogate
from .symmetry import SymmetryConfig, symmetry_config
from .windows import Normalizer, WindowGeometry

TRAJECTORY_MAGIC = "flowelm-trajectory"
MODEL_MAGIC = "flowelm-model"
FORMAT_VERSION = 1


class StorageError(RuntimeError):
    """Malformed or mismatched container file."""


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _encode(header: Mapping[str, object], payload: Iterable[np.ndarray]) -> bytes:
    lines = "".join(f"{k}={_format_value(v)}\n" for k, v in header.items())
    blob = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in payload)
    return lines.encode("ascii") + b"\n" + blob


def atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _split_container(data: bytes, path: str) -> tuple[dict[str, str], bytes]:
    sep = data.find(b"\n\n")
    if sep < 0:
        raise StorageError(f"{path}: missing blank line after header")
    header: dict[str, str] = {}
    for raw in data[:sep].decode("ascii", errors="replace").splitlines():
        if "=" not in raw:
            raise StorageError(f"{path}: bad header line {raw!r}")
        key, value = raw.split("=", 1)
        header[key] = value
    return header, data[sep + 2:]


def _require(header: dict[str, str], key: str, path: str) -> str:
    if key not in header:
        raise StorageError(f"{path}: missing header field {key!r}")
    return header[key]


def write_trajectory(path: str, traj: Trajectory) -> None:
    header = {
        "magic": TRAJECTORY_MAGIC,
        "version": FORMAT_VERSION,
        "dims": traj.grid.dims,
        "m": traj.grid.m,
        "L": traj.grid.L,
        "dt_snapshot": traj.dt_snapshot,
        "count": len(traj),
    }
    atomic_write_bytes(path, _encode(header, (s.values for s in traj.states)))


def read_trajectory(path: str) -> Trajectory:
    with open(path, "rb") as handle:
        data = handle.read()
    header, blob = _split_container(data, path)
    if _require(header, "magic", path) != TRAJECTORY_MAGIC:
        raise StorageError(f"{path}: not a trajectory file")
    if int(_require(header, "version", path)) != FORMAT_VERSION:
        raise StorageError(f"{path}: unsupported version {header['version']}")
    dims = int(_require(header, "dims", path))
    m = int(_require(header, "m", path))
    L = float(_require(header, "L", path))
    dt_snapshot = float(_require(header, "dt_snapshot", path))
    count = int(_require(header, "count", path))
    grid = make_grid(L, m, dims)
    expected = count * grid.n_nodes * 8
    if len(blob) != expected:
        raise StorageError(
            f"{path}: payload is {len(blob)} bytes, expected {expected}"
        )
    flat = np.frombuffer(blob, dtype="<f8").reshape((count,) + grid.shape)
    states = tuple(Field(grid, flat[i]) for i in range(count))
    return Trajectory(grid=grid, dt_snapshot=dt_snapshot, states=states)


def write_model(path: str, surrogate: Surrogate) -> None:
    geom = surrogate.geometry
    header = {
        "magic": MODEL_MAGIC,
        "version": FORMAT_VERSION,
        "dims": geom.dims,
        "extent": geom.extent,
        "stride": geom.stride,
        "pe_order": geom.pe_order,
        "l_in": surrogate.params.l_in,
        "l_hid": surrogate.params.l_hid,
        "l_out": surrogate.readout.l_out,
        "elm_seed": surrogate.params.seed,
        "v_min": surrogate.normalizer.v_min,
        "v_max": surrogate.normalizer.v_max,
        "dt": surrogate.dt,
        "subgroup": ",".join(g.value for g in surrogate.symmetry.ordered()),
        "sym_train": surrogate.symmetry.use_for_training,
        "sym_predict": surrogate.symmetry.use_for_prediction,
        "zero_mean_wrap": surrogate.zero_mean_wrap,
    }
    payload = (surrogate.params.weights, surrogate.params.biases,
               surrogate.readout.theta)
    atomic_write_bytes(path, _encode(header, payload))


def read_model(path: str) -> Surrogate:
    with open(path, "rb") as handle:
        data = handle.read()
    header, blob = _split_container(data, path)
    if _require(header, "magic", path) != MODEL_MAGIC:
        raise StorageError(f"{path}: not a model file")
    if int(_require(header, "version", path)) != FORMAT_VERSION:
        raise StorageError(f"{path}: unsupported version {header['version']}")
    dims = int(_require(header, "dims", path))
    geom = WindowGeometry(
        dims=dims,
        extent=int(_require(header, "extent", path)),
        stride=int(_require(header, "stride", path)),
        pe_order=int(_require(header, "pe_order", path)),
    )
    l_in = int(_require(header, "l_in", path))
    l_hid = int(_require(header, "l_hid", path))
    l_out = int(_require(header, "l_out", path))
    expected = (l_hid * l_in + l_hid + l_out * l_hid) * 8
    if len(blob) != expected:
        raise StorageError(f"{path}: payload is {len(blob)} bytes, expected {expected}")
    flat = np.frombuffer(blob, dtype="<f8")
    w_end = l_hid * l_in
    b_end = w_end + l_hid
    params = ElmParams(
        weights=flat[:w_end].reshape(l_hid, l_in),
        biases=flat[w_end:b_end],
        l_out=l_out,
        seed=int(_require(header, "elm_seed", path)),
    )
    readout = Readout(theta=flat[b_end:].reshape(l_out, l_hid))
    normalizer = Normalizer(v_min=float(_require(header, "v_min", path)),
                            v_max=float(_require(header, "v_max", path)))
    symmetry = symmetry_config(
        _require(header, "subgroup", path),
        use_for_training=header.get("sym_train", "0") == "1",
        use_for_prediction=header.get("sym_predict", "0") == "1",
    )
    return Surrogate(
        params=params,
        readout=readout,
        normalizer=normalizer,
        geometry=geom,
        symmetry=symmetry,
        zero_mean_wrap=header.get("zero_mean_wrap", "0") == "1",
        dt=float(_require(header, "dt", path)),
    )


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_format_value(v) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_rse_csv(path: str, times: np.ndarray, values: np.ndarray) -> None:
    write_csv(path, ("t", "rse_percent"),
              ((float(t), float(v)) for t, v in zip(times, values)))


def write_moments_csv(path: str, coordinates: np.ndarray,
                      moments: Mapping[int, np.ndarray]) -> None:
    orders = sorted(moments)
    columns = ("x",) + tuple(f"m{k}" for k in orders)
    flattened = [np.asarray(moments[k]).ravel() for k in orders]
    rows = (
        (float(x),) + tuple(float(col[i]) for col in flattened)
        for i, x in enumerate(np.asarray(coordinates, dtype=float).ravel())
    )
    write_csv(path, columns, rows)


def to_gray(values: np.ndarray, v_min: float, v_max: float) -> np.ndarray:
    """Map values linearly from [v_min, v_max] to uint8 0..255."""
    if v_max <= v_min:
        return np.zeros(values.shape, dtype=np.uint8)
    scaled = (np.asarray(values, dtype=float) - v_min) / (v_max - v_min)
    return np.clip(np.rint(scaled * 255.0), 0, 255).astype(np.uint8)


def write_pgm(path: str, gray: np.ndarray) -> None:
    """8-bit binary PGM (P5); rows map to image rows top-down."""
    gray = np.asarray(gray, dtype=np.uint8)
    if gray.ndim != 2:
        raise ValueError(f"PGM image must be 2D, got shape {gray.shape}")
    height, width = gray.shape
    atomic_write_bytes(path, f"P5\n{width} {height}\n255\n".encode("ascii")
                       + gray.tobytes())


def write_trajectory_heatmaps(out_dir: str, name: str, traj: Trajectory,
                              v_min: float, v_max: float) -> list[str]:
    """1D: one PGM, rows = time, columns = space.  2D: one PGM per snapshot."""
    paths = []
    if traj.grid.dims == 1:
        path = os.path.join(out_dir, f"{name}.pgm")
        write_pgm(path, to_gray(traj.stack(), v_min, v_max))
        paths.append(path)
    else:
        for i, state in enumerate(traj.states):
            path = os.path.join(out_dir, f"{name}_{i:06d}.pgm")
            write_pgm(path, to_gray(state.values, v_min, v_max))
            paths.append(path)
    return paths
