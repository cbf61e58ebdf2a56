"""Trace and result serialization.

Binary trace layout (little endian):

    f8   dt          seconds between stored samples
    u64  length      samples per channel
    u32  channels    channel count
    u64  seed        RNG seed of the generating run
    then channels * length float64, one contiguous block per channel

Channel naming is positional: 3 channels are x, y, z positions in
meters; 6 add vx, vy, vz; a single channel is a detector voltage.  CSV
export carries a time column and explicit labels for interchange.
"""

import dataclasses
import json
import os
import struct
import tempfile

import numpy as np

from .dynamics import TimeTrace

_HEADER = struct.Struct("<dQIQ")


def _default_labels(channels):
    if channels == 3:
        return ("x", "y", "z"), "m"
    if channels == 6:
        return ("x", "y", "z", "vx", "vy", "vz"), "m"
    if channels == 1:
        return ("v",), "V"
    return tuple(f"c{i}" for i in range(channels)), ""


def atomic_write_bytes(path, payload):
    """Write-then-rename so readers never observe a partial file."""
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text):
    atomic_write_bytes(path, text.encode())


def save_trace(trace, path):
    header = _HEADER.pack(trace.dt, trace.n_samples, trace.data.shape[0],
                          trace.seed)
    body = np.ascontiguousarray(trace.data, dtype="<f8").tobytes()
    atomic_write_bytes(path, header + body)


def load_trace(path, labels=None, units=None):
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        dt, length, channels, seed = _HEADER.unpack(raw)
        data = np.fromfile(fh, dtype="<f8", count=channels * length)
    if data.size != channels * length:
        raise ValueError(f"{path}: expected {channels * length} samples, "
                         f"found {data.size}")
    guess_labels, guess_units = _default_labels(channels)
    return TimeTrace(dt=dt, data=data.reshape(channels, length),
                     labels=labels or guess_labels,
                     units=units or guess_units, seed=seed)


def trace_to_csv(trace, path):
    cols = [np.arange(trace.n_samples) * trace.dt] + list(trace.data)
    header = "t_s," + ",".join(
        f"{lab}_{trace.units}" if trace.units else lab for lab in trace.labels)
    arr = np.column_stack(cols)
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    os.close(fd)
    try:
        np.savetxt(tmp, arr, delimiter=",", header=header, comments="",
                   fmt="%.10e")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def trace_from_csv(path, seed=0, units=None):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    arr = np.loadtxt(path, delimiter=",", skiprows=1)
    if arr.ndim == 1:
        arr = arr[:, np.newaxis]
    t = arr[:, 0]
    dt = float(t[1] - t[0]) if t.size > 1 else 1.0
    labels = []
    unit = units
    for col in header[1:]:
        parts = col.rsplit("_", 1)
        labels.append(parts[0])
        if unit is None and len(parts) == 2:
            unit = parts[1]
    return TimeTrace(dt=dt, data=arr[:, 1:].T, labels=tuple(labels),
                     units=unit or "", seed=seed)


def spectrum_to_csv(spectrum, path):
    header = f"omega_rad_per_s,psd_{spectrum.units}2_s_per_rad"
    arr = np.column_stack([spectrum.omega, spectrum.values])
    text = header + "\n" + "\n".join(f"{w:.10e},{v:.10e}" for w, v in arr)
    atomic_write_text(path, text + "\n")


def allan_to_csv(curve, path):
    lines = ["tau_s,sigma,n_segments"]
    for t, s, n in zip(curve.tau, curve.sigma, curve.n_segments):
        lines.append(f"{t:.10e},{s:.10e},{n}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def _jsonify(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _jsonify(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and (obj != obj or obj in (float("inf"), float("-inf"))):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    return obj


def write_json(path, payload):
    atomic_write_text(path, json.dumps(_jsonify(payload), indent=2,
                                       sort_keys=True) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)
