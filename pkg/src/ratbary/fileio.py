"""On-disk formats: binary sample matrices and JSON model documents.

Sample matrices get a compact little-endian binary layout because they
dominate storage; models are JSON so a converged run can be inspected with
any text tool, with the snapshot block base64-packed since it is the only
bulky part. Both writers go through a temp-file-and-rename so a crashed
run never leaves a half-written file behind, and both round-trip bit for
bit: floats survive JSON through shortest round-trip decimal repr, and the
binary layout is read back with exact length accounting so stray bytes are
an error rather than a surprise.

A model document is self-sufficient for evaluation anywhere: supports,
weights and snapshot rows are all it takes, and the factorization stages
that produced them are deliberately not stored.
"""

import base64
import json
import os
import struct
import tempfile

import numpy as np

from .barycentric import BarycentricModel, SampleGrid
from .errors import FileFormatError
from .qr_aaa import ColumnScaling

_MAGIC = b"SVAA"
_MATRIX_VERSION = 1
_MODEL_FORMAT = "ratbary-model"
_MODEL_VERSION = 1
_AXIS_TAG = {"real": 1, "imag": 2}
_TAG_AXIS = {1: "real", 2: "imag"}


def _atomic_write_bytes(path, payload):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ratbary-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


class MatrixFile:
    """In-memory image of a binary sample file.

    Attributes:
        f: (len(grid), N) complex sample matrix.
        grid: the SampleGrid the rows were sampled on.
        labels: optional list of N column labels.
    """

    def __init__(self, f, grid, labels=None):
        f = np.asarray(f, dtype=np.complex128)
        if f.ndim == 1:
            f = f[:, None]
        if f.ndim != 2 or f.shape[1] == 0:
            raise ValueError(f"need a sample matrix, got shape {f.shape}")
        if f.shape[0] != len(grid):
            raise ValueError(
                f"{f.shape[0]} sample rows for a grid of {len(grid)} points"
            )
        if labels is not None:
            labels = [str(lab) for lab in labels]
            if len(labels) != f.shape[1]:
                raise ValueError("need one label per column")
        self.f = f
        self.grid = grid
        self.labels = labels

    def __repr__(self):
        rows, cols = self.f.shape
        return f"MatrixFile({rows}x{cols}, chart={self.grid.chart})"


def _matrix_bytes(mf):
    out = bytearray()
    out += _MAGIC
    out += struct.pack("<I", _MATRIX_VERSION)
    if mf.grid.chart is None:
        out += struct.pack("<B", 0)
    else:
        a, b, axis = mf.grid.chart
        out += struct.pack("<Bdd", _AXIS_TAG[axis], a, b)
    points = np.ascontiguousarray(mf.grid.points, dtype="<c16")
    out += struct.pack("<Q", points.size)
    out += points.tobytes()
    out += struct.pack("<Q", mf.f.shape[1])
    out += mf.f.astype("<c16", copy=False).tobytes(order="F")
    if mf.labels is None:
        out += struct.pack("<B", 0)
    else:
        out += struct.pack("<B", 1)
        for lab in mf.labels:
            raw = lab.encode("utf-8")
            out += struct.pack("<I", len(raw))
            out += raw
    return bytes(out)


def write_matrix(path, f, grid, labels=None):
    """Write samples plus their grid as one binary file, atomically."""
    mf = MatrixFile(f, grid, labels)
    _atomic_write_bytes(path, _matrix_bytes(mf))
    return mf


class _Cursor:
    """Byte reader that turns every short read into a format error."""

    def __init__(self, data, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, count):
        end = self.pos + count
        if end > len(self.data):
            raise FileFormatError(
                f"{self.path}: truncated, wanted {count} more bytes "
                f"at offset {self.pos}"
            )
        chunk = self.data[self.pos : end]
        self.pos = end
        return chunk

    def unpack(self, fmt):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def done(self):
        if self.pos != len(self.data):
            raise FileFormatError(
                f"{self.path}: {len(self.data) - self.pos} trailing bytes"
            )


def read_matrix(path):
    """Read a binary sample file back into a MatrixFile."""
    with open(path, "rb") as fh:
        data = fh.read()
    cur = _Cursor(data, path)
    if cur.take(4) != _MAGIC:
        raise FileFormatError(f"{path}: not a sample-matrix file")
    (version,) = cur.unpack("<I")
    if version != _MATRIX_VERSION:
        raise FileFormatError(f"{path}: unsupported matrix format v{version}")
    (tag,) = cur.unpack("<B")
    if tag == 0:
        chart = None
    elif tag in _TAG_AXIS:
        a, b = cur.unpack("<dd")
        chart = (a, b, _TAG_AXIS[tag])
    else:
        raise FileFormatError(f"{path}: unknown grid axis tag {tag}")
    (count,) = cur.unpack("<Q")
    if count == 0 or 16 * count > len(data):
        raise FileFormatError(f"{path}: implausible grid size {count}")
    points = np.frombuffer(cur.take(16 * count), dtype="<c16").astype(
        np.complex128
    )
    (cols,) = cur.unpack("<Q")
    if cols == 0 or 16 * count * cols > len(data):
        raise FileFormatError(f"{path}: implausible column count {cols}")
    flat = np.frombuffer(cur.take(16 * count * cols), dtype="<c16")
    f = flat.reshape((count, cols), order="F").astype(np.complex128)
    (lab_flag,) = cur.unpack("<B")
    if lab_flag == 0:
        labels = None
    elif lab_flag == 1:
        labels = []
        for _ in range(cols):
            (nbytes,) = cur.unpack("<I")
            labels.append(cur.take(nbytes).decode("utf-8"))
    else:
        raise FileFormatError(f"{path}: bad label flag {lab_flag}")
    cur.done()
    try:
        grid = SampleGrid(points, chart=chart)
        return MatrixFile(f, grid, labels)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from None


class ModelFile:
    """A stored model: the approximant itself, its scaling, run metadata.

    Attributes:
        model: BarycentricModel (snapshots are original sample rows).
        scaling: ColumnScaling or None when the run never normalized.
        metadata: free-form dict; always carries converged, failure and
            the greedy history, plus whatever the producing run added.
    """

    def __init__(self, model, scaling=None, metadata=None):
        self.model = model
        self.scaling = scaling
        self.metadata = dict(metadata or {})

    def __repr__(self):
        return (
            f"ModelFile(degree={self.model.degree}, "
            f"columns={self.model.n_columns}, "
            f"converged={self.metadata.get('converged')})"
        )


def _pairs(values):
    return [[float(v.real), float(v.imag)] for v in np.asarray(values)]


def _from_pairs(pairs, what, path):
    try:
        arr = np.asarray(
            [complex(re, im) for re, im in pairs], dtype=np.complex128
        )
    except (TypeError, ValueError):
        raise FileFormatError(f"{path}: malformed {what} block") from None
    return arr


def write_model(path, model, scaling=None, metadata=None):
    """Write a model as a JSON document, atomically.

    The stored metadata starts from the model's own convergence record and
    history; caller-supplied entries are merged on top and win on clashes.
    """
    meta = {
        "converged": bool(model.converged),
        "failure": model.failure,
        "history": [
            [int(m), float(res), int(arg)] for m, res, arg in model.history
        ],
    }
    meta.update(metadata or {})
    snaps = np.ascontiguousarray(model.snapshots, dtype="<c16")
    doc = {
        "format": _MODEL_FORMAT,
        "version": _MODEL_VERSION,
        "supports": _pairs(model.supports),
        "weights": _pairs(model.weights),
        "support_indices": None
        if model.support_indices is None
        else [int(i) for i in model.support_indices],
        "snapshots": {
            "rows": int(snaps.shape[0]),
            "cols": int(snaps.shape[1]),
            "data": base64.b64encode(snaps.tobytes()).decode("ascii"),
        },
        "scaling": None
        if scaling is None
        else {
            "d": [float(v) for v in scaling.d],
            "zero_columns": [int(i) for i in scaling.zero_columns],
        },
        "metadata": meta,
    }
    payload = (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")
    _atomic_write_bytes(path, payload)
    return ModelFile(model, scaling, meta)


def read_model(path):
    """Read and validate a stored model document."""
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"{path}: not a JSON model file ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != _MODEL_FORMAT:
        raise FileFormatError(f"{path}: not a model document")
    if doc.get("version") != _MODEL_VERSION:
        raise FileFormatError(
            f"{path}: unsupported model format v{doc.get('version')}"
        )
    for key in ("supports", "weights", "snapshots", "metadata"):
        if key not in doc:
            raise FileFormatError(f"{path}: missing {key!r} block")

    supports = _from_pairs(doc["supports"], "supports", path)
    weights = _from_pairs(doc["weights"], "weights", path)
    if np.unique(supports).size != supports.size:
        raise FileFormatError(f"{path}: support points are not distinct")
    norm = np.linalg.norm(weights)
    if abs(norm - 1.0) > 1e-12:
        raise FileFormatError(
            f"{path}: weights have 2-norm {norm!r}, expected 1"
        )

    block = doc["snapshots"]
    try:
        rows, cols = int(block["rows"]), int(block["cols"])
        buf = base64.b64decode(block["data"], validate=True)
    except (KeyError, TypeError, ValueError):
        raise FileFormatError(f"{path}: malformed snapshots block") from None
    if len(buf) != 16 * rows * cols:
        raise FileFormatError(
            f"{path}: snapshot payload is {len(buf)} bytes, "
            f"header says {16 * rows * cols}"
        )
    snapshots = (
        np.frombuffer(buf, dtype="<c16").reshape((rows, cols)).astype(np.complex128)
    )

    indices = doc.get("support_indices")
    if indices is not None:
        indices = np.asarray([int(i) for i in indices], dtype=np.intp)

    meta = doc["metadata"]
    if not isinstance(meta, dict):
        raise FileFormatError(f"{path}: metadata must be an object")
    history = [
        (int(m), float(res), int(arg)) for m, res, arg in meta.get("history", [])
    ]

    try:
        model = BarycentricModel(
            supports,
            weights,
            snapshots,
            support_indices=indices,
            history=history,
            converged=bool(meta.get("converged", True)),
            failure=meta.get("failure"),
        )
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from None

    scaling = None
    if doc.get("scaling") is not None:
        sc = doc["scaling"]
        try:
            scaling = ColumnScaling(sc["d"], sc["zero_columns"])
        except (KeyError, TypeError, ValueError):
            raise FileFormatError(f"{path}: malformed scaling block") from None
        if np.any(scaling.d < 0.0):
            raise FileFormatError(f"{path}: negative column scale")

    return ModelFile(model, scaling, meta)
