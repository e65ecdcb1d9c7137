"""Sample archive persistence and CSV output.

Binary container, all fields little-endian:

    magic  4s   b"LGAS"
    version u16
    N       u32
    beta    f64
    sampler u16  (code from samplers.SAMPLER_IDS)
    seed    u64
    count   u64  rows
    ncols   u32  columns per row; when ncols < N the 1-based stored
                 indices follow as ncols u32 values
    rows    count * ncols f64
"""
import hashlib
import struct

import numpy as np

from .errors import ConfigError, DomainError
from .samplers import SAMPLER_IDS, SampleArchive

MAGIC = b"LGAS"
VERSION = 1
_HEAD = struct.Struct("<4sHIdHQQI")
_NAMES = {v: k for k, v in SAMPLER_IDS.items()}


def write_archive(path, arch):
    X = np.ascontiguousarray(arch.samples, dtype="<f8")
    count, ncols = X.shape
    if arch.sampler_id not in SAMPLER_IDS:
        raise ConfigError(f"unknown sampler id {arch.sampler_id!r}")
    if arch.indices is None and ncols != arch.N:
        raise DomainError("full archive rows must have N entries")
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, arch.N, float(arch.beta), SAMPLER_IDS[arch.sampler_id],
                            int(arch.seed) & ((1 << 64) - 1), count, ncols))
        if arch.indices is not None:
            fh.write(np.asarray(arch.indices, dtype="<u4").tobytes())
        fh.write(X.tobytes())


def read_archive(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEAD.size:
        raise DomainError("truncated archive header")
    magic, ver, N, beta, sid, seed, count, ncols = _HEAD.unpack_from(raw)
    if magic != MAGIC:
        raise DomainError("not a sample archive (bad magic)")
    if ver != VERSION:
        raise DomainError(f"unsupported archive version {ver}")
    off = _HEAD.size
    indices = None
    if ncols != N:
        indices = np.frombuffer(raw, "<u4", ncols, off).astype(np.int64)
        off += 4 * ncols
    need = off + 8 * count * ncols
    if len(raw) != need:
        raise DomainError(f"archive size {len(raw)} does not match header ({need} bytes)")
    X = np.frombuffer(raw, "<f8", count * ncols, off).reshape(count, ncols).astype(float)
    return SampleArchive(X, beta, N, _NAMES.get(sid, "tridiag"), seed, indices=indices)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows):
    """Plain CSV; floats use repr so equal values give equal bytes."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(v) for v in r) + "\n")


def read_csv(path):
    """(header, float array) for an all-numeric CSV."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data


def archive_csv(path, arch):
    cols = arch.indices if arch.indices is not None else np.arange(1, arch.N + 1)
    write_csv(path, [f"lambda_{k}" for k in cols], arch.samples)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()
