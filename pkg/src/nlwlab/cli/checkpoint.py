"""Binary checkpoints.

A frame is ``RNLW`` | version u32 | r_max f64 | n u64 | t f64 | phi[n] f64 |
phi_t[n] f64 | checksum u64, all little-endian. The checksum is BLAKE2b
with an 8-byte digest over every preceding byte of the frame. A
trajectory file is a plain concatenation of frames on one grid.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

from ..errors import CheckpointError
from ..linear_prop import Trajectory
from ..radial_field import FieldState, RadialGrid

MAGIC = b"RNLW"
VERSION = 1
_HEADER = struct.Struct("<4sIdQd")
FORMAT_ID = "RNLW v1: magic, u32 version, f64 r_max, u64 n, f64 t, f64[n] phi, f64[n] phi_t, u64 blake2b-8"


def _digest(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=8).digest()


def encode_frame(grid: RadialGrid, t: float, phi, phit) -> bytes:
    body = (_HEADER.pack(MAGIC, VERSION, grid.r_max, grid.n, float(t))
            + np.asarray(phi, dtype="<f8").tobytes()
            + np.asarray(phit, dtype="<f8").tobytes())
    return body + _digest(body)


def decode_frames(blob: bytes):
    """Yield (grid, t, phi, phit) for each frame in ``blob``."""
    pos = 0
    k = 0
    while pos < len(blob):
        if len(blob) - pos < _HEADER.size:
            raise CheckpointError(f"frame {k}: truncated header")
        magic, version, r_max, n, t = _HEADER.unpack_from(blob, pos)
        if magic != MAGIC:
            raise CheckpointError(f"frame {k}: bad magic {magic!r}")
        if version != VERSION:
            raise CheckpointError(f"frame {k}: unsupported version {version}")
        size = _HEADER.size + 16 * n
        end = pos + size + 8
        if end > len(blob):
            raise CheckpointError(f"frame {k}: truncated payload")
        body = blob[pos:pos + size]
        if _digest(body) != blob[pos + size:end]:
            raise CheckpointError(f"frame {k}: checksum mismatch")
        arrays = np.frombuffer(body, dtype="<f8", offset=_HEADER.size).astype(float)
        yield RadialGrid(r_max, int(n)), t, arrays[:n], arrays[n:]
        pos = end
        k += 1


def write_state(path, st: FieldState):
    with open(path, "wb") as fh:
        fh.write(encode_frame(st.grid, st.t, st.u.phi, st.ut.phi))


def read_state(path) -> FieldState:
    with open(path, "rb") as fh:
        frames = list(decode_frames(fh.read()))
    if len(frames) != 1:
        raise CheckpointError(f"expected one frame, found {len(frames)}")
    grid, t, phi, phit = frames[0]
    return FieldState.from_arrays(grid, phi, phit, t)


def write_trajectory(path, traj: Trajectory, every: int = 1):
    """Write every ``every``-th frame (the last frame is always kept)."""
    idx = list(range(0, len(traj), every))
    if idx[-1] != len(traj) - 1:
        idx.append(len(traj) - 1)
    with open(path, "wb") as fh:
        for i in idx:
            fh.write(encode_frame(traj.grid, traj.times[i], traj.phi[i], traj.phit[i]))


def read_trajectory(path, meta=None) -> Trajectory:
    with open(path, "rb") as fh:
        frames = list(decode_frames(fh.read()))
    if not frames:
        raise CheckpointError("no frames")
    grid = frames[0][0]
    if any(f[0] != grid for f in frames):
        raise CheckpointError("frames live on different grids")
    return Trajectory(grid, [f[1] for f in frames], np.array([f[2] for f in frames]),
                      np.array([f[3] for f in frames]), dict(meta or {}))
