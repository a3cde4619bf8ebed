"""Deterministic terrain generation and continuous surface queries.

Heightfields are regular grids of node heights with bilinear interpolation
between nodes.  Curriculum terrains come from seeded fractal gradient noise;
cave worlds add a coarse block-occupancy layer (4 m x 4 m blocks) where
non-traversable blocks are raised into walls so that contact handling needs
no special casing.
"""
from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import InvalidSpecError, OutOfBoundsError

BLOCK_SIZE = 4.0
WALL_HEIGHT = 2.0
DEFAULT_CELL = 0.25

_MAGIC = b"SSTF"
_VERSION = 1


@dataclass
class HeightField:
    """Sampled terrain surface: ``h[ix, iy]`` is the height at node (ix, iy)."""

    h: np.ndarray
    cell: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=np.float64)
        if self.h.ndim != 2 or self.h.shape[0] < 2 or self.h.shape[1] < 2:
            raise InvalidSpecError("height grid needs at least 2x2 nodes")
        if not self.cell > 0:
            raise InvalidSpecError("cell size must be positive")
        if not np.all(np.isfinite(self.h)):
            raise InvalidSpecError("heights must be finite")

    @property
    def nx(self) -> int:
        return self.h.shape[0]

    @property
    def ny(self) -> int:
        return self.h.shape[1]

    @property
    def size_x(self) -> float:
        return (self.nx - 1) * self.cell

    @property
    def size_y(self) -> float:
        return (self.ny - 1) * self.cell

    def bounds(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin
        return x0, y0, x0 + self.size_x, y0 + self.size_y


@dataclass
class TerrainSpec:
    """Parameters of a seeded fractal-noise curriculum terrain."""

    seed: int
    size_x: float = 16.0
    size_y: float = 16.0
    amplitude: float = 0.25
    octaves: int = 3
    base_frequency: float = 0.35
    persistence: float = 0.5
    cell: float = DEFAULT_CELL

    def validate(self):
        if self.size_x <= 0 or self.size_y <= 0:
            raise InvalidSpecError("terrain size must be positive")
        if self.amplitude < 0:
            raise InvalidSpecError("amplitude must be >= 0")
        if self.octaves < 1:
            raise InvalidSpecError("octaves must be >= 1")
        if not (0 < self.persistence <= 1):
            raise InvalidSpecError("persistence must be in (0, 1]")
        if self.base_frequency <= 0 or self.cell <= 0:
            raise InvalidSpecError("base_frequency and cell must be positive")


@dataclass
class CaveMap:
    """Heightfield plus 4 m block occupancy (True = traversable floor)."""

    field: HeightField
    occupancy: np.ndarray
    block_size: float = BLOCK_SIZE
    wall_height: float = WALL_HEIGHT
    seed: int = 0

    def __post_init__(self):
        self.occupancy = np.asarray(self.occupancy, dtype=bool)


class _PerlinNoise:
    """Classic gradient-lattice noise with a seed-derived permutation table."""

    _N_GRAD = 16

    def __init__(self, seed: int):
        rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
        self.perm = rng.permutation(256).astype(np.int64)
        self.perm = np.concatenate([self.perm, self.perm])
        angles = 2.0 * np.pi * np.arange(self._N_GRAD) / self._N_GRAD
        self.grad_x = np.cos(angles)
        self.grad_y = np.sin(angles)
        # decorrelate the sampling lattice from the node grid
        self.offset = rng.uniform(2.0, 200.0, size=2)

    @staticmethod
    def _fade(t):
        return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)

    def _grad_dot(self, hashed, dx, dy):
        idx = hashed % self._N_GRAD
        return self.grad_x[idx] * dx + self.grad_y[idx] * dy

    def sample(self, x, y):
        """Noise in roughly [-0.71, 0.71]; x, y are lattice-unit arrays."""
        x = np.asarray(x, dtype=np.float64) + self.offset[0]
        y = np.asarray(y, dtype=np.float64) + self.offset[1]
        xi = np.floor(x).astype(np.int64)
        yi = np.floor(y).astype(np.int64)
        xf = x - xi
        yf = y - yi
        xi &= 255
        yi &= 255

        aa = self.perm[self.perm[xi] + yi]
        ab = self.perm[self.perm[xi] + yi + 1]
        ba = self.perm[self.perm[xi + 1] + yi]
        bb = self.perm[self.perm[xi + 1] + yi + 1]

        u = self._fade(xf)
        v = self._fade(yf)
        n00 = self._grad_dot(aa, xf, yf)
        n10 = self._grad_dot(ba, xf - 1.0, yf)
        n01 = self._grad_dot(ab, xf, yf - 1.0)
        n11 = self._grad_dot(bb, xf - 1.0, yf - 1.0)
        nx0 = n00 + u * (n10 - n00)
        nx1 = n01 + u * (n11 - n01)
        return nx0 + v * (nx1 - nx0)


def _fractal_noise(seed: int, xs, ys, octaves: int, base_frequency: float, persistence: float):
    """Octave sum normalized so the result stays within [-1, 1]."""
    total = np.zeros(np.broadcast(xs, ys).shape)
    amp = 1.0
    freq = base_frequency
    norm = 0.0
    for o in range(octaves):
        noise = _PerlinNoise(seed * 1000003 + o).sample(xs * freq, ys * freq)
        total = total + amp * noise
        norm += amp
        amp *= persistence
        freq *= 2.0
    # single-octave peak magnitude is sqrt(2)/2 for unit gradients
    return total / (norm * (math.sqrt(2.0) / 2.0))


def generate_perlin_terrain(spec: TerrainSpec) -> HeightField:
    """Deterministic curriculum heightfield; heights within +-amplitude."""
    spec.validate()
    nx = int(round(spec.size_x / spec.cell)) + 1
    ny = int(round(spec.size_y / spec.cell)) + 1
    xs = np.arange(nx)[:, None] * spec.cell
    ys = np.arange(ny)[None, :] * spec.cell
    if spec.amplitude == 0.0:
        h = np.zeros((nx, ny))
    else:
        h = spec.amplitude * _fractal_noise(
            spec.seed, xs, ys, spec.octaves, spec.base_frequency, spec.persistence
        )
    return HeightField(h=h, cell=spec.cell)


def make_flat_field(size_x: float, size_y: float, cell: float = DEFAULT_CELL, height: float = 0.0) -> HeightField:
    nx = int(round(size_x / cell)) + 1
    ny = int(round(size_y / cell)) + 1
    return HeightField(h=np.full((nx, ny), float(height)), cell=cell)


def make_slope_field(size_x: float, size_y: float, angle_deg: float, cell: float = DEFAULT_CELL) -> HeightField:
    """Plane rising along +x at the given grade."""
    nx = int(round(size_x / cell)) + 1
    ny = int(round(size_y / cell)) + 1
    xs = np.arange(nx)[:, None] * cell
    h = np.broadcast_to(xs * math.tan(math.radians(angle_deg)), (nx, ny)).copy()
    return HeightField(h=h, cell=cell)


def make_composite_field(
    size_x: float,
    size_y: float,
    angle_deg: float,
    split_x: float,
    cell: float = DEFAULT_CELL,
) -> HeightField:
    """Flat for x < split_x, then a plane rising at ``angle_deg`` along +x."""
    nx = int(round(size_x / cell)) + 1
    ny = int(round(size_y / cell)) + 1
    xs = np.arange(nx)[:, None] * cell
    ramp = np.maximum(0.0, xs - split_x) * math.tan(math.radians(angle_deg))
    return HeightField(h=np.broadcast_to(ramp, (nx, ny)).copy(), cell=cell)


def _carve_blocks(rng: np.random.Generator, nbx: int, nby: int) -> np.ndarray:
    """Corridor-and-chamber carving by a seeded tunneler walk."""
    occ = np.zeros((nbx, nby), dtype=bool)
    target_frac = rng.uniform(0.40, 0.60)
    target = max(10, int(round(target_frac * nbx * nby)))
    x, y = nbx // 2, nby // 2
    occ[x, y] = True
    carved = 1
    dirs = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]])
    while carved < target:
        if rng.uniform() < 0.12:
            # restart from an already carved block to branch corridors
            idx = rng.integers(0, carved)
            xs, ys = np.nonzero(occ)
            x, y = int(xs[idx % xs.size]), int(ys[idx % ys.size])
        d = dirs[rng.integers(0, 4)]
        run = int(rng.integers(2, 7))
        for _ in range(run):
            x = int(np.clip(x + d[0], 0, nbx - 1))
            y = int(np.clip(y + d[1], 0, nby - 1))
            if not occ[x, y]:
                occ[x, y] = True
                carved += 1
            if carved >= target:
                break
        # occasionally widen into a chamber
        if rng.uniform() < 0.25:
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    cx = int(np.clip(x + dx, 0, nbx - 1))
                    cy = int(np.clip(y + dy, 0, nby - 1))
                    if not occ[cx, cy]:
                        occ[cx, cy] = True
                        carved += 1
    return occ


def _largest_component(occ: np.ndarray) -> np.ndarray:
    """Keep only the largest 8-connected traversable component."""
    nbx, nby = occ.shape
    labels = np.zeros_like(occ, dtype=np.int32)
    best_label, best_size = 0, 0
    next_label = 0
    for sx in range(nbx):
        for sy in range(nby):
            if occ[sx, sy] and labels[sx, sy] == 0:
                next_label += 1
                stack = [(sx, sy)]
                labels[sx, sy] = next_label
                size = 0
                while stack:
                    cx, cy = stack.pop()
                    size += 1
                    for dx in (-1, 0, 1):
                        for dy in (-1, 0, 1):
                            nx_, ny_ = cx + dx, cy + dy
                            if 0 <= nx_ < nbx and 0 <= ny_ < nby and occ[nx_, ny_] and labels[nx_, ny_] == 0:
                                labels[nx_, ny_] = next_label
                                stack.append((nx_, ny_))
                if size > best_size:
                    best_size, best_label = size, next_label
    return labels == best_label


def generate_cave(
    seed: int,
    size_x: float,
    size_y: float,
    relief_amplitude: float = 0.15,
    cell: float = DEFAULT_CELL,
) -> CaveMap:
    """Seeded cave world: connected corridor floor with uneven micro-relief,
    everything else raised into walls."""
    if size_x < 20.0 or size_y < 20.0:
        raise InvalidSpecError("cave needs at least 20 m per axis")
    nbx = math.ceil(size_x / BLOCK_SIZE)
    nby = math.ceil(size_y / BLOCK_SIZE)
    rng = np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    occ = _largest_component(_carve_blocks(rng, nbx, nby))

    relief_spec = TerrainSpec(
        seed=seed ^ 0x5EED,
        size_x=nbx * BLOCK_SIZE,
        size_y=nby * BLOCK_SIZE,
        amplitude=relief_amplitude,
        octaves=3,
        base_frequency=0.3,
        persistence=0.5,
        cell=cell,
    )
    field = generate_perlin_terrain(relief_spec)

    # raise nodes over non-traversable blocks into walls
    nx, ny = field.nx, field.ny
    node_bx = np.minimum((np.arange(nx) * cell // BLOCK_SIZE).astype(int), nbx - 1)
    node_by = np.minimum((np.arange(ny) * cell // BLOCK_SIZE).astype(int), nby - 1)
    wall_mask = ~occ[node_bx[:, None], node_by[None, :]]
    field.h[wall_mask] += WALL_HEIGHT
    return CaveMap(field=field, occupancy=occ, seed=seed)


def to_occupancy_grid(cave: CaveMap) -> np.ndarray:
    """The block occupancy matrix embedded at generation time."""
    return cave.occupancy


def block_center(ix: int, iy: int, block_size: float = BLOCK_SIZE) -> tuple[float, float]:
    return (ix + 0.5) * block_size, (iy + 0.5) * block_size


def world_to_block(x: float, y: float, occupancy_shape, block_size: float = BLOCK_SIZE) -> tuple[int, int]:
    bx = int(np.clip(x // block_size, 0, occupancy_shape[0] - 1))
    by = int(np.clip(y // block_size, 0, occupancy_shape[1] - 1))
    return bx, by


def _locate(field: HeightField, x, y, clamp: bool):
    x0, y0, x1, y1 = field.bounds()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if clamp:
        x = np.clip(x, x0, x1)
        y = np.clip(y, y0, y1)
    elif np.any(x < x0) or np.any(x > x1) or np.any(y < y0) or np.any(y > y1):
        raise OutOfBoundsError(f"query outside terrain bounds [{x0},{x1}]x[{y0},{y1}]")
    fx = (x - x0) / field.cell
    fy = (y - y0) / field.cell
    ix = np.minimum(fx.astype(np.int64), field.nx - 2)
    iy = np.minimum(fy.astype(np.int64), field.ny - 2)
    return ix, iy, fx - ix, fy - iy


def sample_heights(field: HeightField, x, y, clamp: bool = False):
    """Vectorized bilinear height lookup."""
    ix, iy, u, v = _locate(field, x, y, clamp)
    h = field.h
    h00 = h[ix, iy]
    h10 = h[ix + 1, iy]
    h01 = h[ix, iy + 1]
    h11 = h[ix + 1, iy + 1]
    return (
        h00 * (1 - u) * (1 - v)
        + h10 * u * (1 - v)
        + h01 * (1 - u) * v
        + h11 * u * v
    )


def sample_heights_normals(field: HeightField, x, y, clamp: bool = False):
    """Bilinear heights plus unit normals of the interpolated patch."""
    ix, iy, u, v = _locate(field, x, y, clamp)
    h = field.h
    h00 = h[ix, iy]
    h10 = h[ix + 1, iy]
    h01 = h[ix, iy + 1]
    h11 = h[ix + 1, iy + 1]
    height = h00 * (1 - u) * (1 - v) + h10 * u * (1 - v) + h01 * (1 - u) * v + h11 * u * v
    dhdx = ((h10 - h00) * (1 - v) + (h11 - h01) * v) / field.cell
    dhdy = ((h01 - h00) * (1 - u) + (h11 - h10) * u) / field.cell
    inv_len = 1.0 / np.sqrt(dhdx * dhdx + dhdy * dhdy + 1.0)
    normal = np.stack([-dhdx * inv_len, -dhdy * inv_len, inv_len], axis=-1)
    return height, normal


def sample_surface(field: HeightField, x: float, y: float):
    """Height and unit surface normal at a single in-bounds point."""
    height, normal = sample_heights_normals(field, float(x), float(y), clamp=False)
    return float(height), np.asarray(normal, dtype=float).reshape(3)


def save_terrain(path, obj) -> None:
    """Write a HeightField or CaveMap in the SSTF binary format."""
    if isinstance(obj, CaveMap):
        field, cave = obj.field, obj
        kind = 1
    else:
        field, cave = obj, None
        kind = 0
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<HB", _VERSION, kind))
        f.write(struct.pack("<IIddd", field.nx, field.ny, field.cell, field.origin[0], field.origin[1]))
        f.write(field.h.astype("<f4").tobytes(order="C"))
        if cave is not None:
            nbx, nby = cave.occupancy.shape
            f.write(struct.pack("<IIdd", nbx, nby, cave.block_size, cave.wall_height))
            f.write(np.packbits(cave.occupancy.reshape(-1)).tobytes())


def load_terrain(path):
    """Read an SSTF file back into a HeightField or CaveMap."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != _MAGIC:
        raise InvalidSpecError("not an SSTF terrain file")
    version, kind = struct.unpack_from("<HB", data, 4)
    if version != _VERSION:
        raise InvalidSpecError(f"unsupported SSTF version {version}")
    off = 7
    nx, ny, cell, ox, oy = struct.unpack_from("<IIddd", data, off)
    off += struct.calcsize("<IIddd")
    count = nx * ny
    h = np.frombffer = np.frombuffer(data, dtype="<f4", count=count, offset=off).astype(np.float64)
    off += count * 4
    field = HeightField(h=h.reshape(nx, ny), cell=cell, origin=(ox, oy))
    if kind == 0:
        return field
    nbx, nby, block, wall = struct.unpack_from("<IIdd", data, off)
    off += struct.calcsize("<IIdd")
    nbits = nbx * nby
    occ_bytes = np.frombuffer(data, dtype=np.uint8, count=(nbits + 7) // 8, offset=off)
    occ = np.unpackbits(occ_bytes)[:nbits].reshape(nbx, nby).astype(bool)
    return CaveMap(field=field, occupancy=occ, block_size=block, wall_height=wall)
