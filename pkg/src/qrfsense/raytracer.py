"""Image-method multipath tracer for 2D scenes of rectangular buildings.

For each transmitter the tracer emits the line-of-sight path (when
unobstructed) plus every specular reflection path off building walls up to
a configurable bounce count. Each path carries its geometric length, the
propagation delay, and a complex gain

    a = g * sqrt(P) * (lambda_c / (4 pi d)) * Gamma^n * exp(i n phi_refl)

with free-space amplitude decay, a constant per-bounce reflection
coefficient, and unit transmit power. The per-path delay phase
exp(-i omega tau) is applied downstream when paths are superposed.

A deliberately independent brute-force enumerator (receiver-side mirror
composition with explicit homogeneous reflection matrices) serves as the
correctness oracle for the production back-tracing implementation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .scene import Rect, Scene

__all__ = [
    "SPEED_OF_LIGHT",
    "RadioConfig",
    "Path",
    "PathSet",
    "scene_walls",
    "segment_visible",
    "reflect_point",
    "trace_paths",
    "brute_force_paths",
    "validate_against_oracle",
]

SPEED_OF_LIGHT = 2.99792458e8  # m/s

Point = tuple[float, float]
Wall = tuple[Point, Point]

_EPS_PARAM = 1e-12
_EPS_INTERIOR = 1e-9


@dataclass(frozen=True)
class RadioConfig:
    """Propagation constants folded into per-path gains.

    `coupling` absorbs the dipole moment and polarization projection of the
    receiver; `symbol_magnitude`/`symbol_phase` describe the unmodulated
    carrier (fixed |s|=1, theta=0 by default) and multiply straight into
    the gain.
    """

    coupling: float = 1.0
    reflection_magnitude: float = 0.7
    reflection_phase: float = math.pi
    max_order: int = 2
    symbol_magnitude: float = 1.0
    symbol_phase: float = 0.0

    def __post_init__(self):
        if not self.coupling > 0:
            raise ValueError("coupling must be positive")
        if not (0 < self.reflection_magnitude <= 1):
            raise ValueError("reflection_magnitude must lie in (0, 1]")
        if self.max_order < 0:
            raise ValueError("max_order must be >= 0")


@dataclass(frozen=True)
class Path:
    """One propagation path from transmitter `tx` to the receiver."""

    tx: int
    order: int
    length: float              # meters
    delay: float               # seconds, = length / c
    gain: complex              # dimensionless complex amplitude
    walls: tuple[int, ...] = ()  # wall indices hit, in bounce order


@dataclass(frozen=True)
class PathSet:
    """All paths reaching one receiver location, sorted by ascending delay."""

    rx: Point
    paths: tuple[Path, ...]

    def __len__(self) -> int:
        return len(self.paths)

    def __iter__(self):
        return iter(self.paths)


def scene_walls(scene: Scene) -> tuple[Wall, ...]:
    """The four faces of every building, in a fixed deterministic order."""
    walls: list[Wall] = []
    for b in scene.buildings:
        walls.append(((b.x_min, b.y_min), (b.x_max, b.y_min)))  # bottom
        walls.append(((b.x_min, b.y_max), (b.x_max, b.y_max)))  # top
        walls.append(((b.x_min, b.y_min), (b.x_min, b.y_max)))  # left
        walls.append(((b.x_max, b.y_min), (b.x_max, b.y_max)))  # right
    return tuple(walls)


def _crosses_interior(px: float, py: float, qx: float, qy: float, rect: Rect) -> bool:
    """Liang-Barsky clip; blocked only when the overlap midpoint is strictly
    inside the rectangle, so edge tangency and corner grazes stay visible."""
    t0, t1 = 0.0, 1.0
    dx = qx - px
    dy = qy - py
    for d, lo, hi, p0 in ((dx, rect.x_min, rect.x_max, px),
                          (dy, rect.y_min, rect.y_max, py)):
        if d == 0.0:
            if p0 < lo or p0 > hi:
                return False
        else:
            ta = (lo - p0) / d
            tb = (hi - p0) / d
            if ta > tb:
                ta, tb = tb, ta
            if ta > t0:
                t0 = ta
            if tb < t1:
                t1 = tb
            if t0 >= t1:
                return False
    tm = 0.5 * (t0 + t1)
    mx = px + tm * dx
    my = py + tm * dy
    return (rect.x_min + _EPS_INTERIOR < mx < rect.x_max - _EPS_INTERIOR
            and rect.y_min + _EPS_INTERIOR < my < rect.y_max - _EPS_INTERIOR)


def segment_visible(p: Point, q: Point, scene: Scene) -> bool:
    """True iff the open segment pq intersects no building interior."""
    px, py = p
    qx, qy = q
    for b in scene.buildings:
        if _crosses_interior(px, py, qx, qy, b):
            return False
    return True


def reflect_point(p: Point, wall: Wall) -> Point:
    """Mirror image of p across the supporting line of the wall segment."""
    (ax, ay), (bx, by) = wall
    dx, dy = bx - ax, by - ay
    norm2 = dx * dx + dy * dy
    if norm2 == 0.0:
        raise ValueError("wall has zero length")
    # normal component of (p - a), doubled
    nx, ny = -dy, dx
    proj = ((p[0] - ax) * nx + (p[1] - ay) * ny) / norm2
    return (p[0] - 2.0 * proj * nx, p[1] - 2.0 * proj * ny)


def _segment_line_hit(p0: Point, p1: Point, wall: Wall):
    """Intersection of segment p0->p1 with the wall.

    Returns (t, s, point) with t the parameter along p0->p1 and s along the
    wall, or None when parallel. Callers enforce the validity windows.
    """
    (ax, ay), (bx, by) = wall
    d1x, d1y = p1[0] - p0[0], p1[1] - p0[1]
    d2x, d2y = bx - ax, by - ay
    denom = d1x * d2y - d1y * d2x
    scale = abs(d1x) + abs(d1y) + abs(d2x) + abs(d2y)
    if abs(denom) <= 1e-14 * max(scale * scale, 1.0):
        return None
    rx, ry = ax - p0[0], ay - p0[1]
    t = (rx * d2y - ry * d2x) / denom
    s = (rx * d1y - ry * d1x) / denom
    qx = ax + s * d2x
    qy = ay + s * d2y
    return t, s, (qx, qy)


@lru_cache(maxsize=32)
def _image_chains(tx: Point, walls: tuple[Wall, ...], max_order: int):
    """Every wall sequence up to max_order with the transmitter image chain.

    Images depend only on the transmitter and the walls, so the chains are
    cached and reused across receiver locations.
    """
    chains: list[tuple[tuple[int, ...], tuple[Point, ...]]] = []
    frontier: list[tuple[tuple[int, ...], tuple[Point, ...]]] = [((), (tx,))]
    for _ in range(max_order):
        grown = []
        for seq, images in frontier:
            last = seq[-1] if seq else -1
            for w, wall in enumerate(walls):
                if w == last:
                    continue  # immediate re-reflection off the same wall is impossible
                grown.append((seq + (w,), images + (reflect_point(images[-1], wall),)))
        chains.extend(grown)
        frontier = grown
    return tuple(chains)


def _backtrace(tx: Point, images: tuple[Point, ...], seq: tuple[int, ...],
               rx: Point, walls: tuple[Wall, ...], scene: Scene):
    """Walk the reflection points from the receiver back to the transmitter.

    Returns (reflection points, unfolded length) or None when the sequence
    yields no valid, unoccluded specular path.
    """
    n = len(seq)
    pts: list[Point] = [rx] * n
    p = rx
    for j in range(n, 0, -1):
        hit = _segment_line_hit(images[j], p, walls[seq[j - 1]])
        if hit is None:
            return None
        t, s, q = hit
        if not (_EPS_PARAM < t < 1.0 - _EPS_PARAM):
            return None
        if not (-_EPS_PARAM <= s <= 1.0 + _EPS_PARAM):
            return None
        pts[j - 1] = q
        p = q
    nodes = [tx, *pts, rx]
    for a, b in zip(nodes, nodes[1:]):
        if math.dist(a, b) <= 1e-12:
            return None
        if not segment_visible(a, b, scene):
            return None
    return pts, math.dist(images[n], rx)


def _path_gain(d: float, order: int, wavelength: float, config: RadioConfig) -> complex:
    amp = (config.coupling * config.symbol_magnitude
           * wavelength / (4.0 * math.pi * d)
           * config.reflection_magnitude ** order)
    phase = order * config.reflection_phase + config.symbol_phase
    return amp * complex(math.cos(phase), math.sin(phase))


def trace_paths(scene: Scene, rx: Point, config: RadioConfig) -> PathSet:
    """All LOS and specular reflection paths reaching `rx`, sorted by delay."""
    x, y = rx
    if not scene.bounds.contains(x, y):
        raise ValueError(f"receiver {rx} outside scene bounds")
    if scene.in_building(x, y):
        raise ValueError(f"receiver {rx} lies inside a building")

    walls = scene_walls(scene)
    wavelength = SPEED_OF_LIGHT / scene.carrier_frequency
    found: list[Path] = []
    seen: set = set()
    for k, tx in enumerate(scene.transmitters):
        if math.dist(tx, rx) > 1e-12 and segment_visible(tx, rx, scene):
            d = math.dist(tx, rx)
            found.append(Path(k, 0, d, d / SPEED_OF_LIGHT,
                              _path_gain(d, 0, wavelength, config)))
        for seq, images in _image_chains(tx, walls, config.max_order):
            if not seq:
                continue
            traced = _backtrace(tx, images, seq, rx, walls, scene)
            if traced is None:
                continue
            pts, d = traced
            # geometric duplicates can arise from collinear walls of
            # different buildings meeting at a shared boundary point
            key = (k, len(seq)) + tuple(round(c * 1e7) for p in pts for c in p)
            if key in seen:
                continue
            seen.add(key)
            found.append(Path(k, len(seq), d, d / SPEED_OF_LIGHT,
                              _path_gain(d, len(seq), wavelength, config), seq))

    found.sort(key=lambda p: (p.delay, p.tx, p.order, p.walls))
    return PathSet(rx=rx, paths=tuple(found))


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def _mirror_matrix(wall: Wall) -> np.ndarray:
    """3x3 homogeneous reflection across the wall's supporting line."""
    (ax, ay), (bx, by) = wall
    dx, dy = bx - ax, by - ay
    norm2 = dx * dx + dy * dy
    if norm2 == 0.0:
        raise ValueError("wall has zero length")
    nx, ny = -dy, dx
    m = np.eye(3)
    m[0, 0] = 1.0 - 2.0 * nx * nx / norm2
    m[0, 1] = -2.0 * nx * ny / norm2
    m[1, 0] = -2.0 * nx * ny / norm2
    m[1, 1] = 1.0 - 2.0 * ny * ny / norm2
    m[0, 2] = 2.0 * nx * (ax * nx + ay * ny) / norm2
    m[1, 2] = 2.0 * ny * (ax * nx + ay * ny) / norm2
    return m


def brute_force_paths(scene: Scene, rx: Point, config: RadioConfig):
    """Oracle enumeration: all ordered wall sequences, solved by composing
    explicit mirror matrices on the receiver side and forward-walking the
    reflection points from the transmitter.

    Returns a list of (transmitter index, wall sequence, length) triples.
    """
    walls = scene_walls(scene)
    mirrors = [_mirror_matrix(w) for w in walls]
    out = []
    for k, tx in enumerate(scene.transmitters):
        if math.dist(tx, rx) > 1e-12 and segment_visible(tx, rx, scene):
            out.append((k, (), math.dist(tx, rx)))
        for n in range(1, config.max_order + 1):
            for seq in itertools.product(range(len(walls)), repeat=n):
                # receiver image after unfolding the tail of the sequence:
                # targets[j] = R_{w_j} ... R_{w_n} rx
                vec = np.array([rx[0], rx[1], 1.0])
                targets: list[Point] = [rx] * n
                for j in range(n - 1, -1, -1):
                    vec = mirrors[seq[j]] @ vec
                    targets[j] = (vec[0], vec[1])
                p = tx
                pts: list[Point] = []
                ok = True
                for j in range(n):
                    hit = _segment_line_hit(p, targets[j], walls[seq[j]])
                    if hit is None:
                        ok = False
                        break
                    t, s, q = hit
                    if not (_EPS_PARAM < t < 1.0 - _EPS_PARAM):
                        ok = False
                        break
                    if not (-_EPS_PARAM <= s <= 1.0 + _EPS_PARAM):
                        ok = False
                        break
                    pts.append(q)
                    p = q
                if not ok:
                    continue
                nodes = [tx, *pts, rx]
                if any(math.dist(a, b) <= 1e-12 for a, b in zip(nodes, nodes[1:])):
                    continue
                if not all(segment_visible(a, b, scene) for a, b in zip(nodes, nodes[1:])):
                    continue
                out.append((k, seq, math.dist(tx, targets[0])))
    return out


def validate_against_oracle(scene: Scene, rx: Point, config: RadioConfig,
                            tol: float = 1e-9) -> bool:
    """True iff the production tracer and the brute-force oracle agree on
    the multiset of (transmitter, wall sequence) paths with lengths within
    `tol` meters."""
    traced = {(p.tx, p.walls): p.length for p in trace_paths(scene, rx, config)}
    oracle = {(k, tuple(seq)): d for k, seq, d in brute_force_paths(scene, rx, config)}
    if set(traced) != set(oracle):
        return False
    return all(abs(traced[key] - oracle[key]) <= tol for key in traced)
