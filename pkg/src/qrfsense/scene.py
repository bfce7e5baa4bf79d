"""Deployment geometry: scene files, target regions, labeling, location sampling.

A scene is a flat 2D urban layout: fixed transmitters, axis-aligned
rectangular buildings, a rectangular deployment area, and named square
target regions. Locations are sampled inside the deployment area (never
inside a building) and labeled 0 when they fall inside the active target
region, 1 otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

__all__ = [
    "Rect",
    "Scene",
    "SceneError",
    "TargetRegion",
    "LocationSample",
    "load_scene",
    "load_canonical_scene",
    "canonical_scene_text",
    "label",
    "sample_locations",
]


class SceneError(ValueError):
    """Raised when a scene file fails to parse or violates an invariant."""


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle, closed on all sides."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, x: float, y: float) -> bool:
        """Closed-rectangle membership (boundary counts as inside)."""
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def contains_interior(self, x: float, y: float) -> bool:
        """Open-rectangle membership (boundary counts as outside)."""
        return self.x_min < x < self.x_max and self.y_min < y < self.y_max

    def covers(self, other: "Rect") -> bool:
        return (
            self.x_min <= other.x_min
            and other.x_max <= self.x_max
            and self.y_min <= other.y_min
            and other.y_max <= self.y_max
        )


@dataclass(frozen=True)
class TargetRegion:
    """Named square region whose interior-or-boundary points get label 0."""

    name: str
    rect: Rect


@dataclass(frozen=True)
class Scene:
    """Static deployment environment shared by all samples of an experiment."""

    transmitters: tuple[tuple[float, float], ...]
    buildings: tuple[Rect, ...]
    bounds: Rect
    carrier_frequency: float
    targets: tuple[TargetRegion, ...] = ()

    def target(self, name: str) -> TargetRegion:
        for t in self.targets:
            if t.name == name:
                return t
        known = ", ".join(t.name for t in self.targets) or "<none>"
        raise SceneError(f"unknown target {name!r} (scene defines: {known})")

    def in_building(self, x: float, y: float) -> bool:
        """True if (x, y) lies strictly inside any building."""
        return any(b.contains_interior(x, y) for b in self.buildings)


@dataclass(frozen=True)
class LocationSample:
    index: int
    x: float
    y: float
    label: int


def _rect_from(obj: dict, path: str) -> Rect:
    try:
        r = Rect(
            float(obj["x_min"]),
            float(obj["x_max"]),
            float(obj["y_min"]),
            float(obj["y_max"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneError(f"{path}: malformed rectangle ({exc})") from exc
    if not (r.x_min < r.x_max and r.y_min < r.y_max):
        raise SceneError(f"{path}: degenerate rectangle (min must be < max)")
    if not all(math.isfinite(v) for v in (r.x_min, r.x_max, r.y_min, r.y_max)):
        raise SceneError(f"{path}: non-finite rectangle coordinate")
    return r


def load_scene(text: str) -> Scene:
    """Parse and validate a UTF-8 JSON scene description.

    Expected keys: ``carrier_frequency_hz``, ``bounds``, ``transmitters``
    (array of ``[x, y]``), ``buildings`` and ``targets`` (arrays of
    rectangles, targets additionally named). Raises SceneError with the
    offending field path on any violation.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"scene file is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SceneError("scene file must hold a JSON object")

    try:
        fc = float(obj["carrier_frequency_hz"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SceneError(f"carrier_frequency_hz: missing or not a number ({exc})") from exc
    if not (fc > 0 and math.isfinite(fc)):
        raise SceneError("carrier_frequency_hz: must be a positive finite number")

    if "bounds" not in obj:
        raise SceneError("bounds: missing")
    bounds = _rect_from(obj["bounds"], "bounds")

    raw_tx = obj.get("transmitters")
    if not isinstance(raw_tx, list) or len(raw_tx) == 0:
        raise SceneError("transmitters: need at least one transmitter")
    transmitters = []
    for i, pt in enumerate(raw_tx):
        try:
            x, y = float(pt[0]), float(pt[1])
        except (TypeError, ValueError, IndexError) as exc:
            raise SceneError(f"transmitters[{i}]: expected [x, y] ({exc})") from exc
        if not bounds.contains(x, y):
            raise SceneError(f"transmitters[{i}]: outside bounds")
        transmitters.append((x, y))

    buildings = []
    for i, b in enumerate(obj.get("buildings", [])):
        rect = _rect_from(b, f"buildings[{i}]")
        if not bounds.covers(rect):
            raise SceneError(f"buildings[{i}]: extends outside bounds")
        buildings.append(rect)

    targets = []
    for i, t in enumerate(obj.get("targets", [])):
        if not isinstance(t, dict) or "name" not in t:
            raise SceneError(f"targets[{i}].name: missing")
        rect = _rect_from(t, f"targets[{i}]")
        if not bounds.covers(rect):
            raise SceneError(f"targets[{i}]: extends outside bounds")
        targets.append(TargetRegion(str(t["name"]), rect))

    return Scene(
        transmitters=tuple(transmitters),
        buildings=tuple(buildings),
        bounds=bounds,
        carrier_frequency=fc,
        targets=tuple(targets),
    )


def canonical_scene_text() -> str:
    """Raw JSON of the scene that ships with the package."""
    return resources.files("qrfsense.data").joinpath("canonical_scene.json").read_text()


def load_canonical_scene() -> Scene:
    return load_scene(canonical_scene_text())


def label(position: tuple[float, float], region: TargetRegion) -> int:
    """0 when the position lies in the closed target rectangle, else 1."""
    x, y = position
    return 0 if region.rect.contains(x, y) else 1


def _draw_free(rng: np.random.Generator, scene: Scene, rect: Rect,
               accept, max_tries: int = 100_000) -> tuple[float, float]:
    """Uniform draw over `rect`, rejecting building interiors and accept()==False."""
    for _ in range(max_tries):
        x = rng.uniform(rect.x_min, rect.x_max)
        y = rng.uniform(rect.y_min, rect.y_max)
        if scene.in_building(x, y):
            continue
        if accept(x, y):
            return (x, y)
    raise SceneError("sampling failed: acceptance region appears empty")


def sample_locations(
    scene: Scene,
    region: TargetRegion,
    m: int,
    mode: str = "uniform",
    seed: int = 0,
    in_region_fraction: float = 0.5,
) -> list[LocationSample]:
    """Draw `m` labeled agent locations, deterministically for a given seed.

    ``uniform`` draws i.i.d. over the deployment bounds; ``balanced`` draws
    a fixed fraction inside the target region and the rest outside, then
    shuffles the order. Building interiors are always rejected so every
    sample is a valid receiver position.
    """
    if m <= 0:
        raise ValueError("m must be positive")
    if mode not in ("uniform", "balanced"):
        raise ValueError(f"unknown sampling mode {mode!r}")
    rng = np.random.default_rng(seed)

    points: list[tuple[float, float]]
    if mode == "uniform":
        points = [
            _draw_free(rng, scene, scene.bounds, lambda x, y: True) for _ in range(m)
        ]
    else:
        n_in = int(round(m * in_region_fraction))
        inside = [
            _draw_free(rng, scene, region.rect, lambda x, y: True)
            for _ in range(n_in)
        ]
        outside = [
            _draw_free(
                rng, scene, scene.bounds,
                lambda x, y: label((x, y), region) == 1,
            )
            for _ in range(m - n_in)
        ]
        points = inside + outside
        order = rng.permutation(m)
        points = [points[i] for i in order]

    return [
        LocationSample(index=i, x=x, y=y, label=label((x, y), region))
        for i, (x, y) in enumerate(points)
    ]
