"""
Synthetic desk-scale datasets.

Images are anti-aliased renderings of parametric 2D shapes; the category is the shape type. Volumes are analytic signed
distance functions built from primitives, so exact SDF values are available at any coordinate; the category is the
primitive family. Every generator is a pure function of (spec, count, seed): instance i draws from its own stream.
"""

__all__ = [
    "IMAGE_CATEGORIES",
    "SDF_CATEGORIES",
    "BoxSdf",
    "CapsuleSdf",
    "ImageInstance",
    "ImageShape",
    "Instance",
    "Modality",
    "SdfInstance",
    "SdfShape",
    "SphereSdf",
    "ToyImageSpec",
    "ToySdfSpec",
    "TorusSdf",
    "UnionSdf",
    "gen_toy_images",
    "gen_toy_sdfs",
    "pixel_centers",
    "render_shape",
]

import logging
from dataclasses import dataclass
from enum import StrEnum
from typing import Annotated, Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, TypeAdapter

from toolkit.exceptions import ConfigurationError, DegenerateInputError
from weightspace.numerics import Rng

LOGGER = logging.getLogger(__name__)

Vec3 = tuple[float, float, float]


class Modality(StrEnum):
    IMAGE = "image2d"
    SDF = "sdf3d"


# 2D shapes


class ImageShape(BaseModel):
    """A filled shape over a flat background, in [-1, 1]^2 coordinates with y pointing down the rows."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["disk", "rectangle", "ring"]
    center: tuple[float, float] = (0.0, 0.0)
    size: PositiveFloat
    """Radius of disks and rings, half width of rectangles."""
    aspect: PositiveFloat = 1.0
    """Half height over half width of rectangles."""
    inner: float = Field(default=0.5, ge=0.0, lt=1.0)
    """Inner radius of rings as a fraction of `size`."""
    color: tuple[float, ...] = (1.0, 1.0, 1.0)
    background: tuple[float, ...] = (0.0, 0.0, 0.0)

    def signed_distance(self, xy: NDArray[np.floating]) -> NDArray[np.float64]:
        p = np.asarray(xy, dtype=np.float64) - np.asarray(self.center)
        match self.kind:
            case "disk":
                return np.linalg.norm(p, axis=-1) - self.size
            case "rectangle":
                q = np.abs(p) - np.array([self.size, self.size * self.aspect])
                return np.linalg.norm(np.maximum(q, 0.0), axis=-1) + np.minimum(q.max(axis=-1), 0.0)
            case "ring":
                inner = self.size * self.inner
                return np.abs(np.linalg.norm(p, axis=-1) - 0.5 * (self.size + inner)) - 0.5 * (self.size - inner)
        raise ConfigurationError(f"Unknown image shape '{self.kind}'")


def pixel_centers(height: int, width: int) -> NDArray[np.float32]:
    """(x, y) of every pixel center in row-major order: x = 2(j + 0.5)/W - 1, y = 2(i + 0.5)/H - 1."""
    y = 2.0 * (np.arange(height) + 0.5) / height - 1.0
    x = 2.0 * (np.arange(width) + 0.5) / width - 1.0
    yy, xx = np.meshgrid(y, x, indexing="ij")
    return np.stack([xx.reshape(-1), yy.reshape(-1)], axis=-1).astype(np.float32)


def render_shape(shape: ImageShape, resolution: int, channels: int = 3) -> NDArray[np.float32]:
    """Anti-aliased rendering as (H, W, C) in [0, 1]: pixel coverage is a linear ramp one pixel wide."""
    pixel = 2.0 / resolution
    distance = shape.signed_distance(pixel_centers(resolution, resolution)).reshape(resolution, resolution)
    coverage = np.clip(0.5 - distance / pixel, 0.0, 1.0)[..., None]
    color = np.resize(np.asarray(shape.color, dtype=np.float64), channels)
    background = np.resize(np.asarray(shape.background, dtype=np.float64), channels)
    return np.clip(background + coverage * (color - background), 0.0, 1.0).astype(np.float32)


# 3D signed distance functions


class _Sdf(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class SphereSdf(_Sdf):
    kind: Literal["sphere"] = "sphere"
    center: Vec3 = (0.0, 0.0, 0.0)
    radius: PositiveFloat

    def evaluate(self, p: NDArray[np.floating]) -> NDArray[np.float64]:
        return np.linalg.norm(np.asarray(p, dtype=np.float64) - self.center, axis=-1) - self.radius


class BoxSdf(_Sdf):
    kind: Literal["box"] = "box"
    center: Vec3 = (0.0, 0.0, 0.0)
    half_extents: Vec3

    def evaluate(self, p: NDArray[np.floating]) -> NDArray[np.float64]:
        q = np.abs(np.asarray(p, dtype=np.float64) - self.center) - np.asarray(self.half_extents)
        return np.linalg.norm(np.maximum(q, 0.0), axis=-1) + np.minimum(q.max(axis=-1), 0.0)


class TorusSdf(_Sdf):
    """Ring around the y axis."""

    kind: Literal["torus"] = "torus"
    center: Vec3 = (0.0, 0.0, 0.0)
    major: PositiveFloat
    minor: PositiveFloat

    def evaluate(self, p: NDArray[np.floating]) -> NDArray[np.float64]:
        q = np.asarray(p, dtype=np.float64) - self.center
        ring = np.linalg.norm(q[..., [0, 2]], axis=-1) - self.major
        return np.sqrt(ring * ring + q[..., 1] ** 2) - self.minor


class CapsuleSdf(_Sdf):
    kind: Literal["capsule"] = "capsule"
    start: Vec3
    end: Vec3
    radius: PositiveFloat

    def evaluate(self, p: NDArray[np.floating]) -> NDArray[np.float64]:
        a = np.asarray(self.start)
        ba = np.asarray(self.end) - a
        pa = np.asarray(p, dtype=np.float64) - a
        h = np.clip((pa @ ba) / max(float(ba @ ba), 1e-12), 0.0, 1.0)
        return np.linalg.norm(pa - h[..., None] * ba, axis=-1) - self.radius


class UnionSdf(_Sdf):
    """Union of parts; a positive `smoothness` blends them with a polynomial smooth minimum, which never exceeds min."""

    kind: Literal["union"] = "union"
    parts: list["SdfShape"] = Field(min_length=1)
    smoothness: float = Field(default=0.0, ge=0.0)

    def evaluate(self, p: NDArray[np.floating]) -> NDArray[np.float64]:
        result = self.parts[0].evaluate(p)
        for part in self.parts[1:]:
            other = part.evaluate(p)
            if self.smoothness == 0.0:
                result = np.minimum(result, other)
                continue
            k = self.smoothness
            h = np.clip(0.5 + 0.5 * (other - result) / k, 0.0, 1.0)
            result = other + (result - other) * h - k * h * (1.0 - h)
        return result


SdfShape = Annotated[SphereSdf | BoxSdf | TorusSdf | CapsuleSdf | UnionSdf, Field(discriminator="kind")]
UnionSdf.model_rebuild()
SDF_SHAPE_ADAPTER: TypeAdapter = TypeAdapter(SdfShape)


# Instances


@dataclass(frozen=True, kw_only=True)
class ImageInstance:
    id: str
    label: int | None
    pixels: NDArray[np.float32]
    """(H, W, C) in [0, 1]."""

    modality = Modality.IMAGE

    def __post_init__(self) -> None:
        if self.pixels.ndim != 3:
            raise DegenerateInputError(f"Image '{self.id}' must be (H, W, C), got {self.pixels.shape}")
        if self.pixels.size and (self.pixels.min() < 0.0 or self.pixels.max() > 1.0):
            raise DegenerateInputError(f"Image '{self.id}' has values outside [0, 1]")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.pixels.shape  # type: ignore[return-value]

    def targets(self) -> NDArray[np.float32]:
        """Pixel values in the order of `pixel_centers`."""
        return self.pixels.reshape(-1, self.pixels.shape[-1])


@dataclass(frozen=True, kw_only=True)
class SdfInstance:
    id: str
    label: int | None
    shape: SdfShape

    modality = Modality.SDF

    def values(self, points: NDArray[np.floating]) -> NDArray[np.float64]:
        return self.shape.evaluate(points)

    def descriptor(self) -> dict:
        return self.shape.model_dump(mode="json")

    @classmethod
    def from_descriptor(cls, id: str, label: int | None, descriptor: dict) -> "SdfInstance":
        return cls(id=id, label=label, shape=SDF_SHAPE_ADAPTER.validate_python(descriptor))


Instance = ImageInstance | SdfInstance


# Generators

IMAGE_CATEGORIES: tuple[str, ...] = ("disk", "rectangle", "ring")
SDF_CATEGORIES: tuple[str, ...] = (
    "airplane",
    "sphere",
    "box",
    "torus",
    "capsule",
    "snowman",
    "dumbbell",
    "cross",
    "ringball",
    "table",
)


class ToyImageSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    resolution: PositiveInt = 64
    channels: Literal[1, 3] = 3
    categories: tuple[Literal["disk", "rectangle", "ring"], ...] = IMAGE_CATEGORIES


class ToySdfSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    categories: tuple[str, ...] = SDF_CATEGORIES


def _balanced_labels(count: int, categories: int) -> list[int]:
    return [i % categories for i in range(count)]


def _image_shape(kind: str, rng: Rng, channels: int) -> ImageShape:
    g = rng.generator
    color = tuple(float(c) for c in g.uniform(0.6, 1.0, channels))
    background = tuple(float(c) for c in g.uniform(0.0, 0.25, channels))
    center = (float(g.uniform(-0.25, 0.25)), float(g.uniform(-0.25, 0.25)))
    match kind:
        case "disk":
            return ImageShape(kind="disk", center=center, size=float(g.uniform(0.2, 0.55)), color=color, background=background)
        case "rectangle":
            return ImageShape(
                kind="rectangle",
                center=center,
                size=float(g.uniform(0.2, 0.5)),
                aspect=float(g.uniform(0.5, 1.5)),
                color=color,
                background=background,
            )
        case "ring":
            return ImageShape(
                kind="ring",
                center=center,
                size=float(g.uniform(0.3, 0.6)),
                inner=float(g.uniform(0.4, 0.7)),
                color=color,
                background=background,
            )
    raise ConfigurationError(f"Unknown image category '{kind}'")


def gen_toy_images(spec: ToyImageSpec, count: int, seed: int) -> list[ImageInstance]:
    if count < 1:
        raise ConfigurationError(f"Toy dataset needs at least one instance, got {count}")
    instances = []
    for i, label in enumerate(_balanced_labels(count, len(spec.categories))):
        shape = _image_shape(spec.categories[label], Rng(seed, i), spec.channels)
        pixels = render_shape(shape, spec.resolution, spec.channels)
        instances.append(ImageInstance(id=f"img-{i:05d}", label=label, pixels=pixels))
    LOGGER.info("Generated %d toy images over %d categories", count, len(spec.categories))
    return instances


def _unit(g: np.random.Generator) -> NDArray[np.float64]:
    v = g.normal(size=3)
    return v / np.linalg.norm(v)


def _sdf_shape(family: str, rng: Rng) -> SdfShape:
    g = rng.generator

    def jitter(scale: float = 0.1) -> NDArray[np.float64]:
        return g.uniform(-scale, scale, 3)

    def vec(a: NDArray[np.floating]) -> Vec3:
        return (float(a[0]), float(a[1]), float(a[2]))

    c = jitter()
    match family:
        case "sphere":
            return SphereSdf(center=vec(c), radius=float(g.uniform(0.3, 0.6)))
        case "box":
            return BoxSdf(center=vec(c), half_extents=vec(g.uniform(0.2, 0.5, 3)))
        case "torus":
            return TorusSdf(center=vec(c), major=float(g.uniform(0.35, 0.55)), minor=float(g.uniform(0.08, 0.18)))
        case "capsule":
            d = _unit(g) * g.uniform(0.25, 0.5)
            return CapsuleSdf(start=vec(c - d), end=vec(c + d), radius=float(g.uniform(0.1, 0.25)))
        case "snowman":
            low, high = g.uniform(0.3, 0.38), g.uniform(0.18, 0.26)
            return UnionSdf(
                parts=[
                    SphereSdf(center=vec(c + [0.0, -0.25, 0.0]), radius=float(low)),
                    SphereSdf(center=vec(c + [0.0, 0.3, 0.0]), radius=float(high)),
                ],
                smoothness=0.1,
            )
        case "dumbbell":
            half = g.uniform(0.3, 0.45)
            ball = float(g.uniform(0.16, 0.24))
            a, b = c - [half, 0.0, 0.0], c + [half, 0.0, 0.0]
            return UnionSdf(
                parts=[
                    CapsuleSdf(start=vec(a), end=vec(b), radius=float(g.uniform(0.06, 0.1))),
                    SphereSdf(center=vec(a), radius=ball),
                    SphereSdf(center=vec(b), radius=ball),
                ],
            )
        case "cross":
            arm, thick = float(g.uniform(0.45, 0.65)), float(g.uniform(0.08, 0.16))
            return UnionSdf(
                parts=[
                    BoxSdf(center=vec(c), half_extents=(arm, thick, thick)),
                    BoxSdf(center=vec(c), half_extents=(thick, arm, thick)),
                ],
            )
        case "ringball":
            major = float(g.uniform(0.45, 0.6))
            return UnionSdf(
                parts=[
                    TorusSdf(center=vec(c), major=major, minor=float(g.uniform(0.06, 0.12))),
                    SphereSdf(center=vec(c), radius=float(g.uniform(0.15, 0.3))),
                ],
            )
        case "table":
            top = (float(g.uniform(0.45, 0.65)), float(g.uniform(0.04, 0.08)), float(g.uniform(0.35, 0.55)))
            return UnionSdf(
                parts=[
                    BoxSdf(center=vec(c + [0.0, 0.3, 0.0]), half_extents=top),
                    CapsuleSdf(start=vec(c + [0.0, -0.45, 0.0]), end=vec(c + [0.0, 0.3, 0.0]), radius=float(g.uniform(0.05, 0.1))),
                    BoxSdf(center=vec(c + [0.0, -0.5, 0.0]), half_extents=(0.3, 0.04, 0.3)),
                ],
            )
        case "airplane":
            length = float(g.uniform(0.55, 0.7))
            span = float(g.uniform(0.55, 0.75))
            chord = float(g.uniform(0.1, 0.18))
            return UnionSdf(
                parts=[
                    CapsuleSdf(start=vec(c + [0.0, 0.0, -length]), end=vec(c + [0.0, 0.0, length]), radius=float(g.uniform(0.08, 0.12))),
                    BoxSdf(center=vec(c + [0.0, 0.0, 0.05]), half_extents=(span, 0.03, chord)),
                    BoxSdf(center=vec(c + [0.0, 0.0, -0.8 * length]), half_extents=(0.22, 0.03, 0.07)),
                    BoxSdf(center=vec(c + [0.0, 0.12, -0.8 * length]), half_extents=(0.02, 0.14, 0.07)),
                ],
                smoothness=0.03,
            )
    raise ConfigurationError(f"Unknown SDF category '{family}'")


def gen_toy_sdfs(spec: ToySdfSpec, count: int, seed: int) -> list[SdfInstance]:
    if count < 1:
        raise ConfigurationError(f"Toy dataset needs at least one instance, got {count}")
    instances = []
    for i, label in enumerate(_balanced_labels(count, len(spec.categories))):
        shape = _sdf_shape(spec.categories[label], Rng(seed, i))
        instances.append(SdfInstance(id=f"sdf-{i:05d}", label=label, shape=shape))
    LOGGER.info("Generated %d toy SDFs over %d categories", count, len(spec.categories))
    return instances
