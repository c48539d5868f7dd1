"""City map ingestion: PGM images, road/obstacle occupancy and attraction levels.

Road cells carry the value 0 and obstacles 255. Every road cell also has an
attraction level in {1, 5, 10} (cold, warm and hot spots).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import AllObstacle, DimensionMismatch, IllegalWeight, MalformedImage

ROAD = 0
OBSTACLE = 255
ATTRACTION_LEVELS = (1, 5, 10)

_WHITESPACE = b" \t\n\r\v\f"


@dataclass(frozen=True)
class GrayImage:
    width: int
    height: int
    pixels: np.ndarray  # (height, width) uint8

    def __post_init__(self):
        if self.pixels.shape != (self.height, self.width):
            raise MalformedImage(
                f"pixel array shape {self.pixels.shape} != ({self.height}, {self.width})"
            )


@dataclass(frozen=True)
class OccupancyGrid:
    width: int
    height: int
    cells: np.ndarray  # (height, width) uint8, values in {0, 255}

    @property
    def road(self) -> np.ndarray:
        return self.cells == ROAD

    @property
    def road_count(self) -> int:
        return int(np.count_nonzero(self.cells == ROAD))

    def as_image(self) -> GrayImage:
        return GrayImage(self.width, self.height, self.cells.copy())


@dataclass(frozen=True)
class AttractionGrid:
    width: int
    height: int
    weights: np.ndarray  # (height, width) int; 0 marks obstacle cells (undefined)


@dataclass(frozen=True)
class ComponentMask:
    width: int
    height: int
    labels: np.ndarray  # (height, width) int; 0 on obstacles, 1.. on road cells
    largest_id: int

    @property
    def largest(self) -> np.ndarray:
        return self.labels == self.largest_id

    @property
    def count(self) -> int:
        return int(self.labels.max())


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace separated header tokens, skipping ``#`` comments.

    Returns the tokens and the offset of the byte following the last token.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos] in _WHITESPACE:
            pos += 1
        if pos >= n:
            raise MalformedImage("truncated PGM header")
        if data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < n and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        tokens.append(data[start:pos])
    return tokens, pos


def parse_pgm(data: bytes) -> GrayImage:
    if len(data) < 2:
        raise MalformedImage("empty or truncated file")
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise MalformedImage(f"bad magic {magic!r}, expected P2 or P5")
    tokens, pos = _header_tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise MalformedImage(f"non-integer header field: {exc}") from None
    if width <= 0 or height <= 0:
        raise MalformedImage(f"bad dimensions {width}x{height}")
    if not 0 < maxval <= 255:
        raise MalformedImage(f"maxval {maxval} outside 1..255")
    size = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        payload = data[pos + 1 : pos + 1 + size]
        if len(payload) < size:
            raise MalformedImage(f"truncated raster: {len(payload)} of {size} bytes")
        pixels = np.frombuffer(payload, dtype=np.uint8).copy()
    else:
        body = data[pos:]
        # comments are legal (if unusual) inside a plain raster
        lines = [ln.split(b"#", 1)[0] for ln in body.splitlines()]
        fields = b" ".join(lines).split()
        if len(fields) < size:
            raise MalformedImage(f"truncated raster: {len(fields)} of {size} values")
        try:
            values = np.array([int(f) for f in fields[:size]], dtype=np.int64)
        except ValueError as exc:
            raise MalformedImage(f"non-integer pixel: {exc}") from None
        if values.min() < 0 or values.max() > maxval:
            raise MalformedImage(f"pixel value outside 0..{maxval}")
        pixels = values.astype(np.uint8)
    if int(pixels.max()) > maxval:
        raise MalformedImage(f"pixel value exceeds maxval {maxval}")
    return GrayImage(width, height, pixels.reshape(height, width))


def load_gray_image(path: str | os.PathLike) -> GrayImage:
    """Load a binary (P5) or plain (P2) PGM file with maxval <= 255."""
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_pgm(data)


def write_pgm(path: str | os.PathLike, pixels: np.ndarray, binary: bool = True) -> None:
    pixels = np.asarray(pixels)
    if pixels.ndim != 2:
        raise ValueError("pixels must be a 2-D array")
    if pixels.min() < 0 or pixels.max() > 255:
        raise ValueError("pixel values must lie in [0, 255]")
    height, width = pixels.shape
    data = pixels.astype(np.uint8)
    with open(path, "wb") as fh:
        if binary:
            fh.write(b"P5\n%d %d\n255\n" % (width, height))
            fh.write(data.tobytes())
        else:
            fh.write(b"P2\n%d %d\n255\n" % (width, height))
            for row in data:
                fh.write(" ".join(str(int(v)) for v in row).encode() + b"\n")


def binarize(img: GrayImage, threshold: int = 128, invert: bool = False) -> OccupancyGrid:
    """Threshold a gray image into road (0) and obstacle (255) cells.

    Dark pixels (below ``threshold``) become road; ``invert`` flips this for
    maps drawn with light roads.
    """
    dark = img.pixels < threshold
    road = ~dark if invert else dark
    if not road.any():
        raise AllObstacle(f"no road cell survives threshold {threshold}")
    cells = np.where(road, ROAD, OBSTACLE).astype(np.uint8)
    return OccupancyGrid(img.width, img.height, cells)


def load_attraction(path: str | os.PathLike | None, grid: OccupancyGrid) -> AttractionGrid:
    road = grid.road
    if path is None:
        weights = np.where(road, 1, 0).astype(np.int64)
        return AttractionGrid(grid.width, grid.height, weights)

    img = load_gray_image(path)
    if (img.width, img.height) != (grid.width, grid.height):
        raise DimensionMismatch(
            f"attraction map is {img.width}x{img.height}, city map is {grid.width}x{grid.height}"
        )
    values = img.pixels.astype(np.int64)
    bad = road & ~np.isin(values, ATTRACTION_LEVELS)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise IllegalWeight(
            f"road cell ({r}, {c}) has attraction {values[r, c]}, expected one of {ATTRACTION_LEVELS}"
        )
    return AttractionGrid(grid.width, grid.height, np.where(road, values, 0))


_EIGHT = np.ones((3, 3), dtype=bool)


def largest_component(grid: OccupancyGrid) -> ComponentMask:
    """Label 8-connected road components and pick the largest one.

    Labels are assigned in raster order of each component's first cell, so a
    size tie resolves to the component that appears first.
    """
    road = grid.road
    if not road.any():
        raise AllObstacle("grid has no road cell")
    labels, count = ndimage.label(road, structure=_EIGHT)
    sizes = np.bincount(labels.ravel())[1:]
    largest_id = int(np.argmax(sizes)) + 1
    return ComponentMask(grid.width, grid.height, labels.astype(np.int64), largest_id)
