"""Binary shape rasters: loading, validation and grid primitives."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import MaskError

PAD = 4

EIGHT = np.ones((3, 3), dtype=bool)
FOUR = ndimage.generate_binary_structure(2, 1)

# (drow, dcol) of the 8-neighbour ring in counter-clockwise order (image y up)
RING = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True, eq=False)
class ShapeMask:
    """A single 8-connected shape on a raster with an exterior margin.

    ``interior`` is indexed ``[row, col]``. ``offset`` is the position of
    ``interior[0, 0]`` in the source image, and ``source_shape`` the source
    image's ``(height, width)``; together they map cells back to image
    coordinates (see :meth:`to_xy`).
    """

    interior: np.ndarray
    offset: tuple[int, int] = (0, 0)
    source_shape: tuple[int, int] | None = None
    _checked: bool = field(default=False, repr=False)

    def __post_init__(self):
        arr = np.array(self.interior, dtype=bool)
        arr.setflags(write=False)
        object.__setattr__(self, "interior", arr)
        if self.source_shape is None:
            object.__setattr__(self, "source_shape", arr.shape)
        if not self._checked:
            _validate(arr)

    @property
    def height(self) -> int:
        return self.interior.shape[0]

    @property
    def width(self) -> int:
        return self.interior.shape[1]

    @cached_property
    def area(self) -> int:
        return int(self.interior.sum())

    @cached_property
    def boundary(self) -> np.ndarray:
        """Interior cells with at least one exterior 4-neighbour."""
        eroded = ndimage.binary_erosion(self.interior, FOUR, border_value=0)
        out = self.interior & ~eroded
        out.setflags(write=False)
        return out

    @cached_property
    def inner(self) -> np.ndarray:
        """Interior cells that are not boundary cells (the unknowns of a solve)."""
        out = self.interior & ~self.boundary
        out.setflags(write=False)
        return out

    def to_xy(self, rows, cols):
        """Map (fractional) cell indices to image coordinates, y pointing up."""
        rows = np.asarray(rows, dtype=float)
        cols = np.asarray(cols, dtype=float)
        x = cols + self.offset[1]
        y = (self.source_shape[0] - 1) - (rows + self.offset[0])
        return x, y

    def to_cell(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        rows = (self.source_shape[0] - 1) - y - self.offset[0]
        cols = x - self.offset[1]
        return rows, cols

    def rot90(self) -> "ShapeMask":
        """The mask rotated by 90 degrees counter-clockwise (grid-exact)."""
        return ShapeMask(np.rot90(self.interior), _checked=True)


def _validate(arr: np.ndarray) -> None:
    if arr.ndim != 2:
        raise MaskError(f"mask must be 2-D, got shape {arr.shape}")
    if not arr.any():
        raise MaskError("mask has no interior cells")
    if arr[0].any() or arr[-1].any() or arr[:, 0].any() or arr[:, -1].any():
        raise MaskError("interior touches the raster edge; no exterior margin")
    _, n = ndimage.label(arr, structure=EIGHT)
    if n != 1:
        raise MaskError(f"interior must be one 8-connected component, found {n}")


def mask_from_foreground(fg: np.ndarray, pad: int = PAD) -> ShapeMask:
    """Keep the largest 8-connected component, crop to it and pad the margin."""
    fg = np.asarray(fg, dtype=bool)
    if fg.ndim != 2:
        raise MaskError(f"expected a 2-D raster, got shape {fg.shape}")
    labels, n = ndimage.label(fg, structure=EIGHT)
    if n == 0:
        raise MaskError("empty foreground")
    sizes = np.bincount(labels.ravel())[1:]
    # ties go to the lowest label, i.e. the first component in row-major order
    keep = labels == (int(np.argmax(sizes)) + 1)
    rows = np.flatnonzero(keep.any(axis=1))
    cols = np.flatnonzero(keep.any(axis=0))
    r0, r1, c0, c1 = rows[0], rows[-1] + 1, cols[0], cols[-1] + 1
    crop = np.pad(keep[r0:r1, c0:c1], pad, constant_values=False)
    return ShapeMask(crop, offset=(int(r0) - pad, int(c0) - pad), source_shape=fg.shape)


def read_raster(path, threshold: int = 128) -> np.ndarray:
    """Read a PBM/PGM (or any Pillow-readable) file into a foreground array.

    PBM: 1-bits are foreground. Gray images: pixels darker than ``threshold``.
    """
    if not 0 <= threshold <= 255:
        raise MaskError(f"threshold must be in [0, 255], got {threshold}")
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode == "1":
                # Pillow decodes PBM 1-bits (black) as False
                return ~np.array(im, dtype=bool)
            return np.array(im.convert("L")) < threshold
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise MaskError(f"cannot read raster {path}: {exc}") from exc


def load_mask(path, threshold: int = 128) -> ShapeMask:
    return mask_from_foreground(read_raster(path, threshold))


def save_mask(mask: ShapeMask, path) -> None:
    """Write the mask raster as binary PGM, dark shape on a light ground."""
    img = np.where(mask.interior, 0, 255).astype(np.uint8)
    Image.fromarray(img, mode="L").save(Path(path), format="PPM")


def boundary_of(mask: ShapeMask) -> list[tuple[int, int]]:
    """Boundary cells in row-major order."""
    return [tuple(int(v) for v in rc) for rc in np.argwhere(mask.boundary)]
