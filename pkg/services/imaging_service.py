import logging
import re
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from exceptions import DimensionMismatch, IoFailure
from models import IMAGE_SIZE, Colormap, EmotionLabel, MelSpectrogram, SpectroImage

logger = logging.getLogger(__name__)

# Light blue for quiet cells through to dark red for loud ones
DEFAULT_COLORMAP = Colormap(anchors=[
    (0.0, (0.68, 0.85, 0.90)),
    (0.25, (0.0, 0.0, 1.0)),
    (0.5, (0.0, 0.8, 0.0)),
    (0.75, (1.0, 0.55, 0.0)),
    (1.0, (0.55, 0.0, 0.0)),
])

PPM_MAXVAL = 255
_PPM_HEADER = re.compile(rb"\AP6\s+(\d+)\s+(\d+)\s+(\d+)\s")

PathLike = Union[str, Path]


class ImagingService:
    """Spectrogram rendering and PPM storage"""

    @staticmethod
    def colormap_apply(colormap: Colormap, v) -> np.ndarray:
        """
        Piecewise-linear colormap lookup

        Args:
            colormap: Anchor table
            v: Scalar or array of values; anything outside [0, 1] is clamped

        Returns:
            RGB with a trailing axis of 3
        """
        values = np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0)
        positions = np.array([p for p, _ in colormap.anchors])
        colors = np.array([c for _, c in colormap.anchors])
        return np.stack([np.interp(values, positions, colors[:, ch]) for ch in range(3)], axis=-1)

    @staticmethod
    def bilinear_sample(grid: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
        """
        Sample an [H, W, C] grid at fractional rows ys and columns xs

        Coordinates outside the grid are clamped to the nearest edge.
        Returns an array of shape [len(ys), len(xs), C].
        """
        height, width = grid.shape[:2]
        ys = np.clip(np.asarray(ys, dtype=np.float64), 0.0, height - 1)
        xs = np.clip(np.asarray(xs, dtype=np.float64), 0.0, width - 1)

        y0 = np.floor(ys).astype(np.int64)
        x0 = np.floor(xs).astype(np.int64)
        y1 = np.minimum(y0 + 1, height - 1)
        x1 = np.minimum(x0 + 1, width - 1)
        wy = (ys - y0)[:, None, None]
        wx = (xs - x0)[None, :, None]

        top = grid[y0][:, x0] * (1.0 - wx) + grid[y0][:, x1] * wx
        bottom = grid[y1][:, x0] * (1.0 - wx) + grid[y1][:, x1] * wx
        return top * (1.0 - wy) + bottom * wy

    @staticmethod
    def resize_bilinear(grid: np.ndarray, height: int, width: int) -> np.ndarray:
        """Edge-aligned bilinear resize: output index j samples input at j * (in - 1) / (out - 1)"""
        in_h, in_w = grid.shape[:2]
        ys = np.arange(height) * ((in_h - 1) / (height - 1)) if height > 1 else np.zeros(1)
        xs = np.arange(width) * ((in_w - 1) / (width - 1)) if width > 1 else np.zeros(1)
        return ImagingService.bilinear_sample(grid, ys, xs)

    @staticmethod
    def render(spec: MelSpectrogram, colormap: Colormap = DEFAULT_COLORMAP,
               label: Optional[EmotionLabel] = None) -> SpectroImage:
        """
        Colormap a mel spectrogram and resample it to 64x64

        dB values map affinely from [-top_db, 0] to [0, 1]; the frequency axis is flipped so
        the lowest band ends up in the bottom row.
        """
        if spec.values.size == 0:
            raise ValueError("cannot render an empty spectrogram")
        normalized = (spec.values + spec.top_db) / spec.top_db
        colored = ImagingService.colormap_apply(colormap, normalized)[::-1]
        pixels = ImagingService.resize_bilinear(colored, IMAGE_SIZE, IMAGE_SIZE)
        return SpectroImage(pixels=np.clip(pixels, 0.0, 1.0), label=label)

    @staticmethod
    def write_ppm(img: SpectroImage, path: PathLike) -> None:
        """Binary P6, 8 bits per channel, value = round(channel * 255)"""
        height, width = img.pixels.shape[:2]
        body = np.round(img.pixels * PPM_MAXVAL).astype(np.uint8).tobytes()
        header = f"P6\n{width} {height}\n{PPM_MAXVAL}\n".encode("ascii")
        try:
            Path(path).write_bytes(header + body)
        except OSError as e:
            raise IoFailure(f"cannot write image: {e.strerror}", path=str(path))

    @staticmethod
    def read_ppm(path: PathLike, label: Optional[EmotionLabel] = None) -> SpectroImage:
        try:
            raw = Path(path).read_bytes()
        except OSError as e:
            raise IoFailure(f"cannot read image: {e.strerror}", path=str(path))

        width, height, maxval, offset = ImagingService._parse_ppm_header(raw, str(path))
        if (width, height) != (IMAGE_SIZE, IMAGE_SIZE):
            raise DimensionMismatch(f"expected {IMAGE_SIZE}x{IMAGE_SIZE}, got {width}x{height}", path=str(path))
        if maxval != PPM_MAXVAL:
            raise DimensionMismatch(f"expected maxval {PPM_MAXVAL}, got {maxval}", path=str(path))

        body = raw[offset:]
        expected = width * height * 3
        if len(body) != expected:
            raise IoFailure(f"pixel data has {len(body)} bytes, expected {expected}", path=str(path))
        pixels = np.frombuffer(body, dtype=np.uint8).reshape(height, width, 3) / PPM_MAXVAL
        return SpectroImage(pixels=pixels, label=label)

    @staticmethod
    def _parse_ppm_header(raw: bytes, path: str) -> Tuple[int, int, int, int]:
        match = _PPM_HEADER.match(raw)
        if not match:
            raise IoFailure("not a binary PPM (P6) file", path=path)
        width, height, maxval = (int(g) for g in match.groups())
        return width, height, maxval, match.end()
