"""Registered infrared-visible image pairs, the raw unit of the dataset."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from ..images import ImageDecodeError, load_image, spatial_dims


@dataclass
class ImagePair:
    """A registered (visible, infrared) pair.

    Pixel data is loaded lazily from `visible_path`/`infrared_path` and cached;
    in-memory pairs (tests, synthetic data) can be built with `from_arrays`.
    `file_size_bytes` is the on-disk size of the visible image, used as the
    information-content proxy during representative selection.
    """

    pair_id: str
    visible_path: str = ""
    infrared_path: str = ""
    source_dataset: str = ""
    width: int = 0
    height: int = 0
    file_size_bytes: int = 0
    _visible: np.ndarray | None = field(default=None, repr=False, compare=False)
    _infrared: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_files(cls, pair_id: str, visible_path: str, infrared_path: str, source_dataset: str = "") -> "ImagePair":
        visible = load_image(visible_path)
        infrared = load_image(infrared_path)
        h, w = spatial_dims(visible)
        ih, iw = spatial_dims(infrared)
        if (h, w) != (ih, iw):
            raise ValueError(
                f"pair {pair_id!r}: visible {h}x{w} and infrared {ih}x{iw} dimensions differ"
            )
        return cls(
            pair_id=pair_id,
            visible_path=os.fspath(visible_path),
            infrared_path=os.fspath(infrared_path),
            source_dataset=source_dataset,
            width=w,
            height=h,
            file_size_bytes=os.path.getsize(visible_path),
            _visible=visible,
            _infrared=infrared,
        )

    @classmethod
    def from_arrays(
        cls,
        pair_id: str,
        visible: np.ndarray,
        infrared: np.ndarray,
        source_dataset: str = "",
        file_size_bytes: int = 0,
    ) -> "ImagePair":
        h, w = spatial_dims(visible)
        if spatial_dims(infrared) != (h, w):
            raise ValueError(f"pair {pair_id!r}: visible and infrared dimensions differ")
        return cls(
            pair_id=pair_id,
            source_dataset=source_dataset,
            width=w,
            height=h,
            file_size_bytes=file_size_bytes,
            _visible=visible,
            _infrared=infrared,
        )

    def visible(self) -> np.ndarray:
        if self._visible is None:
            if not self.visible_path:
                raise ImageDecodeError(f"pair {self.pair_id!r} has no visible image data or path")
            self._visible = load_image(self.visible_path)
        return self._visible

    def infrared(self) -> np.ndarray:
        if self._infrared is None:
            if not self.infrared_path:
                raise ImageDecodeError(f"pair {self.pair_id!r} has no infrared image data or path")
            self._infrared = load_image(self.infrared_path)
        return self._infrared


def discover_pairs(input_dir: str | os.PathLike, source_dataset: str = "") -> list[ImagePair]:
    """Scan `input_dir` for `visible/` and `infrared/` subdirectories.

    Files are matched by stem; the stem becomes the pair_id. Pairs missing
    either side are skipped.
    """
    input_dir = os.fspath(input_dir)
    vis_dir = os.path.join(input_dir, "visible")
    ir_dir = os.path.join(input_dir, "infrared")
    if not os.path.isdir(vis_dir) or not os.path.isdir(ir_dir):
        raise FileNotFoundError(f"{input_dir!r} must contain visible/ and infrared/ subdirectories")
    source = source_dataset or os.path.basename(os.path.normpath(input_dir))

    def stems(d: str) -> dict[str, str]:
        out: dict[str, str] = {}
        for name in sorted(os.listdir(d)):
            path = os.path.join(d, name)
            if os.path.isfile(path):
                out[os.path.splitext(name)[0]] = path
        return out

    vis, ir = stems(vis_dir), stems(ir_dir)
    pairs = []
    for stem in sorted(vis.keys() & ir.keys()):
        pairs.append(ImagePair.from_files(stem, vis[stem], ir[stem], source_dataset=source))
    return pairs
