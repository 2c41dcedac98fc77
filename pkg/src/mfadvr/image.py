"""8-bit RGBA images and their PPM (P6) / PAM (P7) encodings."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FormatError

__all__ = ["ImageRGBA", "write_ppm", "write_pam", "read_image"]


@dataclass(frozen=True, eq=False)
class ImageRGBA:
    """Row-major RGBA image; ``pixels`` has shape (height, width, 4), dtype uint8."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        px = np.ascontiguousarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width, 4):
            raise ConfigError(f"pixel array shape {px.shape} != ({self.height}, {self.width}, 4)")
        object.__setattr__(self, "pixels", px)

    @property
    def rgb(self) -> np.ndarray:
        return self.pixels[..., :3]

    @classmethod
    def from_rgb(cls, rgb, alpha=255) -> ImageRGBA:
        rgb = np.asarray(rgb, dtype=np.uint8)
        h, w = rgb.shape[:2]
        px = np.empty((h, w, 4), dtype=np.uint8)
        px[..., :3] = rgb
        px[..., 3] = alpha
        return cls(w, h, px)

    def __eq__(self, other):
        if not isinstance(other, ImageRGBA):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)


def _write(path_or_file, data: bytes) -> None:
    if isinstance(path_or_file, (str, os.PathLike)):
        with open(path_or_file, "wb") as fh:
            fh.write(data)
    else:
        path_or_file.write(data)


def write_ppm(img: ImageRGBA, dest) -> None:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    _write(dest, header + img.rgb.tobytes())


def write_pam(img: ImageRGBA, dest) -> None:
    header = (
        f"P7\nWIDTH {img.width}\nHEIGHT {img.height}\nDEPTH 4\nMAXVAL 255\nTUPLTYPE RGB_ALPHA\nENDHDR\n"
    ).encode("ascii")
    _write(dest, header + img.pixels.tobytes())


def _ppm_tokens(data: bytes, count: int):
    tokens = []
    pos = 2
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PPM header", pos)
        tokens.append(int(data[start:pos]))
    return tokens, pos + 1


def read_image(source) -> ImageRGBA:
    """Read a binary PPM (alpha set to 255) or an RGB_ALPHA PAM."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    magic = data[:2]
    if magic == b"P6":
        try:
            (w, h, maxval), pos = _ppm_tokens(data, 3)
        except ValueError as exc:
            raise FormatError(f"bad PPM header: {exc}", 2) from None
        if maxval != 255:
            raise FormatError(f"only maxval 255 is supported, got {maxval}", pos)
        need = w * h * 3
        if len(data) - pos < need:
            raise FormatError(f"PPM pixel data truncated: missing {need - (len(data) - pos)} bytes", len(data))
        rgb = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos).reshape(h, w, 3)
        return ImageRGBA.from_rgb(rgb)
    if magic == b"P7":
        end = data.find(b"ENDHDR\n")
        if end < 0:
            raise FormatError("PAM header missing ENDHDR", 0)
        fields = {}
        for line in data[3:end].decode("ascii").splitlines():
            if line.strip() and not line.startswith("#"):
                key, _, val = line.partition(" ")
                fields[key] = val.strip()
        pos = end + len(b"ENDHDR\n")
        try:
            w, h, depth = int(fields["WIDTH"]), int(fields["HEIGHT"]), int(fields["DEPTH"])
        except (KeyError, ValueError) as exc:
            raise FormatError(f"bad PAM header: {exc}", 3) from None
        if depth != 4 or int(fields.get("MAXVAL", "255")) != 255:
            raise FormatError("only 8-bit RGBA PAM images are supported", 3)
        need = w * h * 4
        if len(data) - pos < need:
            raise FormatError(f"PAM pixel data truncated: missing {need - (len(data) - pos)} bytes", len(data))
        px = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos).reshape(h, w, 4)
        return ImageRGBA(w, h, px)
    raise FormatError(f"unrecognized image magic {magic!r}", 0)
