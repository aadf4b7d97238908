""" AL_Splitgate.Images

    Grayscale image carrier plus the decode boundary: binary PGM (P5) is read and written
    natively; every other format goes through Pillow and is reduced to 8-bit luminance with
    L = round_half_up(0.299 R + 0.587 G + 0.114 B).
"""
## Builtin
import logging
import pathlib
import re
import typing
## Third Party
import numpy as np
from PIL import Image, UnidentifiedImageError
## This Module
from AL_Splitgate.Errors import DecodeFailure, IoFailure

__all__ = ["GrayImage", "read_pgm", "write_pgm", "encode_pgm", "load_gray", "luminance"]

logger = logging.getLogger(__name__)

class GrayImage(typing.NamedTuple):
    """ Row-major 8-bit luminance image

    Attributes:
        pixels: uint8 array shaped (height, width)
    """
    pixels: np.ndarray

    @property
    def width(self)-> int:
        return int(self.pixels.shape[1])
    @property
    def height(self)-> int:
        return int(self.pixels.shape[0])

    @classmethod
    def from_values(cls, width: int, height: int, values: typing.Sequence[int])-> "GrayImage":
        """ Builds an image from a flat row-major sequence of values in 0..255 """
        if len(values) != width * height:
            raise ValueError(f"pixels length should be width*height ({width*height}): received {len(values)}")
        array = np.asarray(values, dtype = np.int64)
        if array.size and (array.min() < 0 or array.max() > 255):
            raise ValueError("pixel values must be in 0..255")
        return cls(array.astype(np.uint8).reshape(height, width))

    def mirrored(self)-> "GrayImage":
        """ Returns the horizontally mirrored image """
        return GrayImage(np.ascontiguousarray(self.pixels[:, ::-1]))

## P5 header: magic, then width height maxval separated by whitespace and/or comments
PGMHEADERRE = re.compile(rb"""
^P5
(?:\s+|\#[^\n]*\n)+ (?P<width>\d+)
(?:\s+|\#[^\n]*\n)+ (?P<height>\d+)
(?:\s+|\#[^\n]*\n)+ (?P<maxval>\d+)
\s
""", re.VERBOSE)

def read_pgm(data: bytes, name: str = "<bytes>")-> GrayImage:
    """ Decodes binary (P5) 8-bit PGM bytes. Raises DecodeFailure on anything else. """
    header = PGMHEADERRE.match(data)
    if not header:
        raise DecodeFailure(f"Not a binary PGM: {name}", id = name)
    width, height, maxval = (int(header.group(g)) for g in ("width","height","maxval"))
    if not 0 < maxval < 256:
        raise DecodeFailure(f"Only 8-bit PGM is supported (maxval {maxval}): {name}", id = name)
    body = data[header.end():header.end() + width * height]
    if len(body) != width * height:
        raise DecodeFailure(f"Truncated PGM body: {name}", id = name)
    return GrayImage(np.frombuffer(body, dtype = np.uint8).reshape(height, width).copy())

def encode_pgm(image: GrayImage)-> bytes:
    """ Encodes an image as binary PGM with maxval 255 """
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(image.pixels, dtype = np.uint8).tobytes()

def write_pgm(path: pathlib.Path|str, image: GrayImage)-> None:
    try:
        pathlib.Path(path).write_bytes(encode_pgm(image))
    except OSError as e:
        raise IoFailure(f"Could not write {path}: {e}", path = str(path))

def luminance(rgb: np.ndarray)-> np.ndarray:
    """ Integer luminance of an (h, w, 3) RGB array, rounded half up """
    rgb = rgb.astype(np.int64)
    return ((299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2] + 500) // 1000).astype(np.uint8)

def load_gray(path: pathlib.Path|str, name: str|None = None)-> GrayImage:
    """ Loads any supported image file as a GrayImage.

        PGM files are parsed natively; other formats are decoded with Pillow.
        name is used to identify the image in errors (defaults to the path).
    """
    path = pathlib.Path(path)
    name = name or str(path)
    try: data = path.read_bytes()
    except OSError as e:
        raise DecodeFailure(f"Could not read {path}: {e}", id = name)
    if data[:2] == b"P5":
        return read_pgm(data, name)
    try:
        with Image.open(path) as im:
            if im.mode == "L":
                return GrayImage(np.asarray(im, dtype = np.uint8).copy())
            rgb = np.asarray(im.convert("RGB"))
    except (UnidentifiedImageError, OSError) as e:
        raise DecodeFailure(f"Could not decode {path}: {e}", id = name)
    logger.debug("converted %s image to luminance: %s", "RGB", name)
    return GrayImage(luminance(rgb))
