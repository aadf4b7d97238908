""" AL_Splitgate.Config

    Defaults, bundled presets and environment settings shared by every module
"""
## Builtin
import functools
import json
import logging
import os
import pathlib

__all__ = ["VERSION", "DEFAULT_EXTENSIONS", "DEFAULT_THRESHOLD", "FULLSCAN_LIMIT",
           "DEFAULT_CV_K", "DEFAULT_CV_REPEATS", "THREADS_ENV",
           "max_workers", "load_presets", "get_preset"]

logger = logging.getLogger(__name__)

VERSION = "1.0.0"

DIRECTORY = pathlib.Path(__file__).resolve().parent
PRESETFILE = (DIRECTORY / "presets.json").resolve()

## Recognized image extensions (compared lowercased, without the dot)
DEFAULT_EXTENSIONS = ("pgm", "bmp", "tiff", "jpeg", "png")

## Near-duplicate Hamming threshold (bits out of 64)
DEFAULT_THRESHOLD = 10
## Above this many cross pairs the duplicate audit switches to banded candidate search
FULLSCAN_LIMIT = 20_000 * 20_000

DEFAULT_CV_K = 5
DEFAULT_CV_REPEATS = 10

THREADS_ENV = "SPLITGATE_THREADS"

def max_workers()-> int:
    """ Returns the worker-thread cap from SPLITGATE_THREADS (default: cpu count).

        Values that are not positive integers fall back to 1.
    """
    value = os.environ.get(THREADS_ENV)
    if value is None:
        return os.cpu_count() or 1
    try: value = int(value)
    except ValueError:
        logger.warning("ignoring %s=%r: not an integer", THREADS_ENV, value)
        return 1
    return max(value, 1)

@functools.lru_cache(maxsize=None)
def load_presets()-> dict:
    """ Loads the bundled presets file """
    with open(PRESETFILE, 'r') as f:
        return json.load(f)

def get_preset(section: str, name: str)-> dict:
    """ Returns a copy of the named preset from the given section ("split" or "synth").

        Raises KeyError listing the available names if the preset does not exist.
    """
    presets = load_presets()[section]
    if name not in presets:
        raise KeyError(f'Unknown {section} preset "{name}"; available: {", ".join(sorted(presets))}')
    return dict(presets[name])
