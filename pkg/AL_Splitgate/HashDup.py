""" AL_Splitgate.HashDup

    Exact and near-duplicate detection across two manifests (typically the train and test sides
    of a split). Exact duplicates share the sha256 of their raw file bytes; near duplicates have
    64-bit difference hashes within a Hamming threshold, optionally also testing the horizontally
    mirrored test image.
"""
## This Module
from AL_Splitgate import Config
from AL_Splitgate.Errors import ImageTooSmall
from AL_Splitgate.Images import GrayImage, load_gray
## Third Party
import numpy as np
## Builtin
import concurrent.futures
import hashlib
import logging
import pathlib
import typing

if typing.TYPE_CHECKING:
    from AL_Splitgate.Ingest import Manifest, ImageRecord

__all__ = ["DuplicateReport", "compute_dhash", "hamming", "content_hash", "hash_manifest", "audit_duplicates"]

logger = logging.getLogger(__name__)

HASHROWS, HASHCOLUMNS = 8, 9

def _block_sums(values: np.ndarray, parts: int, axis: int)-> np.ndarray:
    """ Sums values over parts blocks along axis; block i covers floor(i*N/parts)..floor((i+1)*N/parts)-1 """
    size = values.shape[axis]
    starts = [(i * size) // parts for i in range(parts)]
    return np.add.reduceat(values, starts, axis = axis)

def _block_counts(size: int, parts: int)-> np.ndarray:
    edges = [(i * size) // parts for i in range(parts + 1)]
    return np.diff(edges)

def block_means(image: GrayImage, rows: int, columns: int)-> np.ndarray:
    """ Downsamples the image to rows x columns cells by block averaging.

        Each cell is the arithmetic mean of its source block rounded half up to an integer.
    """
    if image.height < rows or image.width < columns:
        raise ImageTooSmall(f"Image of {image.width}x{image.height} cannot be reduced to {columns}x{rows}",
                            width = image.width, height = image.height)
    pixels = image.pixels.astype(np.int64)
    sums = _block_sums(_block_sums(pixels, rows, 0), columns, 1)
    counts = np.outer(_block_counts(image.height, rows), _block_counts(image.width, columns))
    ## round half up: floor(sum/count + 1/2) in integers
    return (2 * sums + counts) // (2 * counts)

def compute_dhash(image: GrayImage)-> int:
    """ Returns the 64-bit difference hash of the image.

        The image is reduced to 9 columns x 8 rows of block means; bit (r, c) for c in 0..7 is set
        when cell (r, c+1) is strictly brighter than cell (r, c). Bits are packed row-major with
        bit (0, 0) as the most significant bit.
    """
    if image.width < HASHCOLUMNS or image.height < HASHROWS:
        raise ImageTooSmall(f"dHash needs at least 9x8 pixels: received {image.width}x{image.height}",
                            width = image.width, height = image.height)
    cells = block_means(image, HASHROWS, HASHCOLUMNS)
    bits = (cells[:, 1:] > cells[:, :-1]).ravel()
    value = 0
    for bit in bits:
        value = (value << 1) | int(bit)
    return value

def hamming(a: int, b: int)-> int:
    """ Number of differing bits between two 64-bit hashes """
    return (a ^ b).bit_count()

def content_hash(path: pathlib.Path|str)-> str:
    """ sha256 of the raw file bytes as lowercase hex """
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()

def _hash_record(record: "ImageRecord")-> "ImageRecord":
    try:
        image = load_gray(record.path, name = record.id)
        dhash = compute_dhash(image)
    except ImageTooSmall as e:
        raise ImageTooSmall(f"Image too small to hash: {record.id}", id = record.id, **e.context)
    return record._replace(content_hash = content_hash(record.path), dhash = f"{dhash:016x}")

def hash_manifest(manifest: "Manifest", force: bool = False)-> "Manifest":
    """ Returns a copy of the manifest with content_hash and dhash filled in.

        Records that already carry both hashes are kept unless force is True.
    """
    ## Local import: Ingest imports this module
    from AL_Splitgate.Ingest import Manifest
    def work(record):
        if not force and record.content_hash and record.dhash: return record
        return _hash_record(record)
    with concurrent.futures.ThreadPoolExecutor(max_workers = Config.max_workers()) as executor:
        records = list(executor.map(work, manifest.records))
    return Manifest(records)

class DuplicateReport(typing.NamedTuple):
    """ Duplicates found between a first (train) and second (test) manifest

    Attributes:
        exact_pairs: (id_a, id_b) with identical file bytes
        near_pairs: (id_a, id_b, hamming, flipped) with hamming <= threshold, exact pairs excluded
        threshold: Hamming threshold used
        compared: number of cross pairs considered
        check_flip: whether mirrored test images were tested
        banded: whether the banded candidate search was used
        approximate: whether banded search may have missed pairs at this threshold
    """
    exact_pairs: list[tuple[str, str]]
    near_pairs: list[tuple[str, str, int, bool]]
    threshold: int
    compared: int
    check_flip: bool = False
    banded: bool = False
    approximate: bool = False

    def to_dict(self)-> dict:
        return {"exact_pairs": [list(pair) for pair in self.exact_pairs],
                "near_pairs": [{"id_a": a, "id_b": b, "hamming": h, "flipped": f} for a, b, h, f in self.near_pairs],
                "threshold": self.threshold, "compared": self.compared, "check_flip": self.check_flip,
                "banded": self.banded, "approximate": self.approximate}

    @classmethod
    def from_dict(cls, data: dict)-> "DuplicateReport":
        return cls(exact_pairs = [tuple(pair) for pair in data["exact_pairs"]],
                   near_pairs = [(p["id_a"], p["id_b"], p["hamming"], p["flipped"]) for p in data["near_pairs"]],
                   threshold = data["threshold"], compared = data["compared"], check_flip = data.get("check_flip", False),
                   banded = data.get("banded", False), approximate = data.get("approximate", False))

## popcount lookup for uint8 views of uint64 arrays
_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype = np.uint8)

def _popcount(values: np.ndarray)-> np.ndarray:
    bytes_ = values.view(np.uint8).reshape(values.shape + (8,))
    return _POPCOUNT8[bytes_].sum(axis = -1, dtype = np.int64)

def _fullscan(a: np.ndarray, b: np.ndarray, threshold: int)-> list[tuple[int, int, int]]:
    """ All (i, j, distance) with distance <= threshold, chunked over rows of a """
    out = []
    chunk = max(1, (1 << 22) // max(len(b), 1))
    for start in range(0, len(a), chunk):
        block = a[start:start + chunk, None] ^ b[None, :]
        distances = _popcount(block)
        for i, j in zip(*np.nonzero(distances <= threshold)):
            out.append((start + int(i), int(j), int(distances[i, j])))
    return out

BANDS, BANDBITS = 4, 16

def _banded(a: np.ndarray, b: np.ndarray, threshold: int)-> list[tuple[int, int, int]]:
    """ Candidate pairs share at least one 16-bit band exactly; candidates are verified by distance """
    candidates: set[tuple[int, int]] = set()
    mask = np.uint64((1 << BANDBITS) - 1)
    for band in range(BANDS):
        shift = np.uint64(band * BANDBITS)
        buckets: dict[int, list[int]] = {}
        for j, value in enumerate(((b >> shift) & mask).tolist()):
            buckets.setdefault(value, []).append(j)
        for i, value in enumerate(((a >> shift) & mask).tolist()):
            for j in buckets.get(value, ()):
                candidates.add((i, j))
    out = []
    for i, j in sorted(candidates):
        distance = hamming(int(a[i]), int(b[j]))
        if distance <= threshold: out.append((i, j, distance))
    return out

def _hashes(manifest: "Manifest", check_flip: bool)-> tuple[np.ndarray, np.ndarray|None]:
    """ Returns the dhash array (and the mirrored-image dhash array when requested) """
    def mirrored(record):
        return compute_dhash(load_gray(record.path, name = record.id).mirrored())
    direct = np.array([int(record.dhash, 16) for record in manifest], dtype = np.uint64)
    if not check_flip: return direct, None
    with concurrent.futures.ThreadPoolExecutor(max_workers = Config.max_workers()) as executor:
        flipped = np.array(list(executor.map(mirrored, manifest.records)), dtype = np.uint64)
    return direct, flipped

def audit_duplicates(train: "Manifest", test: "Manifest", threshold: int = Config.DEFAULT_THRESHOLD,
                     check_flip: bool = False, fullscan_limit: int = Config.FULLSCAN_LIMIT)-> DuplicateReport:
    """ Finds exact and near-duplicate images between the train and test manifests.

        Hashes missing from the records are computed from the image files.
        threshold is the maximum Hamming distance (0-64) for a near duplicate.
        check_flip also compares each train image against the horizontally mirrored test image;
        a pair is reported as flipped when the mirrored distance is strictly smaller.
        Below fullscan_limit cross pairs every pair is compared; above it, candidates must share
        one of four 16-bit hash bands (exhaustive only for thresholds up to 3).
    """
    if not 0 <= threshold <= 64: raise ValueError(f"threshold should be in 0..64: {threshold}")
    train = hash_manifest(train)
    test = hash_manifest(test)

    exact = set()
    bytrainhash: dict[str, list[str]] = {}
    for record in train:
        bytrainhash.setdefault(record.content_hash, []).append(record.id)
    for record in test:
        for trainid in bytrainhash.get(record.content_hash, ()):
            exact.add((trainid, record.id))

    a, _ = _hashes(train, False)
    b, bflipped = _hashes(test, check_flip)
    compared = len(a) * len(b)
    banded = compared > fullscan_limit
    search = _banded if banded else _fullscan

    best: dict[tuple[int, int], tuple[int, bool]] = {}
    for i, j, distance in search(a, b, threshold):
        best[(i, j)] = (distance, False)
    if bflipped is not None:
        for i, j, distance in search(a, bflipped, threshold):
            if (i, j) not in best or distance < best[(i, j)][0]:
                best[(i, j)] = (distance, True)

    trainids, testids = train.ids(), test.ids()
    near = sorted((trainids[i], testids[j], distance, flipped)
                  for (i, j), (distance, flipped) in best.items()
                  if (trainids[i], testids[j]) not in exact)
    report = DuplicateReport(exact_pairs = sorted(exact), near_pairs = near, threshold = threshold, compared = compared,
                             check_flip = check_flip, banded = banded, approximate = banded and threshold >= BANDS)
    logger.info("duplicate audit compared=%d exact=%d near=%d banded=%s", compared, len(report.exact_pairs), len(near), banded)
    return report
