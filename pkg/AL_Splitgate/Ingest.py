""" AL_Splitgate.Ingest

    Scans dataset directory trees into a canonical Manifest: one ImageRecord per image file,
    with class/subject/volume/slice identity taken from folder names or parsed from the filename.
"""
## This Module
from AL_Splitgate import Config
from AL_Splitgate import HashDup
from AL_Splitgate.Errors import EmptyDataset, InvalidLayout, InvalidPattern, PatternMismatch, RootNotFound, SliceNotNumeric
## Builtin
import collections
import concurrent.futures
import dataclasses
import json
import logging
import pathlib
import re
import typing

__all__ = ["ImageRecord", "Manifest", "NamePattern", "LayoutConfig", "ScanSummary", "Violation",
           "parse_filename", "render_filename", "scan_dataset", "validate_manifest"]

logger = logging.getLogger(__name__)

GroupKey = typing.Literal["subject","volume"]
SplitName = typing.Literal["train","val","test"]
SPLITNAMES = ("train","val","test")

class ImageRecord(typing.NamedTuple):
    """ One 2D image of the dataset

    Attributes:
        id: unique, stable identifier (default: path relative to the dataset root)
        path: filesystem path of the image
        class_label: non-empty class name
        subject: subject identifier, if known
        volume: volume (acquisition) identifier, if known
        slice_index: non-negative slice (b-scan) index, if known
        content_hash: sha256 of the raw file bytes (lowercase hex)
        dhash: 64-bit difference hash (16 lowercase hex chars)
        presplit: "train", "val" or "test" when the dataset ships its own split
    """
    id: str
    path: str
    class_label: str
    subject: str|None = None
    volume: str|None = None
    slice_index: int|None = None
    content_hash: str|None = None
    dhash: str|None = None
    presplit: SplitName|None = None

    def group(self, key: GroupKey)-> str|None:
        """ Returns the record's value for the given group key ("subject" or "volume") """
        if key not in ("subject","volume"): raise ValueError(f"group key should be 'subject' or 'volume': {key}")
        return getattr(self, key)

    def to_dict(self)-> dict:
        """ Returns the record with absent fields omitted, keys in field order """
        return {key: value for key, value in self._asdict().items() if value is not None}

    @classmethod
    def from_dict(cls, data: dict)-> "ImageRecord":
        unknown = set(data) - set(cls._fields)
        if unknown: raise ValueError(f"Unknown ImageRecord fields: {sorted(unknown)}")
        return cls(**data)

class ScanSummary(typing.NamedTuple):
    """ Counts reported by scan_dataset """
    records: int
    skipped_extension: int
    skipped_pattern: int
    skipped_layout: int

class Manifest():
    """ An ordered collection of ImageRecords

    Duplicate ids are tolerated on construction so that validate_manifest can report them;
    lookups resolve to the first record with a given id.
    """
    def __init__(self, records: typing.Iterable[ImageRecord], summary: ScanSummary|None = None):
        self.records: list[ImageRecord] = list(records)
        self.summary = summary
        self._lookup: dict[str, ImageRecord]|None = None

    def __iter__(self)-> typing.Iterator[ImageRecord]:
        return iter(self.records)
    def __len__(self)-> int:
        return len(self.records)
    def __getitem__(self, id: str)-> ImageRecord:
        return self.lookup[id]
    def __contains__(self, id: str)-> bool:
        return id in self.lookup
    def __eq__(self, other: "Manifest")-> bool:
        if isinstance(other, Manifest):
            return self.records == other.records
        return NotImplemented

    @property
    def lookup(self)-> dict[str, ImageRecord]:
        if self._lookup is None:
            self._lookup = {}
            for record in self.records:
                self._lookup.setdefault(record.id, record)
        return self._lookup

    def ids(self)-> list[str]:
        return [record.id for record in self.records]

    def classes(self)-> list[str]:
        """ Sorted list of distinct class labels """
        return sorted({record.class_label for record in self.records})

    def by_class(self)-> dict[str, list[ImageRecord]]:
        """ Records grouped by class label, classes sorted and records sorted by id """
        out = collections.defaultdict(list)
        for record in self.records:
            out[record.class_label].append(record)
        return {label: sorted(out[label], key = lambda r: r.id) for label in sorted(out)}

    def groups(self, key: GroupKey)-> dict[str, list[str]]:
        """ Maps each group value to the sorted ids carrying it (records without the key are left out) """
        out = collections.defaultdict(list)
        for record in self.records:
            value = record.group(key)
            if value is not None: out[value].append(record.id)
        return {value: sorted(ids) for value, ids in sorted(out.items())}

    def subset(self, ids: typing.Iterable[str])-> "Manifest":
        """ Returns a new Manifest holding the records with the given ids, in manifest order """
        wanted = set(ids)
        return Manifest(record for record in self.records if record.id in wanted)

    def to_jsonl(self)-> str:
        return "".join(json.dumps(record.to_dict(), ensure_ascii = False) + "\n" for record in self.records)

    @classmethod
    def from_jsonl(cls, text: str)-> "Manifest":
        return cls(ImageRecord.from_dict(json.loads(line)) for line in text.splitlines() if line.strip())

    def write(self, path: pathlib.Path|str)-> None:
        pathlib.Path(path).write_text(self.to_jsonl(), encoding = "utf-8")

    @classmethod
    def read(cls, path: pathlib.Path|str)-> "Manifest":
        return cls.from_jsonl(pathlib.Path(path).read_text(encoding = "utf-8"))

    def __repr__(self):
        return f"{self.__class__.__name__}({len(self.records)} records)"

## Placeholder name -> ImageRecord field
PLACEHOLDERS = {"class": "class_label", "subject": "subject", "volume": "volume", "slice": "slice_index"}
PLACEHOLDERRE = re.compile(r"\{([^{}]*)\}")
SLICERE = re.compile(r"[0-9]+")

class NamePattern():
    """ A filename template such as "{class}-{subject}-{slice}"

    Each placeholder captures up to the first occurrence of the first character of the literal
    that follows it; the last placeholder captures the remainder (minus any trailing literal).
    """
    def __init__(self, template: str):
        self.template = template
        parts = PLACEHOLDERRE.split(template)
        ## parts alternate literal, placeholder, literal, ... and always start and end with a literal
        self.literals: list[str] = parts[0::2]
        self.placeholders: list[str] = parts[1::2]
        if not self.placeholders:
            raise InvalidPattern(f"Pattern has no placeholders: {template}", template = template)
        for name in self.placeholders:
            if name not in PLACEHOLDERS:
                raise InvalidPattern(f"Unknown placeholder {{{name}}} in pattern: {template}", template = template)
        duplicates = [name for name, count in collections.Counter(self.placeholders).items() if count > 1]
        if duplicates:
            raise InvalidPattern(f"Placeholders may appear only once: {duplicates}", template = template)
        if any(not literal for literal in self.literals[1:-1]):
            raise InvalidPattern(f"Adjacent placeholders need a delimiter between them: {template}", template = template)
        if "{" in "".join(self.literals) or "}" in "".join(self.literals):
            raise InvalidPattern(f"Unbalanced braces in pattern: {template}", template = template)

        regex = re.escape(self.literals[0])
        for name, literal in zip(self.placeholders, self.literals[1:]):
            last = name == self.placeholders[-1]
            if last: regex += f"(?P<{name}>.+?)"
            else: regex += f"(?P<{name}>[^{re.escape(literal[0])}]+)"
            regex += re.escape(literal)
        self.regex = re.compile(regex, re.DOTALL)

    def __eq__(self, other: "NamePattern")-> bool:
        if isinstance(other, NamePattern):
            return self.template == other.template
        return NotImplemented

    def __repr__(self):
        return f"{self.__class__.__name__}({self.template!r})"

def parse_filename(name: str, pattern: NamePattern|str)-> dict:
    """ Parses a bare filename (no directory, no extension) into ImageRecord fields.

        Returns a dict keyed by ImageRecord field names (class_label, subject, volume, slice_index)
        holding only the placeholders present in the pattern.

        Raises PatternMismatch if name does not fit the pattern and SliceNotNumeric if
        the {slice} capture is not a base-10 integer.
    """
    if isinstance(pattern, str): pattern = NamePattern(pattern)
    match = pattern.regex.fullmatch(name)
    if not match:
        raise PatternMismatch(f'"{name}" does not match pattern "{pattern.template}"', name = name, pattern = pattern.template)
    fields = {}
    for placeholder, value in match.groupdict().items():
        if placeholder == "slice":
            if not SLICERE.fullmatch(value):
                raise SliceNotNumeric(f'Slice "{value}" of "{name}" is not a base-10 integer', name = name, value = value)
            value = int(value)
        fields[PLACEHOLDERS[placeholder]] = value
    return fields

def render_filename(fields: dict, pattern: NamePattern|str)-> str:
    """ Inverse of parse_filename: fills the pattern's placeholders from ImageRecord field names """
    if isinstance(pattern, str): pattern = NamePattern(pattern)
    out = pattern.literals[0]
    for name, literal in zip(pattern.placeholders, pattern.literals[1:]):
        value = fields[PLACEHOLDERS[name]]
        if value is None: raise ValueError(f"Missing value for {{{name}}}")
        out += str(value) + literal
    return out

LayoutKind = typing.Literal["class_subject_folders","presplit_folders","flat"]
Source = typing.Literal["folder","filename"]

@dataclasses.dataclass(frozen = True)
class LayoutConfig():
    """ Describes how a dataset tree maps onto ImageRecord fields

    Attributes:
        layout_kind:
            class_subject_folders: root/<class>/<subject>/<file>
            presplit_folders: root/<train|val|test>/<class>/<file>
            flat: files anywhere below root; identity from the filename (or the parent folder)
        pattern: filename template, required when anything is taken from the filename
        class_from, subject_from: "folder" or "filename"
        extensions: recognized extensions, lowercase and without dots
        strict: abort on the first file that does not fit instead of skipping it
    """
    layout_kind: LayoutKind = "class_subject_folders"
    pattern: NamePattern|None = None
    class_from: Source = "folder"
    subject_from: Source = "folder"
    extensions: tuple[str, ...] = Config.DEFAULT_EXTENSIONS
    strict: bool = False

    def __post_init__(self):
        if self.layout_kind not in ("class_subject_folders","presplit_folders","flat"):
            raise InvalidLayout(f"Unknown layout kind: {self.layout_kind}", layout_kind = self.layout_kind)
        for attr in ("class_from","subject_from"):
            if getattr(self, attr) not in ("folder","filename"):
                raise InvalidLayout(f"{attr} should be 'folder' or 'filename': {getattr(self, attr)}")
        if isinstance(self.pattern, str):
            object.__setattr__(self, "pattern", NamePattern(self.pattern))
        object.__setattr__(self, "extensions", tuple(ext.lower().lstrip(".") for ext in self.extensions))
        if self.class_from == "filename" and (self.pattern is None or "class" not in self.pattern.placeholders):
            raise InvalidLayout("class_from='filename' requires a pattern with a {class} placeholder")
        if self.subject_from == "filename" and (self.pattern is None or "subject" not in self.pattern.placeholders):
            raise InvalidLayout("subject_from='filename' requires a pattern with a {subject} placeholder")

    def to_dict(self)-> dict:
        return {"layout_kind": self.layout_kind,
                "pattern": self.pattern.template if self.pattern else None,
                "class_from": self.class_from, "subject_from": self.subject_from,
                "extensions": list(self.extensions), "strict": self.strict}

    @classmethod
    def from_dict(cls, data: dict)-> "LayoutConfig":
        data = dict(data)
        if "extensions" in data: data["extensions"] = tuple(data["extensions"])
        return cls(**data)

    @classmethod
    def from_json(cls, path: pathlib.Path|str)-> "LayoutConfig":
        with open(path, 'r') as f:
            return cls.from_dict(json.load(f))

class _Skip(typing.NamedTuple):
    reason: typing.Literal["extension","pattern","layout"]
    error: Exception|None = None

def _build_record(root: pathlib.Path, relative: pathlib.PurePosixPath, config: LayoutConfig)-> ImageRecord|_Skip:
    """ Builds the record for one file, or returns why it was skipped """
    suffix = relative.suffix.lower().lstrip(".")
    if suffix not in config.extensions:
        return _Skip("extension")

    folders = list(relative.parts[:-1])
    presplit = None
    if config.layout_kind == "presplit_folders":
        if not folders or folders[0].lower() not in SPLITNAMES:
            return _Skip("layout", InvalidLayout(f"File outside train/val/test folders: {relative}", id = str(relative)))
        presplit = folders.pop(0).lower()

    fields: dict = {}
    if config.pattern is not None:
        try: fields = parse_filename(relative.stem, config.pattern)
        except (PatternMismatch, SliceNotNumeric) as e: return _Skip("pattern", e)

    if config.class_from == "folder":
        if not folders:
            return _Skip("layout", InvalidLayout(f"No class folder above file: {relative}", id = str(relative)))
        fields["class_label"] = folders[0]
    if config.subject_from == "folder":
        if config.layout_kind == "class_subject_folders":
            if len(folders) < 2:
                return _Skip("layout", InvalidLayout(f"No subject folder above file: {relative}", id = str(relative)))
            fields["subject"] = folders[1]
        elif config.layout_kind == "flat" and folders:
            fields["subject"] = folders[-1]
        elif config.layout_kind == "presplit_folders" and len(folders) >= 2:
            fields["subject"] = folders[-1]

    if not fields.get("class_label"):
        return _Skip("layout", InvalidLayout(f"Empty class label for file: {relative}", id = str(relative)))
    return ImageRecord(id = relative.as_posix(), path = (root / relative).as_posix(), presplit = presplit, **fields)

def scan_dataset(root: pathlib.Path|str, config: LayoutConfig, with_hashes: bool = False)-> Manifest:
    """ Scans a dataset tree into a Manifest sorted by path.

        root is the dataset's root directory.
        config is the LayoutConfig describing the tree.
        with_hashes additionally fills content_hash and dhash for every record.

        Files with unrecognized extensions are skipped and counted in Manifest.summary. Files that
        do not fit the pattern or layout are skipped and counted, or abort the scan in strict mode.
    """
    root = pathlib.Path(root)
    if not root.is_dir():
        raise RootNotFound(f"Dataset root not found: {root}", root = str(root))
    if config.layout_kind == "presplit_folders":
        present = {child.name.lower() for child in root.iterdir() if child.is_dir()}
        if not {"train","test"} <= present:
            raise InvalidLayout(f"presplit_folders requires train/ and test/ folders under {root}", root = str(root))

    relatives = sorted(pathlib.PurePosixPath(path.relative_to(root).as_posix()) for path in root.rglob("*") if path.is_file())
    with concurrent.futures.ThreadPoolExecutor(max_workers = Config.max_workers()) as executor:
        results = list(executor.map(lambda relative: _build_record(root, relative, config), relatives))

    records: list[ImageRecord] = []
    skipped = collections.Counter()
    for relative, result in zip(relatives, results):
        if isinstance(result, _Skip):
            if config.strict and result.reason != "extension":
                raise result.error
            skipped[result.reason] += 1
            logger.debug("skipped %s reason=%s", relative, result.reason)
            continue
        records.append(result)

    if not records:
        raise EmptyDataset(f"No image records found under {root}", root = str(root), skipped = sum(skipped.values()))

    summary = ScanSummary(records = len(records), skipped_extension = skipped["extension"],
                          skipped_pattern = skipped["pattern"], skipped_layout = skipped["layout"])
    manifest = Manifest(records, summary = summary)
    if with_hashes:
        manifest = HashDup.hash_manifest(manifest)
        manifest.summary = summary
    logger.info("scanned root=%s records=%d skipped_extension=%d skipped_pattern=%d skipped_layout=%d",
                root, *summary)
    return manifest

class Violation(typing.NamedTuple):
    """ A manifest problem reported by validate_manifest

    Attributes:
        kind: DuplicateId, MissingFile, MissingGroupKey, EmptyClassLabel or NegativeSlice
        id: the offending record id
        detail: free text
    """
    kind: str
    id: str
    detail: str = ""

def validate_manifest(manifest: Manifest, group_key: GroupKey|None = None, check_files: bool = True)-> list[Violation]:
    """ Returns every violation found in the manifest (an empty list for a valid manifest).

        group_key, if given, reports records that lack it (needed by grouped operations).
        check_files controls whether every path is checked on disk.
    """
    violations: list[Violation] = []
    counts = collections.Counter(record.id for record in manifest)
    for id, count in sorted(counts.items()):
        if count > 1: violations.append(Violation("DuplicateId", id, f"{count} records"))
    for record in manifest:
        if not record.class_label:
            violations.append(Violation("EmptyClassLabel", record.id))
        if record.slice_index is not None and record.slice_index < 0:
            violations.append(Violation("NegativeSlice", record.id, str(record.slice_index)))
        if check_files and not pathlib.Path(record.path).is_file():
            violations.append(Violation("MissingFile", record.id, record.path))
        if group_key is not None and record.group(group_key) is None:
            violations.append(Violation("MissingGroupKey", record.id, group_key))
    return violations
