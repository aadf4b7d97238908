""" AL_Splitgate.Splitter

    Per-image and per-group (volume or subject) train/test splits, repeated k-fold plans,
    and the overlap audit that measures how much of a test set shares groups with training.

    All randomness comes from AL_Splitgate.Random.XorShift64 and every shuffle runs over
    lexicographically sorted inputs, so plans depend only on (manifest, configuration, seed).
"""
## This Module
from AL_Splitgate.Errors import (EmptyTest, InsufficientImages, MissingGroupKey, SingleGroupClass,
                                 TooFewGroups, TooFewImages, UnknownId)
from AL_Splitgate.Ingest import GroupKey, Manifest
from AL_Splitgate.Random import XorShift64, derive_seed
## Builtin
import collections
import dataclasses
import logging
import typing

__all__ = ["SplitConfig", "SplitPlan", "CVPlan", "OverlapReport",
           "make_split", "split_from_presplit", "make_cv_plan", "audit_overlap"]

logger = logging.getLogger(__name__)

Strategy = typing.Literal["per_image","per_group"]

@dataclasses.dataclass(frozen = True)
class SplitConfig():
    """ How to draw a test set

    Attributes:
        strategy: "per_image" draws images; "per_group" draws whole groups
        group_key: "subject" or "volume" (used by per_group)
        test_per_class: images of each class to put in the test set
        seed: 64-bit unsigned seed
    """
    strategy: Strategy = "per_group"
    group_key: GroupKey = "subject"
    test_per_class: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in ("per_image","per_group"): raise ValueError(f"Unknown strategy: {self.strategy}")
        if self.group_key not in ("subject","volume"): raise ValueError(f"Unknown group key: {self.group_key}")
        if self.test_per_class < 1: raise ValueError(f"test_per_class must be positive: {self.test_per_class}")
        if not 0 <= self.seed < 1 << 64: raise ValueError(f"seed must be a 64-bit unsigned integer: {self.seed}")

    def to_dict(self)-> dict:
        return dataclasses.asdict(self)

@dataclasses.dataclass
class SplitPlan():
    """ A train/test assignment of manifest ids

    Attributes:
        config: the SplitConfig that produced the plan (None for a dataset's own given split)
        train_ids, test_ids: sorted id lists
        test_counts: test images per class
        overshoot: per class, test images beyond test_per_class (per_group keeps groups whole)
    """
    config: SplitConfig|None
    train_ids: list[str]
    test_ids: list[str]
    test_counts: dict[str, int] = dataclasses.field(default_factory = dict)
    overshoot: dict[str, int] = dataclasses.field(default_factory = dict)

    def to_dict(self)-> dict:
        return {"config": self.config.to_dict() if self.config else None,
                "train_ids": list(self.train_ids), "test_ids": list(self.test_ids),
                "test_counts": dict(self.test_counts), "overshoot": dict(self.overshoot)}

    @classmethod
    def from_dict(cls, data: dict)-> "SplitPlan":
        config = SplitConfig(**data["config"]) if data.get("config") else None
        return cls(config, list(data["train_ids"]), list(data["test_ids"]),
                   dict(data.get("test_counts", {})), dict(data.get("overshoot", {})))

def _require_group(manifest: Manifest, key: GroupKey):
    for record in manifest:
        if record.group(key) is None:
            raise MissingGroupKey(f"Record {record.id} has no {key}", id = record.id, group_key = key)

def make_split(manifest: Manifest, config: SplitConfig)-> SplitPlan:
    """ Draws a test set of config.test_per_class images per class.

        per_image: each class's images (sorted by id) are shuffled and the first test_per_class taken.
        per_group: each class's groups (sorted) are shuffled and whole groups are added until the class
            has at least test_per_class test images. A group is atomic across classes: all of its images
            move together. The count may overshoot and is reported, never truncated.
        Classes are processed in sorted order with one generator seeded from config.seed.
    """
    rng = XorShift64(config.seed)
    byclass = manifest.by_class()
    test: set[str] = set()

    if config.strategy == "per_image":
        for label, records in byclass.items():
            if len(records) < config.test_per_class:
                raise InsufficientImages(f"Class {label} has {len(records)} images; {config.test_per_class} requested",
                                         class_label = label, available = len(records), requested = config.test_per_class)
            ids = rng.shuffle([record.id for record in records])
            test.update(ids[:config.test_per_class])
    else:
        _require_group(manifest, config.group_key)
        groups = manifest.groups(config.group_key)
        testgroups: set[str] = set()
        idsbyclass = {label: {record.id for record in records} for label, records in byclass.items()}
        for label, records in byclass.items():
            classgroups = sorted({record.group(config.group_key) for record in records})
            if len(classgroups) < 2:
                raise SingleGroupClass(f"Class {label} has a single {config.group_key}; no train side would remain",
                                       class_label = label)
            if len(records) < config.test_per_class:
                raise InsufficientImages(f"Class {label} has {len(records)} images; {config.test_per_class} requested",
                                         class_label = label, available = len(records), requested = config.test_per_class)
            classids = idsbyclass[label]
            count = len(classids & test)
            for group in rng.shuffle(classgroups):
                if count >= config.test_per_class: break
                if group in testgroups: continue
                candidate = test | set(groups[group])
                ## a group may span classes; none of them may lose its last training image
                emptied = [other for other, ids in idsbyclass.items() if ids <= candidate]
                if emptied:
                    logger.debug("skipped group=%s: would leave no training images for %s", group, emptied)
                    continue
                testgroups.add(group)
                test = candidate
                count = len(classids & test)
            if count < config.test_per_class:
                raise SingleGroupClass(f"Reaching {config.test_per_class} test images of class {label} would leave a class "
                                       f"without training images", class_label = label, reached = count,
                                       requested = config.test_per_class)

    counts = collections.Counter(manifest[id].class_label for id in test)
    test_counts = {label: counts.get(label, 0) for label in byclass}
    overshoot = {label: max(0, count - config.test_per_class) for label, count in test_counts.items()}
    plan = SplitPlan(config, sorted(set(manifest.ids()) - test), sorted(test), test_counts, overshoot)
    logger.info("split strategy=%s seed=%d train=%d test=%d", config.strategy, config.seed, len(plan.train_ids), len(plan.test_ids))
    return plan

def split_from_presplit(manifest: Manifest, include_val: bool = True)-> SplitPlan:
    """ Builds a SplitPlan from the dataset's own train/val/test folders.

        include_val puts "val" records on the train side (they took part in model fitting);
        otherwise they are left out of both sides. Records without presplit are left out.
    """
    trainside = {"train","val"} if include_val else {"train"}
    train = sorted(record.id for record in manifest if record.presplit in trainside)
    test = sorted(record.id for record in manifest if record.presplit == "test")
    if not test:
        raise EmptyTest("Manifest has no presplit test records")
    counts = collections.Counter(manifest[id].class_label for id in test)
    return SplitPlan(None, train, test, dict(sorted(counts.items())), {})

@dataclasses.dataclass
class CVPlan():
    """ Repeated k-fold assignment

    Attributes:
        k: folds per repeat
        repeats: number of repeats
        fold_of: per repeat, a map id -> fold index 0..k-1
        seed: the plan seed (repeat r uses derive_seed(seed, r))
        grouped: whether folds keep groups whole
        group_key: the group key used when grouped
    """
    k: int
    repeats: int
    fold_of: list[dict[str, int]]
    seed: int
    grouped: bool = False
    group_key: GroupKey|None = None

    def folds(self, repeat: int)-> list[list[str]]:
        """ The sorted ids of every fold of the given repeat """
        out = [[] for _ in range(self.k)]
        for id, fold in sorted(self.fold_of[repeat].items()):
            out[fold].append(id)
        return out

    def pairs(self)-> typing.Iterator[tuple[int, int, list[str], list[str]]]:
        """ Yields (repeat, fold, train_ids, eval_ids) for all k x repeats evaluations """
        for repeat in range(self.repeats):
            folds = self.folds(repeat)
            for fold in range(self.k):
                train = sorted(id for other, ids in enumerate(folds) if other != fold for id in ids)
                yield repeat, fold, train, folds[fold]

    def to_dict(self)-> dict:
        return {"k": self.k, "repeats": self.repeats, "seed": self.seed, "grouped": self.grouped,
                "group_key": self.group_key, "folds": [self.folds(repeat) for repeat in range(self.repeats)]}

    @classmethod
    def from_dict(cls, data: dict)-> "CVPlan":
        fold_of = [{id: fold for fold, ids in enumerate(folds) for id in ids} for folds in data["folds"]]
        return cls(data["k"], data["repeats"], fold_of, data["seed"], data.get("grouped", False), data.get("group_key"))

def make_cv_plan(manifest: Manifest, k: int, repeats: int, grouped: bool = False,
                 group_key: GroupKey|None = "subject", seed: int = 0)-> CVPlan:
    """ Builds a repeated, class-stratified k-fold plan.

        Each repeat r shuffles with its own generator seeded by derive_seed(seed, r).
        Ungrouped: each class's images are shuffled and dealt round-robin to folds, continuing the
        dealing position from the previous class. Grouped: each class's groups are shuffled and dealt
        round-robin; a group spanning classes is placed by the first class that deals it.
    """
    if k < 2: raise ValueError(f"k must be at least 2: {k}")
    if repeats < 1: raise ValueError(f"repeats must be at least 1: {repeats}")
    byclass = manifest.by_class()
    if grouped:
        _require_group(manifest, group_key)
        groups = manifest.groups(group_key)
        for label, records in byclass.items():
            count = len({record.group(group_key) for record in records})
            if count < k:
                raise TooFewGroups(f"Class {label} has {count} {group_key} groups; {k} folds requested",
                                   class_label = label, groups = count, k = k)
    else:
        for label, records in byclass.items():
            if len(records) < k:
                raise TooFewImages(f"Class {label} has {len(records)} images; {k} folds requested",
                                   class_label = label, images = len(records), k = k)

    fold_of: list[dict[str, int]] = []
    for repeat in range(repeats):
        rng = XorShift64(derive_seed(seed, repeat))
        assignment: dict[str, int] = {}
        position = 0
        for label, records in byclass.items():
            if grouped:
                for group in rng.shuffle(sorted({record.group(group_key) for record in records})):
                    if groups[group][0] in assignment: continue
                    for id in groups[group]:
                        assignment[id] = position % k
                    position += 1
            else:
                for id in rng.shuffle([record.id for record in records]):
                    assignment[id] = position % k
                    position += 1
        fold_of.append(dict(sorted(assignment.items())))
    logger.info("cv plan k=%d repeats=%d grouped=%s seed=%d", k, repeats, grouped, seed)
    return CVPlan(k, repeats, fold_of, seed, grouped, group_key if grouped else None)

@dataclasses.dataclass
class OverlapReport():
    """ Share of test images whose group also occurs in training

    Attributes:
        test_total: test images carrying the group key
        test_with_shared_group: those whose group value occurs among train images
        fraction: test_with_shared_group / test_total
        shared_groups: sorted shared group values
        ungrouped: test images lacking the group key (never part of the fraction)
        group_key: the key audited
    """
    test_total: int
    test_with_shared_group: int
    fraction: float
    shared_groups: list[str]
    ungrouped: int = 0
    group_key: GroupKey = "subject"

    def to_dict(self)-> dict:
        return dataclasses.asdict(self)

def audit_overlap(train_ids: typing.Iterable[str], test_ids: typing.Iterable[str], manifest: Manifest,
                  group_key: GroupKey = "subject")-> OverlapReport:
    """ Measures the share of test images whose group value also appears among the train images """
    train_ids, test_ids = list(train_ids), list(test_ids)
    if not test_ids: raise EmptyTest("Test id list is empty")
    unknown = [id for id in train_ids + test_ids if id not in manifest]
    if unknown:
        raise UnknownId(f"{len(unknown)} ids not in manifest, first: {unknown[0]}", ids = unknown[:20])
    traingroups = {manifest[id].group(group_key) for id in train_ids} - {None}
    values = [manifest[id].group(group_key) for id in test_ids]
    ungrouped = sum(1 for value in values if value is None)
    grouped = [value for value in values if value is not None]
    shared = [value for value in grouped if value in traingroups]
    total = len(grouped)
    report = OverlapReport(test_total = total, test_with_shared_group = len(shared),
                           fraction = len(shared) / total if total else 0.0,
                           shared_groups = sorted(set(shared)), ungrouped = ungrouped, group_key = group_key)
    logger.info("overlap group_key=%s test=%d shared=%d fraction=%.6f", group_key, total, len(shared), report.fraction)
    return report
