""" AL_Splitgate.SynthBench

    Desk-scale reproduction of split-strategy inflation: synthetic "OCT-like" volumes whose consecutive
    slices are strongly alike, a deterministic nearest-neighbour surrogate classifier, and a repeated
    cross-validation experiment comparing per-image folds with per-volume folds.

    Slice s of volume v of class c:
        pixel = clamp_0_255(round_half_up(128 + shift_s(class_signal*B_c + volume_signal*G_v) + slice_noise*eta_s))
    B_c  sinusoidal grating, class-specific frequency (c + 2 cycles per image) and orientation (c*pi/K)
    G_v  integer noise box-blurred with radius 4 (wrapping edges), scaled to unit standard deviation
    eta_s integer noise in {-1, 0, 1}, fresh per slice
    shift_s vertical roll by round_half_up(slice_drift * s) rows
"""
## This Module
from AL_Splitgate import Config
from AL_Splitgate.Errors import EmptyTrain, IoFailure, KTooLarge, TooFewGroups
from AL_Splitgate.HashDup import block_means
from AL_Splitgate.Images import GrayImage, encode_pgm, write_pgm
from AL_Splitgate.Ingest import ImageRecord, Manifest, NamePattern, render_filename
from AL_Splitgate.LeakStats import NullDistribution, ProbeMode, ProbeReport, leakage_probe, sample_null_mcc
from AL_Splitgate.Metrics import MetricReport, evaluate, mcc_multiclass, confusion_matrix, summarize_reports
from AL_Splitgate.Random import XorShift64, derive_seed
from AL_Splitgate.Splitter import SplitConfig, SplitPlan, audit_overlap, make_cv_plan, make_split
## Third Party
import numpy as np
import pandas as pd
from scipy import ndimage
## Builtin
import concurrent.futures
import dataclasses
import hashlib
import json
import logging
import math
import pathlib
import typing

__all__ = ["SynthParams", "ExperimentReport", "NearestNeighbors", "LabelProbeResult",
           "generate_synth", "synth_corpus", "features", "knn_predict",
           "run_inflation_experiment", "run_random_label_probe"]

logger = logging.getLogger(__name__)

FILEPATTERN = NamePattern("{class}-{volume}-{slice}")
BLUR_RADIUS = 4
FEATURE_GRID = 16

## Seed-derivation tags
TAG_VOLUME, TAG_SLICE, TAG_LABELS = 1, 2, 3

## The "default" preset holds the tuned amplitudes; every other preset overrides it
DEFAULTS = Config.get_preset("synth", "default")

@dataclasses.dataclass(frozen = True)
class SynthParams():
    """ Synthetic corpus parameters (amplitudes in pixel units) """
    k_classes: int = DEFAULTS["k_classes"]
    volumes_per_class: int = DEFAULTS["volumes_per_class"]
    slices_per_volume: int = DEFAULTS["slices_per_volume"]
    width: int = DEFAULTS["width"]
    height: int = DEFAULTS["height"]
    class_signal: float = DEFAULTS["class_signal"]
    volume_signal: float = DEFAULTS["volume_signal"]
    slice_noise: float = DEFAULTS["slice_noise"]
    slice_drift: float = DEFAULTS["slice_drift"]
    seed: int = 0

    def __post_init__(self):
        if self.k_classes < 2: raise ValueError(f"k_classes must be at least 2: {self.k_classes}")
        if self.volumes_per_class < 1 or self.slices_per_volume < 1:
            raise ValueError("volumes_per_class and slices_per_volume must be at least 1")
        if self.width < FEATURE_GRID or self.height < FEATURE_GRID:
            raise ValueError(f"Images must be at least {FEATURE_GRID}x{FEATURE_GRID}")
        for name in ("class_signal","volume_signal","slice_noise"):
            if getattr(self, name) < 0: raise ValueError(f"{name} must be non-negative")

    def to_dict(self)-> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict)-> "SynthParams":
        return cls(**data)

    @classmethod
    def from_preset(cls, name: str, **overrides)-> "SynthParams":
        values = Config.get_preset("synth", name)
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

def class_name(c: int)-> str:
    return f"c{c:02d}"

def volume_name(c: int, v: int)-> str:
    return f"{class_name(c)}v{v:03d}"

def _round_half_up(values):
    return np.floor(np.asarray(values, dtype = np.float64) + 0.5)

def class_pattern(p: SynthParams, c: int)-> np.ndarray:
    """ B_c: unit-amplitude grating with class-specific frequency and orientation """
    y, x = np.mgrid[0:p.height, 0:p.width].astype(np.float64)
    theta = math.pi * c / p.k_classes
    frequency = (c + 2) / max(p.width, p.height)
    return np.sin(2 * math.pi * frequency * (x * math.cos(theta) + y * math.sin(theta)))

def volume_field(p: SynthParams, c: int, v: int)-> np.ndarray:
    """ G_v: smoothed random field with unit standard deviation """
    rng = np.random.default_rng(derive_seed(p.seed, TAG_VOLUME, c, v))
    noise = rng.integers(-128, 128, size = (p.height, p.width)).astype(np.float64)
    blurred = ndimage.uniform_filter(noise, size = 2 * BLUR_RADIUS + 1, mode = "wrap")
    std = blurred.std()
    return blurred / std if std > 0 else blurred

def render_volume(p: SynthParams, c: int, v: int)-> list[GrayImage]:
    """ All slices of one volume """
    field = p.class_signal * class_pattern(p, c) + p.volume_signal * volume_field(p, c, v)
    images = []
    for s in range(p.slices_per_volume):
        rng = np.random.default_rng(derive_seed(p.seed, TAG_SLICE, c, v, s))
        eta = rng.integers(-1, 2, size = (p.height, p.width))
        shifted = np.roll(field, int(_round_half_up(p.slice_drift * s)), axis = 0)
        pixels = np.clip(_round_half_up(128 + shifted + p.slice_noise * eta), 0, 255).astype(np.uint8)
        images.append(GrayImage(pixels))
    return images

def synth_corpus(p: SynthParams, root: pathlib.Path|str|None = None)-> tuple[Manifest, list[GrayImage]]:
    """ Renders the whole corpus in memory.

        Returns the manifest (records in filename order, subject = volume) and the images in the same order.
        root sets the directory used for record paths (default: paths are bare filenames).
    """
    units = [(c, v) for c in range(p.k_classes) for v in range(p.volumes_per_class)]
    with concurrent.futures.ThreadPoolExecutor(max_workers = Config.max_workers()) as executor:
        volumes = list(executor.map(lambda unit: render_volume(p, *unit), units))
    entries = []
    for (c, v), images in zip(units, volumes):
        for s, image in enumerate(images):
            fields = {"class_label": class_name(c), "volume": volume_name(c, v), "slice_index": f"{s:03d}"}
            filename = render_filename(fields, FILEPATTERN) + ".pgm"
            path = (pathlib.Path(root) / filename).as_posix() if root is not None else filename
            record = ImageRecord(id = filename, path = path, class_label = class_name(c), subject = volume_name(c, v),
                                 volume = volume_name(c, v), slice_index = s)
            entries.append((record, image))
    entries.sort(key = lambda entry: entry[0].id)
    return Manifest(record for record, _ in entries), [image for _, image in entries]

def generate_synth(p: SynthParams, out_dir: pathlib.Path|str, with_hashes: bool = False)-> Manifest:
    """ Writes the corpus as PGM files plus manifest.jsonl into out_dir and returns the manifest """
    out_dir = pathlib.Path(out_dir)
    try: out_dir.mkdir(parents = True, exist_ok = True)
    except OSError as e:
        raise IoFailure(f"Could not create {out_dir}: {e}", path = str(out_dir))
    manifest, images = synth_corpus(p, out_dir)
    for record, image in zip(manifest, images):
        write_pgm(record.path, image)
    if with_hashes:
        from AL_Splitgate.HashDup import hash_manifest
        manifest = hash_manifest(manifest)
    manifest.write(out_dir / "manifest.jsonl")
    logger.info("generated corpus out_dir=%s images=%d", out_dir, len(manifest))
    return manifest

def features(image: GrayImage)-> np.ndarray:
    """ 16x16 block means (256 integers) """
    return block_means(image, FEATURE_GRID, FEATURE_GRID).ravel().astype(np.int64)

class NearestNeighbors():
    """ Brute-force k-nearest-neighbour classifier with deterministic tie rules

    Distance is squared Euclidean in exact integer arithmetic; equal distances rank the lower
    record id first; the vote goes to the majority class with ties to the smallest class index.
    """
    def __init__(self, knn_k: int, n_classes: int):
        if knn_k < 1: raise ValueError(f"knn_k must be at least 1: {knn_k}")
        self.knn_k = knn_k
        self.n_classes = n_classes

    def fit(self, features: np.ndarray, labels: typing.Sequence[int], ids: typing.Sequence[str])-> "NearestNeighbors":
        if len(ids) == 0: raise EmptyTrain("Nearest-neighbour training set is empty")
        if self.knn_k > len(ids):
            raise KTooLarge(f"knn_k={self.knn_k} exceeds training size {len(ids)}", knn_k = self.knn_k, train = len(ids))
        order = sorted(range(len(ids)), key = lambda i: ids[i])
        self.features = np.asarray(features, dtype = np.int64)[order]
        self.labels = np.asarray(labels, dtype = np.int64)[order]
        self.ids = [ids[i] for i in order]
        self._norms = (self.features ** 2).sum(axis = 1)
        return self

    def predict(self, features: np.ndarray)-> tuple[np.ndarray, np.ndarray]:
        """ Returns (predicted class per row, per-class neighbour fractions per row) """
        features = np.asarray(features, dtype = np.int64)
        distances = (features ** 2).sum(axis = 1)[:, None] + self._norms[None, :] - 2 * features @ self.features.T
        neighbours = np.argsort(distances, axis = 1, kind = "stable")[:, :self.knn_k]
        votes = np.zeros((features.shape[0], self.n_classes), dtype = np.int64)
        for column in range(self.knn_k):
            np.add.at(votes, (np.arange(features.shape[0]), self.labels[neighbours[:, column]]), 1)
        return votes.argmax(axis = 1), votes / self.knn_k

def knn_predict(train_features: np.ndarray, train_labels: typing.Sequence[int], train_ids: typing.Sequence[str],
                test_features: np.ndarray, knn_k: int, n_classes: int|None = None)-> tuple[np.ndarray, np.ndarray]:
    """ Fits NearestNeighbors on the train set and predicts the test set """
    if n_classes is None: n_classes = int(max(train_labels, default = 0)) + 1
    return NearestNeighbors(knn_k, n_classes).fit(train_features, train_labels, train_ids).predict(test_features)

@dataclasses.dataclass
class ExperimentReport():
    """ Result of run_inflation_experiment

    Attributes:
        mcc_per_image, mcc_per_group: MCC of every (repeat, fold) evaluation
        mean_gap: mean(mcc_per_image) - mean(mcc_per_group)
        params: the corpus parameters
        cv: (k, repeats)
        knn_k: neighbours used by the surrogate
        seed: fold-plan seed shared by both strategies
        summary: per strategy, metric -> (mean, std) as in a results table
    """
    mcc_per_image: list[float]
    mcc_per_group: list[float]
    mean_gap: float
    params: SynthParams
    cv: tuple[int, int]
    knn_k: int
    seed: int
    summary: dict[str, dict[str, tuple[float, float]]] = dataclasses.field(default_factory = dict)

    def to_dict(self)-> dict:
        return {"mcc_per_image": list(self.mcc_per_image), "mcc_per_group": list(self.mcc_per_group),
                "mean_gap": self.mean_gap, "params": self.params.to_dict(), "cv": list(self.cv),
                "knn_k": self.knn_k, "seed": self.seed,
                "summary": {strategy: {metric: list(values) for metric, values in metrics.items()}
                            for strategy, metrics in self.summary.items()}}

    @classmethod
    def from_dict(cls, data: dict)-> "ExperimentReport":
        return cls(list(data["mcc_per_image"]), list(data["mcc_per_group"]), data["mean_gap"],
                   SynthParams.from_dict(data["params"]), tuple(data["cv"]), data["knn_k"], data["seed"],
                   {strategy: {metric: tuple(values) for metric, values in metrics.items()}
                    for strategy, metrics in data.get("summary", {}).items()})

def _write_predictions(path: pathlib.Path, ids: list[str], truth: np.ndarray, pred: np.ndarray, scores: np.ndarray):
    frame = pd.DataFrame({"image_id": ids, "true_label": truth, "pred_label": pred})
    for i in range(scores.shape[1]):
        frame[f"score_{i}"] = scores[:, i]
    frame.to_csv(path, index = False)

def run_inflation_experiment(p: SynthParams, cv_k: int = 5, repeats: int = 3, knn_k: int = 5, seed: int = 0,
                             predictions_dir: pathlib.Path|str|None = None)-> ExperimentReport:
    """ Compares per-image and per-volume cross-validation of the surrogate on one synthetic corpus.

        Both strategies use fold plans built from the same seed. For every (repeat, fold) the
        surrogate is fit on the out-of-fold images and MCC is measured on the fold. Every grouped
        fold is audited and must share no volume with its training side.
        predictions_dir, if given, receives one predictions CSV per evaluation plus classes.json.
    """
    if p.volumes_per_class < cv_k:
        raise TooFewGroups(f"{p.volumes_per_class} volumes per class cannot fill {cv_k} grouped folds",
                           groups = p.volumes_per_class, k = cv_k)
    manifest, images = synth_corpus(p)
    vectors = np.stack([features(image) for image in images])
    index = {record.id: i for i, record in enumerate(manifest)}
    labels = np.array([int(record.class_label[1:]) for record in manifest], dtype = np.int64)
    if predictions_dir is not None:
        predictions_dir = pathlib.Path(predictions_dir)
        predictions_dir.mkdir(parents = True, exist_ok = True)
        (predictions_dir / "classes.json").write_text(json.dumps([class_name(c) for c in range(p.k_classes)]))

    plans = {"per_image": make_cv_plan(manifest, cv_k, repeats, grouped = False, seed = seed),
             "per_group": make_cv_plan(manifest, cv_k, repeats, grouped = True, group_key = "volume", seed = seed)}
    reports: dict[str, list[MetricReport]] = {}
    for strategy, plan in plans.items():
        reports[strategy] = []
        for repeat, fold, train_ids, eval_ids in plan.pairs():
            if plan.grouped:
                overlap = audit_overlap(train_ids, eval_ids, manifest, "volume")
                if overlap.test_with_shared_group:
                    raise RuntimeError(f"Grouped fold {repeat}/{fold} shares volumes with training: {overlap.shared_groups}")
            train = [index[id] for id in train_ids]
            test = [index[id] for id in eval_ids]
            pred, scores = knn_predict(vectors[train], labels[train], train_ids, vectors[test], knn_k, p.k_classes)
            reports[strategy].append(evaluate(labels[test], pred, p.k_classes, scores))
            if predictions_dir is not None:
                _write_predictions(predictions_dir / f"{strategy}_r{repeat}_f{fold}.csv", eval_ids, labels[test], pred, scores)
            logger.debug("fold strategy=%s repeat=%d fold=%d mcc=%.6f", strategy, repeat, fold, reports[strategy][-1].mcc)

    per_image = [report.mcc for report in reports["per_image"]]
    per_group = [report.mcc for report in reports["per_group"]]
    gap = float(np.mean(per_image) - np.mean(per_group))
    logger.info("experiment seed=%d mean_gap=%.6f", seed, gap)
    return ExperimentReport(per_image, per_group, gap, p, (cv_k, repeats), knn_k, seed,
                            {strategy: summarize_reports(runs) for strategy, runs in reports.items()})

class LabelProbeResult(typing.NamedTuple):
    probe: ProbeReport
    null: NullDistribution
    plan: SplitPlan

def run_random_label_probe(p: SynthParams, strategy: typing.Literal["per_image","per_group"] = "per_group",
                           mode: ProbeMode = "randomize_train_only", knn_k: int = 5, seed: int = 0,
                           null_iters: int = 10000, test_per_class: int|None = None, alpha: float = 0.05)-> LabelProbeResult:
    """ Random-label experiment on a synthetic corpus.

        The surrogate is trained on random labels and scored against the original test labels; the
        resulting MCC is compared with a null distribution of the same test size.
        randomize_train_only: independent random labels for the training images.
        randomize_before_split: one random label per distinct file content, drawn for the whole corpus,
            so byte-identical images carry the same random label on both sides.
        test_per_class defaults to the images of one fifth of the volumes of a class.
    """
    manifest, images = synth_corpus(p)
    if test_per_class is None:
        test_per_class = p.slices_per_volume * max(1, p.volumes_per_class // 5)
    plan = make_split(manifest, SplitConfig(strategy = strategy, group_key = "volume", test_per_class = test_per_class, seed = seed))
    index = {record.id: i for i, record in enumerate(manifest)}
    vectors = np.stack([features(image) for image in images])
    truth = np.array([int(record.class_label[1:]) for record in manifest], dtype = np.int64)

    rng = XorShift64(derive_seed(seed, TAG_LABELS))
    if mode == "randomize_before_split":
        keys = [hashlib.sha256(encode_pgm(image)).hexdigest() for image in images]
        keylabels = {key: rng.below(p.k_classes) for key in sorted(set(keys))}
        random_labels = {record.id: keylabels[key] for record, key in zip(manifest, keys)}
    else:
        random_labels = {id: rng.below(p.k_classes) for id in plan.train_ids}

    train = [index[id] for id in plan.train_ids]
    test = [index[id] for id in plan.test_ids]
    pred, _ = knn_predict(vectors[train], [random_labels[id] for id in plan.train_ids], plan.train_ids,
                          vectors[test], knn_k, p.k_classes)
    observed = mcc_multiclass(confusion_matrix(truth[test], pred, p.k_classes))
    null = sample_null_mcc(len(test), p.k_classes, null_iters, derive_seed(seed, TAG_LABELS, 1))
    return LabelProbeResult(leakage_probe(observed, null, alpha, mode), null, plan)
