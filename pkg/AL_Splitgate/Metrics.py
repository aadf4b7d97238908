""" AL_Splitgate.Metrics

    Evaluation suite computed from labels and scores: multi-class confusion matrix, the generalized
    (R_K) Matthews correlation coefficient, per-class and macro accuracy/precision/recall/F1 (Sokolova
    definitions), and one-vs-rest ROC AUC from the rank statistic.

    "Accuracy" is reported two ways: overall accuracy (trace / n) and the average of the per-class
    accuracies (TP + TN) / n. Published result tables do not always say which one they use.
"""
## This Module
from AL_Splitgate.Errors import EmptyMatrix, LabelOutOfRange, LengthMismatch, NonFiniteScore
## Third Party
import numpy as np
import pandas as pd
from scipy import stats
## Builtin
import dataclasses
import json
import logging
import math
import pathlib
import typing

__all__ = ["ConfusionMatrix", "ClassMetrics", "MetricReport",
           "confusion_matrix", "mcc_multiclass", "classwise_metrics", "roc_auc_ovr",
           "evaluate", "read_predictions", "evaluate_predictions", "summarize_reports"]

logger = logging.getLogger(__name__)

class ConfusionMatrix(typing.NamedTuple):
    """ K x K counts; rows are the true class, columns the predicted class """
    counts: np.ndarray

    @property
    def k(self)-> int:
        return int(self.counts.shape[0])
    @property
    def n(self)-> int:
        return int(self.counts.sum())
    @property
    def true_totals(self)-> np.ndarray:
        """ t_k: row sums """
        return self.counts.sum(axis = 1)
    @property
    def predicted_totals(self)-> np.ndarray:
        """ p_k: column sums """
        return self.counts.sum(axis = 0)
    @property
    def correct(self)-> int:
        """ c: the trace """
        return int(np.trace(self.counts))

    def transpose(self)-> "ConfusionMatrix":
        return ConfusionMatrix(self.counts.T.copy())

    def tolist(self)-> list[list[int]]:
        return self.counts.astype(int).tolist()

    @classmethod
    def from_counts(cls, counts: typing.Sequence[typing.Sequence[int]])-> "ConfusionMatrix":
        array = np.asarray(counts, dtype = np.int64)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise ValueError(f"Confusion matrix must be square: shape {array.shape}")
        if (array < 0).any(): raise ValueError("Confusion matrix counts must be non-negative")
        return cls(array)

def confusion_matrix(truth: typing.Sequence[int], pred: typing.Sequence[int], k: int)-> ConfusionMatrix:
    """ Tallies counts[truth][pred] over the label pairs; labels must be in 0..k-1 """
    truth = np.asarray(truth, dtype = np.int64)
    pred = np.asarray(pred, dtype = np.int64)
    if truth.shape != pred.shape:
        raise LengthMismatch(f"truth and pred lengths differ: {truth.size} != {pred.size}", truth = truth.size, pred = pred.size)
    for name, labels in (("truth", truth), ("pred", pred)):
        bad = labels[(labels < 0) | (labels >= k)]
        if bad.size:
            raise LabelOutOfRange(f"{name} label {int(bad[0])} outside 0..{k-1}", label = int(bad[0]), k = k)
    counts = np.bincount(truth * k + pred, minlength = k * k).reshape(k, k)
    return ConfusionMatrix(counts.astype(np.int64))

def mcc_multiclass(cm: ConfusionMatrix)-> float:
    """ Generalized Matthews correlation coefficient

        MCC = (c*n - sum t_k p_k) / sqrt((n^2 - sum p_k^2) (n^2 - sum t_k^2)), 0 when a factor is 0
    """
    n = cm.n
    if n < 1: raise EmptyMatrix("Confusion matrix has no samples")
    ## python ints keep the products exact before the single float division
    t = [int(v) for v in cm.true_totals]
    p = [int(v) for v in cm.predicted_totals]
    numerator = cm.correct * n - sum(a * b for a, b in zip(t, p))
    left = n * n - sum(v * v for v in p)
    right = n * n - sum(v * v for v in t)
    if left == 0 or right == 0: return 0.0
    value = numerator / math.sqrt(left * right)
    return max(-1.0, min(1.0, value))

class ClassMetrics(typing.NamedTuple):
    precision: float
    recall: float
    f1: float
    accuracy: float

def _ratio(a: float, b: float)-> float:
    """ a / b with 0/0 defined as 0 """
    return a / b if b else 0.0

@dataclasses.dataclass
class MetricReport():
    """ The evaluation of one set of predictions

    Attributes:
        mcc: generalized MCC in [-1, 1]
        per_class: ClassMetrics per class index
        macro_precision, macro_recall, macro_f1: unweighted class means
        average_accuracy: unweighted mean of the per-class accuracies
        overall_accuracy: trace / n
        auc_per_class: one-vs-rest AUC per class (None where undefined); empty without scores
        macro_auc: mean of the defined per-class AUCs, None without scores
        confusion: the confusion matrix counts
        class_names: optional names for the class indices
    """
    mcc: float
    per_class: list[ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    average_accuracy: float
    overall_accuracy: float
    auc_per_class: list[float|None] = dataclasses.field(default_factory = list)
    macro_auc: float|None = None
    confusion: list[list[int]] = dataclasses.field(default_factory = list)
    class_names: list[str]|None = None

    def to_dict(self)-> dict:
        def real(value): return None if value is None else float(value)
        return {"mcc": real(self.mcc),
                "per_class": [{"class": self.class_names[i] if self.class_names else i,
                               **{key: real(value) for key, value in metrics._asdict().items()}}
                              for i, metrics in enumerate(self.per_class)],
                "macro_precision": real(self.macro_precision), "macro_recall": real(self.macro_recall),
                "macro_f1": real(self.macro_f1), "average_accuracy": real(self.average_accuracy),
                "overall_accuracy": real(self.overall_accuracy),
                "auc_per_class": [real(value) for value in self.auc_per_class], "macro_auc": real(self.macro_auc),
                "confusion": self.confusion}

def classwise_metrics(cm: ConfusionMatrix)-> MetricReport:
    """ Per-class precision, recall, F1 and accuracy with macro (unweighted) means; AUC fields left empty """
    n = cm.n
    if n < 1: raise EmptyMatrix("Confusion matrix has no samples")
    t, p = cm.true_totals, cm.predicted_totals
    per_class = []
    for i in range(cm.k):
        tp = int(cm.counts[i, i])
        fp = int(p[i]) - tp
        fn = int(t[i]) - tp
        tn = n - tp - fp - fn
        precision = _ratio(tp, tp + fp)
        recall = _ratio(tp, tp + fn)
        per_class.append(ClassMetrics(precision, recall, _ratio(2 * precision * recall, precision + recall), (tp + tn) / n))
    mean = lambda attr: float(np.mean([getattr(metrics, attr) for metrics in per_class]))
    return MetricReport(mcc = mcc_multiclass(cm), per_class = per_class,
                        macro_precision = mean("precision"), macro_recall = mean("recall"), macro_f1 = mean("f1"),
                        average_accuracy = mean("accuracy"), overall_accuracy = cm.correct / n,
                        confusion = cm.tolist())

def roc_auc_ovr(truth: typing.Sequence[int], scores: typing.Sequence[typing.Sequence[float]])-> tuple[list[float|None], float|None]:
    """ One-vs-rest AUC per class from the rank statistic with average ranks for ties.

        AUC_i = (R_pos - n_pos (n_pos + 1) / 2) / (n_pos n_neg), where R_pos is the rank-sum of the
        class-i scores of the class-i samples among all samples' class-i scores.
        Classes without both a positive and a negative sample get None and are left out of the macro mean.
    """
    truth = np.asarray(truth, dtype = np.int64)
    scores = np.asarray(scores, dtype = np.float64)
    if scores.ndim != 2 or scores.shape[0] != truth.size:
        raise LengthMismatch(f"scores should be shaped ({truth.size}, k): received {scores.shape}",
                             truth = truth.size, scores = list(scores.shape))
    if not np.isfinite(scores).all():
        raise NonFiniteScore("scores must be finite")
    aucs: list[float|None] = []
    for i in range(scores.shape[1]):
        positive = truth == i
        npos = int(positive.sum())
        nneg = truth.size - npos
        if npos == 0 or nneg == 0:
            aucs.append(None)
            continue
        ranks = stats.rankdata(scores[:, i], method = "average")
        rpos = float(ranks[positive].sum())
        aucs.append((rpos - npos * (npos + 1) / 2) / (npos * nneg))
    defined = [auc for auc in aucs if auc is not None]
    return aucs, (float(np.mean(defined)) if defined else None)

def evaluate(truth: typing.Sequence[int], pred: typing.Sequence[int], k: int,
             scores: typing.Sequence[typing.Sequence[float]]|None = None, class_names: list[str]|None = None)-> MetricReport:
    """ Full MetricReport: confusion, MCC, classwise metrics and (when scores are given) AUC """
    if class_names is not None and len(class_names) != k:
        raise ValueError(f"Expected {k} class names: received {len(class_names)}")
    report = classwise_metrics(confusion_matrix(truth, pred, k))
    if scores is not None:
        report.auc_per_class, report.macro_auc = roc_auc_ovr(truth, scores)
    report.class_names = class_names
    return report

class Predictions(typing.NamedTuple):
    image_ids: list[str]
    truth: list[int]
    pred: list[int]
    scores: list[list[float]]|None
    class_names: list[str]

def _class_names(classes_path: pathlib.Path|str|None, k: int)-> list[str]:
    """ Reads the class sidecar: either {"name": index, ...} or a list of names in index order """
    if classes_path is None: return [str(i) for i in range(k)]
    with open(classes_path, 'r') as f:
        data = json.load(f)
    if isinstance(data, list): return [str(name) for name in data]
    names = sorted(data, key = lambda name: data[name])
    if [data[name] for name in names] != list(range(len(names))):
        raise ValueError(f"Class mapping indices must be 0..k-1: {data}")
    return names

def read_predictions(path: pathlib.Path|str, classes_path: pathlib.Path|str|None = None)-> Predictions:
    """ Reads a predictions table: image_id,true_label,pred_label[,score_0..score_{k-1}].

        .xlsx files are read from the first Excel table (or first worksheet) of the workbook,
        anything else as CSV.
    """
    path = pathlib.Path(path)
    if path.suffix.lower() == ".xlsx":
        ## Local import: Workbooks is only needed for spreadsheet input
        from AL_Splitgate.Workbooks import read_table
        frame = pd.DataFrame(read_table(path))
    else:
        frame = pd.read_csv(path, dtype = {"image_id": str})
    missing = {"image_id","true_label","pred_label"} - set(frame.columns)
    if missing: raise ValueError(f"Predictions file lacks columns: {sorted(missing)}")
    scorecolumns = sorted((column for column in frame.columns if str(column).startswith("score_")),
                          key = lambda column: int(str(column).split("_", 1)[1]))
    truth = frame["true_label"].astype(int).tolist()
    pred = frame["pred_label"].astype(int).tolist()
    k = len(scorecolumns) or (max(truth + pred) + 1 if truth else 0)
    names = _class_names(classes_path, k)
    if scorecolumns and len(names) != len(scorecolumns):
        raise LengthMismatch(f"{len(scorecolumns)} score columns but {len(names)} class names", scores = len(scorecolumns),
                             classes = len(names))
    scores = frame[scorecolumns].astype(float).values.tolist() if scorecolumns else None
    return Predictions(frame["image_id"].astype(str).tolist(), truth, pred, scores, names)

def evaluate_predictions(path: pathlib.Path|str, classes_path: pathlib.Path|str|None = None)-> MetricReport:
    """ Reads a predictions file and evaluates it; AUC is skipped when the file has no scores """
    predictions = read_predictions(path, classes_path)
    ## the class names fix k; labels beyond them are out of range
    k = len(predictions.class_names)
    report = evaluate(predictions.truth, predictions.pred, k, predictions.scores, predictions.class_names)
    logger.info("evaluated path=%s n=%d mcc=%.6f", path, len(predictions.truth), report.mcc)
    return report

def summarize_reports(reports: typing.Sequence[MetricReport])-> dict[str, tuple[float, float]]:
    """ Mean and standard deviation over a set of runs, shaped like a results-table row.

        MCC is aggregated over runs; AUC, F1, accuracy, precision and recall over (run, class) pairs.
        Standard deviations are population (ddof = 0). AUC is omitted when no run has scores.
    """
    def meanstd(values):
        values = np.asarray(values, dtype = np.float64)
        return (float(values.mean()), float(values.std())) if values.size else (float("nan"), float("nan"))
    out = {"mcc": meanstd([report.mcc for report in reports])}
    aucs = [auc for report in reports for auc in report.auc_per_class if auc is not None]
    if aucs: out["auc"] = meanstd(aucs)
    for name in ("f1","accuracy","precision","recall"):
        out[name] = meanstd([getattr(metrics, name) for report in reports for metrics in report.per_class])
    return out
