""" AL_Splitgate.CLI

    The splitgate executable. Every subcommand writes one JSON document (to --out or standard output)
    embedding the tool version, the subcommand, the resolved flags and the seeds used; `report`
    renders such a document as text (and optionally as a workbook).

    Exit codes: 0 success, 1 domain error (JSON {code, message, context} on standard error), 2 usage error.
"""
## This Module
from AL_Splitgate import Config, HashDup, Ingest, LeakStats, Metrics, Splitter, SynthBench, Workbooks
from AL_Splitgate.Errors import DuplicatesFound, IoFailure, OverlapAboveThreshold, SplitgateError
## Builtin
import argparse
import json
import logging
import pathlib
import sys
import typing

__all__ = ["main", "build_parser", "render_report", "dumps"]

logger = logging.getLogger(__name__)

TOOL = "splitgate"

class UsageError(Exception):
    """ Raised for invalid flag combinations discovered after parsing """

class _Parser(argparse.ArgumentParser):
    """ ArgumentParser that raises instead of exiting so main() owns the exit code """
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")

def _seed(value: str)-> int:
    seed = int(value, 0)
    if not 0 <= seed < 1 << 64: raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer: {value}")
    return seed

def _fraction(value: str)-> float:
    fraction = float(value)
    if not 0 <= fraction <= 1: raise argparse.ArgumentTypeError(f"expected a fraction in [0, 1]: {value}")
    return fraction

def _choice(value: str)-> str:
    """ Accepts dashed spellings of underscored choices (per-group -> per_group) """
    return value.replace("-", "_")

def build_parser()-> argparse.ArgumentParser:
    parser = _Parser(prog = TOOL, description = "Audit and generate leakage-safe dataset splits")
    parser.add_argument("--version", action = "version", version = f"{TOOL} {Config.VERSION}")
    common = argparse.ArgumentParser(add_help = False)
    common.add_argument("--out", type = pathlib.Path, help = "Output path (default: standard output)")
    common.add_argument("--verbose", "-v", action = "store_true", help = "Log debug detail to standard error")
    subparsers = parser.add_subparsers(dest = "subcommand", required = True, parser_class = _Parser)

    scan = subparsers.add_parser("scan", parents = [common], help = "Scan a dataset tree into a manifest")
    scan.add_argument("--root", type = pathlib.Path, required = True)
    scan.add_argument("--manifest-out", type = pathlib.Path, required = True, help = "Where to write the JSON Lines manifest")
    scan.add_argument("--config", type = pathlib.Path, help = "LayoutConfig JSON document (flags override it)")
    scan.add_argument("--layout", type = _choice, choices = ["class_subject_folders","presplit_folders","flat"])
    scan.add_argument("--pattern", help = 'Filename template, e.g. "{class}-{subject}-{slice}"')
    scan.add_argument("--class-from", type = _choice, choices = ["folder","filename"])
    scan.add_argument("--subject-from", type = _choice, choices = ["folder","filename"])
    scan.add_argument("--extensions", help = "Comma separated extension allow-list")
    scan.add_argument("--strict", action = "store_true", default = None)
    scan.add_argument("--hash", action = "store_true", help = "Fill content and difference hashes")
    scan.set_defaults(handler = cmd_scan)

    def sides(sub, allow_manifests = False):
        sub.add_argument("--manifest", type = pathlib.Path, required = not allow_manifests)
        sub.add_argument("--plan", type = pathlib.Path, help = "SplitPlan JSON (a split document or a bare plan)")
        sub.add_argument("--presplit", action = "store_true", help = "Use the dataset's own train/val/test folders")
        sub.add_argument("--exclude-val", action = "store_true", help = "With --presplit, leave val out of the train side")

    overlap = subparsers.add_parser("audit-overlap", parents = [common], help = "Share of test images whose group is in training")
    sides(overlap)
    overlap.add_argument("--group-key", type = _choice, choices = ["subject","volume"], default = "subject")
    overlap.add_argument("--fail-above", type = _fraction, help = "Exit 1 when the overlap fraction exceeds this value")
    overlap.set_defaults(handler = cmd_audit_overlap)

    dups = subparsers.add_parser("audit-dups", parents = [common], help = "Exact and near-duplicate images across a split")
    sides(dups, allow_manifests = True)
    dups.add_argument("--train-manifest", type = pathlib.Path)
    dups.add_argument("--test-manifest", type = pathlib.Path)
    dups.add_argument("--threshold", type = int, default = Config.DEFAULT_THRESHOLD)
    dups.add_argument("--check-flip", action = "store_true")
    dups.add_argument("--fail-on-duplicates", action = "store_true", help = "Exit 1 when any duplicate is found")
    dups.set_defaults(handler = cmd_audit_dups)

    split = subparsers.add_parser("split", parents = [common], help = "Draw a per-image or per-group train/test split")
    split.add_argument("--manifest", type = pathlib.Path, required = True)
    split.add_argument("--strategy", type = _choice, choices = ["per_image","per_group"], default = "per_group")
    split.add_argument("--group-key", type = _choice, choices = ["subject","volume"], default = "subject")
    split.add_argument("--test-per-class", type = int)
    split.add_argument("--preset", help = "kermany-like, srinivasan-like or aiims-like")
    split.add_argument("--seed", type = _seed, required = True)
    split.set_defaults(handler = cmd_split)

    cv = subparsers.add_parser("cv-plan", parents = [common], help = "Repeated stratified k-fold plan")
    cv.add_argument("--manifest", type = pathlib.Path, required = True)
    cv.add_argument("--k", type = int, default = Config.DEFAULT_CV_K)
    cv.add_argument("--repeats", type = int, default = Config.DEFAULT_CV_REPEATS)
    cv.add_argument("--grouped", action = "store_true")
    cv.add_argument("--group-key", type = _choice, choices = ["subject","volume"], default = "subject")
    cv.add_argument("--seed", type = _seed, required = True)
    cv.set_defaults(handler = cmd_cv_plan)

    evaluate = subparsers.add_parser("evaluate", parents = [common], help = "Metric suite from a predictions file")
    evaluate.add_argument("--predictions", type = pathlib.Path, required = True, help = "CSV or .xlsx predictions table")
    evaluate.add_argument("--classes", type = pathlib.Path, help = "JSON class name <-> index mapping")
    evaluate.set_defaults(handler = cmd_evaluate)

    null = subparsers.add_parser("null-test", parents = [common], help = "Monte-Carlo MCC null distribution")
    null.add_argument("--n-test", type = int, required = True)
    null.add_argument("--k", type = int, required = True)
    null.add_argument("--iters", type = int, default = 10000)
    null.add_argument("--seed", type = _seed, required = True)
    null.add_argument("--no-samples", action = "store_true", help = "Omit the samples from the output")
    null.set_defaults(handler = cmd_null_test)

    probe = subparsers.add_parser("probe", parents = [common], help = "Random-label leakage probe")
    probe.add_argument("--observed", type = float, help = "Observed random-label MCC")
    probe.add_argument("--null", type = pathlib.Path, help = "Stored null-test document (with samples)")
    probe.add_argument("--n-test", type = int)
    probe.add_argument("--k", type = int)
    probe.add_argument("--iters", type = int, default = 10000)
    probe.add_argument("--synth-preset", help = "Run the random-label experiment on a synthetic preset instead")
    probe.add_argument("--strategy", type = _choice, choices = ["per_image","per_group"], default = "per_group")
    probe.add_argument("--knn-k", type = int, default = 5)
    probe.add_argument("--alpha", type = float, default = 0.05)
    probe.add_argument("--mode", type = _choice, choices = ["randomize_before_split","randomize_train_only"],
                       default = "randomize_train_only")
    probe.add_argument("--seed", type = _seed)
    probe.set_defaults(handler = cmd_probe)

    def synthflags(sub):
        sub.add_argument("--preset", default = "default")
        sub.add_argument("--seed", type = _seed, required = True)
        for name in ("k_classes","volumes_per_class","slices_per_volume","width","height"):
            sub.add_argument("--" + name.replace("_","-"), type = int)
        for name in ("class_signal","volume_signal","slice_noise","slice_drift"):
            sub.add_argument("--" + name.replace("_","-"), type = float)

    synth = subparsers.add_parser("synth", parents = [common], help = "Write a synthetic OCT-like corpus")
    synthflags(synth)
    synth.add_argument("--out-dir", type = pathlib.Path, required = True)
    synth.add_argument("--hash", action = "store_true")
    synth.set_defaults(handler = cmd_synth)

    experiment = subparsers.add_parser("experiment", parents = [common], help = "Per-image vs per-volume inflation experiment")
    synthflags(experiment)
    experiment.add_argument("--cv-k", type = int, default = 5)
    experiment.add_argument("--repeats", type = int, default = 3)
    experiment.add_argument("--knn-k", type = int, default = 5)
    experiment.add_argument("--predictions-dir", type = pathlib.Path)
    experiment.set_defaults(handler = cmd_experiment)

    report = subparsers.add_parser("report", parents = [common], help = "Render a JSON document as text")
    report.add_argument("document", type = pathlib.Path)
    report.add_argument("--xlsx", type = pathlib.Path, help = "Also export the tables to a workbook")
    report.set_defaults(handler = cmd_report)
    return parser

class _Encoder(json.JSONEncoder):
    """ JSONEncoder that writes every float with at least six fractional digits """
    def iterencode(self, o, _one_shot = False):
        indent = self.indent if self.indent is None or isinstance(self.indent, str) else " " * self.indent
        encoder = json.encoder.encode_basestring_ascii if self.ensure_ascii else json.encoder.encode_basestring
        def floatstr(value: float)-> str:
            if value != value or value in (float("inf"), -float("inf")):
                if not self.allow_nan: raise ValueError(f"Out of range float values are not JSON compliant: {value!r}")
                return "NaN" if value != value else ("Infinity" if value > 0 else "-Infinity")
            text = float.__repr__(value)
            if "e" in text: return text
            whole, fraction = text.split(".")
            return f"{whole}.{fraction.ljust(6, '0')}"
        iterencode = json.encoder._make_iterencode({} if self.check_circular else None, self.default, encoder, indent, floatstr,
                                                   self.key_separator, self.item_separator, self.sort_keys, self.skipkeys, _one_shot)
        return iterencode(o, 0)

def dumps(document, **kw)-> str:
    """ json.dumps with reals written to six fractional digits or more """
    return json.dumps(document, cls = _Encoder, **kw)

def _flags(args: argparse.Namespace)-> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in ("handler","verbose"): continue
        out[key] = str(value) if isinstance(value, pathlib.Path) else value
    return out

def _document(args: argparse.Namespace, result: dict, seeds: dict|None = None)-> dict:
    return {"tool": TOOL, "version": Config.VERSION, "subcommand": args.subcommand,
            "flags": _flags(args), "seeds": seeds or {}, "result": result}

def _read_json(path: pathlib.Path)-> dict:
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except OSError as e:
        raise IoFailure(f"Could not read {path}: {e}", path = str(path))
    except json.JSONDecodeError as e:
        raise IoFailure(f"Not a JSON document: {path}: {e}", path = str(path))
    if not isinstance(data, dict):
        raise IoFailure(f"Expected a JSON object: {path}", path = str(path))
    return data

def _parse_document(path: pathlib.Path, parse: typing.Callable[[dict], typing.Any], kind: str):
    """ Reads a JSON object and hands it to parse; missing or mistyped fields become IoFailure """
    data = _read_json(path)
    try: return parse(data)
    except (KeyError, IndexError, TypeError, AttributeError, ValueError) as e:
        if isinstance(e, SplitgateError): raise
        raise IoFailure(f"Not a splitgate {kind} document: {path}: {e!r}", path = str(path))

def _plan_from(data: dict)-> Splitter.SplitPlan:
    ## accept a split document as well as a bare plan
    if "result" in data: data = data["result"]["plan"]
    return Splitter.SplitPlan.from_dict(data)

def _null_from(data: dict)-> LeakStats.NullDistribution:
    if "result" in data: data = data["result"]
    return LeakStats.NullDistribution.from_dict(data)

def _read_manifest(path: pathlib.Path)-> Ingest.Manifest:
    try: return Ingest.Manifest.read(path)
    except OSError as e:
        raise IoFailure(f"Could not read manifest {path}: {e}", path = str(path))
    except (json.JSONDecodeError, TypeError, ValueError) as e:
        if isinstance(e, SplitgateError): raise
        raise IoFailure(f"Invalid manifest {path}: {e}", path = str(path))

def _load_plan(path: pathlib.Path)-> Splitter.SplitPlan:
    return _parse_document(path, _plan_from, "split plan")

def _split_sides(args)-> tuple[Ingest.Manifest, list[str], list[str]]:
    if bool(args.plan) == bool(args.presplit):
        raise UsageError("exactly one of --plan or --presplit is required")
    manifest = _read_manifest(args.manifest)
    plan = _load_plan(args.plan) if args.plan else Splitter.split_from_presplit(manifest, include_val = not args.exclude_val)
    return manifest, plan.train_ids, plan.test_ids

def cmd_scan(args)-> tuple[dict, SplitgateError|None]:
    values = Ingest.LayoutConfig.from_json(args.config).to_dict() if args.config else {}
    for flag, key in (("layout","layout_kind"),("pattern","pattern"),("class_from","class_from"),
                      ("subject_from","subject_from"),("strict","strict")):
        if getattr(args, flag) is not None: values[key] = getattr(args, flag)
    if args.extensions: values["extensions"] = [ext.strip() for ext in args.extensions.split(",") if ext.strip()]
    config = Ingest.LayoutConfig.from_dict(values)
    manifest = Ingest.scan_dataset(args.root, config, with_hashes = args.hash)
    try: manifest.write(args.manifest_out)
    except OSError as e: raise IoFailure(f"Could not write {args.manifest_out}: {e}", path = str(args.manifest_out))
    result = {"layout": config.to_dict(), "summary": manifest.summary._asdict(), "manifest": str(args.manifest_out),
              "classes": manifest.classes()}
    return _document(args, result), None

def cmd_audit_overlap(args):
    manifest, train, test = _split_sides(args)
    report = Splitter.audit_overlap(train, test, manifest, args.group_key)
    error = None
    if args.fail_above is not None and report.fraction > args.fail_above:
        error = OverlapAboveThreshold(f"Overlap fraction {report.fraction:.6f} exceeds {args.fail_above}",
                                      fraction = report.fraction, fail_above = args.fail_above)
    return _document(args, report.to_dict()), error

def cmd_audit_dups(args):
    if args.train_manifest or args.test_manifest:
        if not (args.train_manifest and args.test_manifest) or args.manifest:
            raise UsageError("use --train-manifest with --test-manifest, or --manifest with --plan/--presplit")
        train, test = _read_manifest(args.train_manifest), _read_manifest(args.test_manifest)
    else:
        if not args.manifest: raise UsageError("--manifest or --train-manifest/--test-manifest is required")
        manifest, trainids, testids = _split_sides(args)
        train, test = manifest.subset(trainids), manifest.subset(testids)
    if not 0 <= args.threshold <= 64: raise UsageError("--threshold must be in 0..64")
    report = HashDup.audit_duplicates(train, test, args.threshold, args.check_flip)
    error = None
    if args.fail_on_duplicates and (report.exact_pairs or report.near_pairs):
        error = DuplicatesFound(f"{len(report.exact_pairs)} exact and {len(report.near_pairs)} near duplicates",
                                exact = len(report.exact_pairs), near = len(report.near_pairs))
    return _document(args, report.to_dict()), error

def cmd_split(args):
    test_per_class = args.test_per_class
    if args.preset:
        try: preset = Config.get_preset("split", args.preset)
        except KeyError as e: raise UsageError(str(e))
        test_per_class = test_per_class or preset["test_per_class"]
    if test_per_class is None: raise UsageError("--test-per-class or --preset is required")
    manifest = _read_manifest(args.manifest)
    config = Splitter.SplitConfig(args.strategy, args.group_key, test_per_class, args.seed)
    plan = Splitter.make_split(manifest, config)
    result = {"plan": plan.to_dict()}
    if all(record.group(args.group_key) is not None for record in manifest):
        result["audit"] = Splitter.audit_overlap(plan.train_ids, plan.test_ids, manifest, args.group_key).to_dict()
    return _document(args, result, {"seed": args.seed}), None

def cmd_cv_plan(args):
    if args.k < 2 or args.repeats < 1: raise UsageError("--k must be at least 2 and --repeats at least 1")
    manifest = _read_manifest(args.manifest)
    plan = Splitter.make_cv_plan(manifest, args.k, args.repeats, args.grouped, args.group_key, args.seed)
    return _document(args, plan.to_dict(), {"seed": args.seed}), None

def cmd_evaluate(args):
    try: report = Metrics.evaluate_predictions(args.predictions, args.classes)
    except OSError as e: raise IoFailure(f"Could not read predictions: {e}", path = str(args.predictions))
    except (KeyError, ValueError) as e:
        if isinstance(e, SplitgateError): raise
        raise IoFailure(f"Invalid predictions file {args.predictions}: {e}", path = str(args.predictions))
    return _document(args, report.to_dict()), None

def cmd_null_test(args):
    null = LeakStats.sample_null_mcc(args.n_test, args.k, args.iters, args.seed)
    return _document(args, null.to_dict(include_samples = not args.no_samples), {"seed": args.seed}), None

def cmd_probe(args):
    if args.synth_preset:
        if args.seed is None: raise UsageError("--seed is required")
        try: params = SynthBench.SynthParams.from_preset(args.synth_preset, seed = args.seed)
        except KeyError as e: raise UsageError(str(e))
        outcome = SynthBench.run_random_label_probe(params, args.strategy, args.mode, args.knn_k, args.seed,
                                                    args.iters, alpha = args.alpha)
        result = {"probe": outcome.probe.to_dict(), "null": outcome.null.to_dict(include_samples = False),
                  "test_size": len(outcome.plan.test_ids), "params": params.to_dict()}
        return _document(args, result, {"seed": args.seed}), None
    if args.observed is None: raise UsageError("--observed (or --synth-preset) is required")
    if args.null:
        null = _parse_document(args.null, _null_from, "null distribution")
        seeds = {"null_seed": null.seed}
    else:
        if args.n_test is None or args.k is None or args.seed is None:
            raise UsageError("without --null, --n-test, --k and --seed are required")
        null = LeakStats.sample_null_mcc(args.n_test, args.k, args.iters, args.seed)
        seeds = {"seed": args.seed}
    if not 0 < args.alpha < 1: raise UsageError("--alpha must be in (0, 1)")
    report = LeakStats.leakage_probe(args.observed, null, args.alpha, args.mode)
    return _document(args, {"probe": report.to_dict(), "null": null.to_dict(include_samples = False)}, seeds), None

def _synth_params(args)-> SynthBench.SynthParams:
    overrides = {name: getattr(args, name) for name in ("k_classes","volumes_per_class","slices_per_volume","width","height",
                                                         "class_signal","volume_signal","slice_noise","slice_drift")}
    try: return SynthBench.SynthParams.from_preset(args.preset, seed = args.seed, **overrides)
    except KeyError as e: raise UsageError(str(e))
    except ValueError as e: raise UsageError(str(e))

def cmd_synth(args):
    params = _synth_params(args)
    manifest = SynthBench.generate_synth(params, args.out_dir, with_hashes = args.hash)
    result = {"params": params.to_dict(), "images": len(manifest), "manifest": str(args.out_dir / "manifest.jsonl")}
    return _document(args, result, {"seed": args.seed}), None

def cmd_experiment(args):
    params = _synth_params(args)
    report = SynthBench.run_inflation_experiment(params, args.cv_k, args.repeats, args.knn_k, args.seed, args.predictions_dir)
    return _document(args, report.to_dict(), {"seed": args.seed, "corpus_seed": params.seed}), None

def cmd_report(args):
    text, tables = _parse_document(args.document, render_report, "result")
    if args.xlsx:
        try: Workbooks.write_tables(args.xlsx, tables)
        except OSError as e: raise IoFailure(f"Could not write {args.xlsx}: {e}", path = str(args.xlsx))
    return text, None

Table = tuple[str, list[str], list[list]]

def _meanstd(values)-> str:
    if values is None: return "n/a"
    mean, std = values
    return f"{mean:.3f}±{std:.3f}"

def _texttable(headers: list[str], rows: list[list])-> str:
    cells = [[str(value) for value in row] for row in [headers] + rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = [" | ".join(value.ljust(width) for value, width in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "-+-".join("-" * width for width in widths))
    return "\n".join(lines)

COMPARISON = [("mcc","MCC [-1,1]"),("auc","AUC [0,1]"),("f1","F1-score [0,1]"),("accuracy","Accuracy [0,1]"),
              ("precision","Precision [0,1]"),("recall","Recall [0,1]")]
STRATEGYNAMES = {"per_image": "per-image", "per_group": "per-volume/subject"}

def _scalars(data: dict, prefix: str = "")-> list[list]:
    """ Flattens the scalar leaves of a result into (key, value) rows """
    rows = []
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict): rows.extend(_scalars(value, name + "."))
        elif isinstance(value, list): rows.append([name, f"{len(value)} items"])
        else: rows.append([name, value])
    return rows

def render_report(document: dict)-> tuple[str, list[Table]]:
    """ Renders a splitgate JSON document as text; returns the text and the tables it contains """
    subcommand = document.get("subcommand", "?")
    result = document.get("result", document)
    header = f"{document.get('tool', TOOL)} {document.get('version', '')} {subcommand}".strip()
    seeds = document.get("seeds") or {}
    lines = [header]
    if seeds: lines.append("seeds: " + ", ".join(f"{key}={value}" for key, value in seeds.items()))
    tables: list[Table] = []

    if subcommand == "experiment":
        k, repeats = result["cv"]
        lines.append(f"Split strategy comparison ({k}-fold x {repeats} repeats, knn_k={result['knn_k']}), m±std")
        headers = ["Split strategy"] + [title for _, title in COMPARISON]
        rows = [[STRATEGYNAMES.get(strategy, strategy)] + [_meanstd(summary.get(metric)) for metric, _ in COMPARISON]
                for strategy, summary in result["summary"].items()]
        tables.append(("comparison", headers, rows))
        runs = [[i, a, b] for i, (a, b) in enumerate(zip(result["mcc_per_image"], result["mcc_per_group"]))]
        tables.append(("runs", ["run", "mcc_per_image", "mcc_per_group"], runs))
        lines.append(_texttable(headers, rows))
        lines.append(f"mean_gap (per-image minus per-volume MCC): {result['mean_gap']:.3f}")
    elif subcommand == "evaluate":
        headers = ["class", "precision", "recall", "f1", "accuracy", "auc"]
        aucs = result.get("auc_per_class") or [None] * len(result["per_class"])
        rows = [[entry["class"]] + [f"{entry[name]:.3f}" for name in headers[1:5]] + ["n/a" if auc is None else f"{auc:.3f}"]
                for entry, auc in zip(result["per_class"], aucs)]
        tables.append(("classes", headers, rows))
        lines.append(_texttable(headers, rows))
        lines.append(f"MCC {result['mcc']:.3f}  overall accuracy {result['overall_accuracy']:.3f}  "
                     f"average accuracy {result['average_accuracy']:.3f}  macro F1 {result['macro_f1']:.3f}")
    elif subcommand == "audit-overlap":
        lines.append(f"{result['test_with_shared_group']} of {result['test_total']} test images share a {result['group_key']} "
                     f"with training: fraction {result['fraction']:.4f} ({len(result['shared_groups'])} shared groups, "
                     f"{result['ungrouped']} ungrouped)")
        tables.append(("overlap", ["key", "value"], _scalars({k: v for k, v in result.items()})))
    elif subcommand == "audit-dups":
        lines.append(f"{len(result['exact_pairs'])} exact and {len(result['near_pairs'])} near duplicates "
                     f"among {result['compared']} compared pairs (threshold {result['threshold']})")
        rows = [[a, b, "exact", 0, False] for a, b in result["exact_pairs"]]
        rows += [[p["id_a"], p["id_b"], "near", p["hamming"], p["flipped"]] for p in result["near_pairs"]]
        headers = ["train_id", "test_id", "kind", "hamming", "flipped"]
        tables.append(("duplicates", headers, rows))
        if rows: lines.append(_texttable(headers, rows))
    elif subcommand == "probe":
        probe = result["probe"]
        lines.append(f"observed MCC {probe['observed_mcc']:.4f}: Wilcoxon p={probe['wilcoxon_p']:.4g}, "
                     f"empirical p={probe['empirical_p']:.4g} at alpha {probe['alpha']} -> "
                     f"{'LEAKAGE SUSPECTED' if probe['flagged'] else 'not flagged'} ({probe['mode']})")
        tables.append(("probe", ["key", "value"], _scalars(probe)))
    else:
        rows = _scalars(result)
        tables.append((subcommand or "result", ["key", "value"], rows))
        lines.append(_texttable(["key", "value"], rows))
    return "\n".join(lines) + "\n", tables

def _emit(text: str, out: pathlib.Path|None):
    if out is None:
        sys.stdout.write(text)
    else:
        try: pathlib.Path(out).write_text(text, encoding = "utf-8")
        except OSError as e: raise IoFailure(f"Could not write {out}: {e}", path = str(out))

def main(argv: typing.Sequence[str]|None = None)-> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(str(e))
        return 2
    except SystemExit as e:
        ## --help and --version
        return int(e.code or 0)

    logging.basicConfig(level = logging.DEBUG if args.verbose else logging.WARNING, stream = sys.stderr,
                        format = "%(levelname)s %(name)s: %(message)s")
    try:
        output, error = args.handler(args)
        if isinstance(output, dict):
            output = dumps(output, indent = 2, ensure_ascii = False) + "\n"
        _emit(output, args.out)
        if error is not None: raise error
    except UsageError as e:
        sys.stderr.write(f"{parser.prog} {args.subcommand}: error: {e}\n")
        return 2
    except SplitgateError as e:
        sys.stderr.write(json.dumps(e.to_dict()) + "\n")
        logger.debug("domain error", exc_info = True)
        return 1
    except ValueError as e:
        ## flag values rejected by a constructor (SplitConfig, SynthParams, ...)
        sys.stderr.write(f"{parser.prog} {args.subcommand}: error: {e}\n")
        return 2
    return 0

if __name__ == "__main__":
    sys.exit(main())
