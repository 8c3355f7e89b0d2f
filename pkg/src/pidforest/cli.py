"""Command-line entry point: ``pidforest <command> ...``.

Every failure prints one JSON line on stderr, for example
``{"error": "schema_mismatch", "exit": 4, "message": "..."}``, and exits
with the code listed in ``pidforest --help``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from pidforest import oracle
from pidforest.baseline import iforest_fit
from pidforest.core import Kind, ModelFormatError, SchemaError
from pidforest.data import (
    ColumnSchema,
    DataError,
    Schema,
    gen_gaussian_mixture,
    gen_masking,
    gen_sine_anomalies,
    load_csv,
    read_table,
    shingle,
    write_csv,
)
from pidforest.forest import HyperParams, deserialize, fit, serialize
from pidforest.metrics import auc, roc_points, top_fraction_accuracy, write_roc_csv

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_SCHEMA = 4
EXIT_DATA = 5
EXIT_MODEL = 6

EXIT_CODES_HELP = """\
exit codes:
  0  success
  1  unexpected internal error
  2  usage error (unknown flag, bad value)
  3  input file missing or unreadable
  4  schema mismatch between model and input
  5  malformed or unusable data
  6  malformed or unsupported model document

errors are reported as a single JSON line on stderr:
  {"error": "<kind>", "exit": <code>, "message": "<text>"}
"""

_KINDS = {
    EXIT_INTERNAL: "internal",
    EXIT_USAGE: "usage",
    EXIT_MISSING_FILE: "missing_file",
    EXIT_SCHEMA: "schema_mismatch",
    EXIT_DATA: "data",
    EXIT_MODEL: "model_format",
}


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would print usage and exit 2
        raise CliError(EXIT_USAGE, message)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def _open_out(path: str | None):
    if path is None or path == "-":
        return _Borrowed(sys.stdout)
    return open(path, "w", newline="")


class _Borrowed:
    """Context manager that leaves a stream open."""

    def __init__(self, stream):
        self.stream = stream

    def __enter__(self):
        return self.stream

    def __exit__(self, *exc):
        self.stream.flush()
        return False


def _read_text(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _header(path: str) -> list[str]:
    with open(path, newline="") as fh:
        return [h.strip() for h in next(csv.reader(fh), [])]


def _schema_of_model(forest) -> Schema:
    cols = []
    for c in forest.columns:
        cols.append(ColumnSchema(c.name, c.kind, c.domain_size, c.categories))
    return Schema(tuple(cols))


def _load_points(path: str, forest) -> np.ndarray:
    schema = _schema_of_model(forest)
    header = _header(path)
    missing = [c.name for c in schema.columns if c.name not in header]
    if missing:
        raise SchemaError(f"input lacks model columns {missing}")
    values, _ = read_table(path, schema)
    return values


def _column(path: str, names: Sequence[str]) -> tuple[str, np.ndarray]:
    header = _header(path)
    name = next((n for n in names if n in header), None)
    if name is None:
        raise DataError(f"{path}: none of the columns {list(names)} present")
    values, _ = read_table(path, Schema.continuous([name]))
    return name, values[:, 0]


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_fit(args) -> int:
    schema = Schema.load(args.schema) if args.schema else None
    dataset = load_csv(args.input, schema)
    params = HyperParams(
        num_trees=args.trees,
        samples_per_tree=args.samples,
        max_degree=args.degree,
        max_depth=args.depth,
        seed=args.seed,
        eps=args.eps,
        solver=args.solver,
    )
    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    forest = fit(dataset, params, n_jobs=threads)
    text = serialize(forest)
    with _open_out(args.out) as fh:
        fh.write(text)
        fh.write("\n")
    return EXIT_OK


def _range_cells(entry) -> tuple[str, str, str]:
    if "categories" in entry:
        return entry["feature"], "|".join(str(c) for c in entry["categories"]), ""
    return entry["feature"], _fmt(entry["lo"]), _fmt(entry["hi"])


def _json_safe(entry: dict) -> dict:
    out = {}
    for key, v in entry.items():
        out[key] = None if isinstance(v, float) and math.isinf(v) else v
    return out


def cmd_score(args) -> int:
    forest = deserialize(_read_text(args.model))
    points = _load_points(args.input, forest)
    report = forest.score(points, score_by=args.score_by)
    top = args.top
    with _open_out(args.out) as fh:
        if args.format == "jsonl":
            for i in range(len(report)):
                rec = {
                    "row_id": i,
                    "score": float(report.scores[i]),
                    "tree": int(report.tree_index[i]),
                    "witness": [_json_safe(e) for e in report.witness_ranges(i, top)],
                }
                fh.write(json.dumps(rec, sort_keys=True, allow_nan=False) + "\n")
            return EXIT_OK
        writer = csv.writer(fh, lineterminator="\n")
        head = ["row_id", "score"]
        for r in range(1, top + 1):
            head += [f"witness_{r}_feature", f"witness_{r}_lo", f"witness_{r}_hi"]
        writer.writerow(head)
        for i in range(len(report)):
            row = [str(i), _fmt(report.scores[i])]
            entries = report.witness_ranges(i, top)
            for e in entries:
                row.extend(_range_cells(e))
            row.extend([""] * (3 * (top - len(entries))))
            writer.writerow(row)
    return EXIT_OK


def cmd_eval(args) -> int:
    _, scores = _column(args.scores, [args.score_column])
    _, labels = _column(args.labels, [args.label_column] if args.label_column else ["anomaly", "label"])
    if len(scores) != len(labels):
        raise DataError(f"{len(scores)} scores but {len(labels)} labels")
    if not np.isin(labels, (0.0, 1.0)).all():
        raise DataError("labels must be 0 or 1")
    if args.metric == "auc":
        value = auc(scores, labels)
        print(f"auc {_fmt(value)}")
    else:
        value = top_fraction_accuracy(scores, labels, args.fraction)
        print(f"topfrac {_fmt(args.fraction)} {_fmt(value)}")
    if args.roc_out:
        write_roc_csv(roc_points(scores, labels), args.roc_out)
    return EXIT_OK


def _write_meta(out: str, meta: dict) -> None:
    path = Path(out).with_suffix(".meta.json")
    path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def cmd_synth(args) -> int:
    if args.generator == "masking":
        syn = gen_masking(seed=args.seed)
        ds, meta = syn.dataset, syn.metadata
        write_csv(args.out, ds.values, ds.names, ds.labels)
    elif args.generator == "gaussian":
        lo, hi = args.noise_range
        if not lo < hi:
            raise CliError(EXIT_USAGE, "--noise-range needs LO < HI")
        syn = gen_gaussian_mixture(args.d_noise, (lo, hi), seed=args.seed)
        ds, meta = syn.dataset, syn.metadata
        write_csv(args.out, ds.values, ds.names, ds.labels)
    else:
        series = gen_sine_anomalies(seed=args.seed, length=args.length, sigma=args.sigma)
        meta = dict(series.metadata)
        if args.shingle:
            ds = shingle(series.values, args.shingle, series.labels)
            meta["shingle"] = args.shingle
            write_csv(args.out, ds.values, ds.names, ds.labels)
        else:
            write_csv(args.out, series.values[:, None], ["value"], series.labels)
    _write_meta(args.out, meta)
    return EXIT_OK


def _numeric_table(path: str) -> tuple[list[str], np.ndarray]:
    header = _header(path)
    names = [h for h in header if h not in ("label", "anomaly")]
    if not names:
        raise DataError(f"{path}: no data columns")
    values, _ = read_table(path, Schema.continuous(names))
    return names, values


def cmd_oracle(args) -> int:
    names, values = _numeric_table(args.input)
    with _open_out(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if args.kind == "pid1d":
            if values.shape[1] != 1:
                raise DataError("pid1d expects exactly one data column")
            writer.writerow(["row_id", "log2_score", "lo", "hi"])
            for i, (s, iv) in enumerate(oracle.pidscore_1d(values[:, 0])):
                writer.writerow([i, _fmt(s), _fmt(iv.lo), _fmt(iv.hi)])
        elif args.kind == "boolean":
            writer.writerow(["row_id", "pid_length", "id_length", "coordinates", "max_sparsity"])
            distinct = len(np.unique(values, axis=0)) == len(values)
            for i, x in enumerate(values):
                pid, coords = oracle.pid_length_boolean(x, values)
                idl = str(oracle.id_length(x, values)) if distinct else ""
                sp = oracle.max_boolean_subcube_sparsity(x, values)
                writer.writerow([i, _fmt(pid), idl, ";".join(names[j] for j in coords), str(sp)])
        else:
            head = ["row_id", "log2_score"]
            for n in names:
                head += [f"{n}_lo", f"{n}_hi"]
            writer.writerow(head)
            for i, x in enumerate(values):
                s, cube = oracle.pidscore_bruteforce(x, values)
                row = [str(i), _fmt(s)]
                for iv in cube.intervals:
                    row += [_fmt(iv.lo), _fmt(iv.hi)]
                writer.writerow(row)
    return EXIT_OK


def cmd_baseline(args) -> int:
    dataset = load_csv(args.input, Schema.load(args.schema) if args.schema else None)
    if any(c.kind is not Kind.CONTINUOUS for c in dataset.columns):
        raise DataError("the isolation forest baseline takes continuous columns only")
    model = iforest_fit(dataset, t=args.trees, m=args.samples, seed=args.seed)
    scores = model.score(dataset)
    with _open_out(args.out) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row_id", "score"])
        for i, s in enumerate(scores):
            writer.writerow([i, _fmt(s)])
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="pidforest",
        description="Sparsity-forest anomaly detection with exact oracles and an isolation forest baseline.",
        epilog=EXIT_CODES_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", help="fit a forest and write the model document")
    f.add_argument("--input", required=True, help="CSV with a header row")
    f.add_argument("--schema", help="JSON column schema; default: all non-label columns continuous")
    f.add_argument("--trees", type=_positive, default=50)
    f.add_argument("--samples", type=int, default=100)
    f.add_argument("--degree", type=int, default=3)
    f.add_argument("--depth", type=_positive, default=10)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--eps", type=float, default=0.1, help="histogram approximation slack")
    f.add_argument("--solver", choices=["approx", "dp"], default="approx")
    f.add_argument("--threads", type=_positive, help="fitting threads (default: all cores; output is the same)")
    f.add_argument("--out", help="model path (default: stdout)")
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("score", help="score rows with a fitted model")
    s.add_argument("--model", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--out", help="default: stdout")
    s.add_argument("--score-by", choices=["sparsity", "depth"], default="sparsity")
    s.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    s.add_argument("--top", type=int, default=3, help="witness coordinates to report per row")
    s.set_defaults(func=cmd_score)

    e = sub.add_parser("eval", help="AUC or top-fraction accuracy of a score file")
    e.add_argument("--scores", required=True)
    e.add_argument("--labels", required=True, help="CSV with an 'anomaly' or 'label' column")
    e.add_argument("--metric", choices=["auc", "topfrac"], default="auc")
    e.add_argument("--fraction", type=float, default=0.05)
    e.add_argument("--score-column", default="score")
    e.add_argument("--label-column")
    e.add_argument("--roc-out", help="also write ROC vertices to this CSV")
    e.set_defaults(func=cmd_eval)

    g = sub.add_parser("synth", help="write a synthetic benchmark (plus a .meta.json sidecar)")
    g.add_argument("generator", choices=["masking", "gaussian", "sine"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--d-noise", type=int, default=0, help="gaussian: uniform noise coordinates")
    g.add_argument("--noise-range", type=float, nargs=2, default=(-2.0, 2.0), metavar=("LO", "HI"))
    g.add_argument("--length", type=_positive, default=4000, help="sine: series length")
    g.add_argument("--sigma", type=float, default=0.05, help="sine: noise standard deviation")
    g.add_argument("--shingle", type=int, default=0, help="sine: emit windows of this width")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_synth)

    o = sub.add_parser("oracle", help="exact scores by enumeration (small inputs in [0, 1])")
    o.add_argument("kind", choices=["pid1d", "boolean", "subcube"])
    o.add_argument("--input", required=True)
    o.add_argument("--out", help="default: stdout")
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("baseline", help="isolation forest scores for comparison")
    b.add_argument("method", choices=["iforest"])
    b.add_argument("--input", required=True)
    b.add_argument("--schema")
    b.add_argument("--trees", type=_positive, default=100)
    b.add_argument("--samples", type=_positive, default=256)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", help="default: stdout")
    b.set_defaults(func=cmd_baseline)
    return p


def _report(code: int, message: str) -> int:
    line = json.dumps({"error": _KINDS[code], "exit": code, "message": message})
    print(line, file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        return _report(exc.code, str(exc))
    except BrokenPipeError:
        # downstream reader closed early (e.g. `| head`); not an error
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        return _report(EXIT_MISSING_FILE, f"{exc.strerror}: {exc.filename}")
    except SchemaError as exc:
        return _report(EXIT_SCHEMA, str(exc))
    except ModelFormatError as exc:
        return _report(EXIT_MODEL, str(exc))
    except (DataError, ValueError) as exc:
        return _report(EXIT_DATA, str(exc))
    except Exception as exc:  # pragma: no cover - last resort
        return _report(EXIT_INTERNAL, f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
