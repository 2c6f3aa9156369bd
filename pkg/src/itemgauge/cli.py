"""Command-line interface wiring the library end to end.

Subcommands: describe, correlate, fit, select, predict, evaluate, diagnose,
synth, serve. Exit codes: 0 success, 1 usage error, 2 data/validation error,
3 numerical failure (non-convergence, singularity). Results go to stdout,
diagnostics to stderr.

Output is byte-stable for identical invocations: tables and CSV use fixed
4-decimal floats (p-values in 4-decimal scientific form), JSON uses the
canonical 17-significant-digit encoder. Every subcommand that produces a
result has a `--format json` mode whose output round-trips through the
matching `*_from_dict` deserializer.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .assoc import MATRIX_VARIABLES, correlation_matrix, matrix_to_dict
from .errors import DataError, NumericalError
from .evaluation import accuracy, confusion, confusion_by_course, evaluation_to_dict
from .items import (
    DEFAULT_MARGINALS,
    LEVEL_NAMES,
    VARIABLE_NAMES,
    Dataset,
    dataset_to_dict,
    describe,
    describe_to_dict,
    generate_synthetic,
    parse_dataset,
    serialize_dataset,
    variable_spec,
)
from .jsonfmt import dumps
from .polr import (
    K_CONVENTIONS,
    FittedModel,
    classify_probs,
    coefficient_table,
    deserialize_model,
    fit,
    predict_probs,
    predictions_to_dict,
    serialize_model,
)
from .selection import (
    diagnostics_to_dict,
    evaluate_subsets,
    lr_test,
    stepwise_select,
    subsets_to_dict,
    trace_to_dict,
    vif,
)

USAGE_EXIT = 1
DATA_EXIT = 2
NUMERIC_EXIT = 3


class _ArgumentParser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; 2 is reserved for data
    # errors here, so remap to 1.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _k_convention(text: str) -> str:
    normalized = text.replace("-", "_")
    if normalized not in K_CONVENTIONS:
        raise argparse.ArgumentTypeError(
            f"expected one of all-params, slopes-only, got {text!r}"
        )
    return normalized


def _variable_list(text: str) -> tuple[str, ...]:
    names = tuple(part.strip() for part in text.split(","))
    if any(not name for name in names):
        raise argparse.ArgumentTypeError(f"empty variable name in {text!r}")
    return names


def _nonnegative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_dataset(path: str) -> Dataset:
    return parse_dataset(_read_text(path))


def _load_model(path: str) -> FittedModel:
    return deserialize_model(_read_text(path))


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _fmt_p(p: float) -> str:
    return f"{p:.4e}"


def _render_rows(rows: list[list[str]], right_from: int = 1) -> str:
    """Align columns: the first `right_from` columns left, the rest right."""
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for row in rows:
        cells = []
        for i, cell in enumerate(row):
            cells.append(cell.ljust(widths[i]) if i < right_from else cell.rjust(widths[i]))
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def _cmd_describe(args) -> int:
    data = _load_dataset(args.data)
    report = describe(data)
    if args.format == "json":
        sys.stdout.write(dumps(describe_to_dict(report)))
        return 0
    out = [f"items: {len(data)}  labeled: {'yes' if data.labeled else 'no'}\n\n"]
    rows = [["variable", "mean", "sd"]]
    for name, summary in report.numeric.items():
        rows.append([name, _fmt(summary.mean), _fmt(summary.sd)])
    out.append(_render_rows(rows))
    out.append("\n")
    rows = [["variable", "category", "share"]]
    for name, shares in report.ordinal.items():
        if name == "D":
            for label, share in shares.items():
                rows.append([name, str(label), _fmt(share)])
            continue
        spec = variable_spec(name)
        for code, share in shares.items():
            rows.append([name, f"{code}={spec.labels[code]}", _fmt(share)])
    out.append(_render_rows(rows, right_from=2))
    sys.stdout.write("".join(out))
    return 0


def _cmd_correlate(args) -> int:
    data = _load_dataset(args.data)
    matrix = correlation_matrix(data)
    if args.format == "json":
        sys.stdout.write(dumps(matrix_to_dict(matrix)))
        return 0
    names = matrix.variables
    lines = ["variable," + ",".join(names)]
    for i, row_name in enumerate(names):
        cells = [row_name]
        for j in range(len(names)):
            if j > i:
                cells.append("")
            else:
                entry = matrix.entry(row_name, names[j])
                cells.append(_fmt(entry.rho) + entry.stars)
        lines.append(",".join(cells))
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def _require_converged(model: FittedModel) -> FittedModel:
    if not model.converged:
        raise NumericalError(
            "fit did not converge; loosen --tol or raise --max-iter"
        )
    return model


def _cmd_fit(args) -> int:
    data = _load_dataset(args.data)
    model = _require_converged(
        fit(data, args.vars, k_convention=args.k, tol=args.tol, max_iter=args.max_iter)
    )
    if args.format == "json":
        sys.stdout.write(serialize_model(model))
        return 0
    out = [
        f"n: {model.n_train}  converged: yes  k_convention: {model.k_convention}\n\n"
    ]
    rows = [["term", "estimate", "odds_ratio", "std_error", "z", "p"]]
    for w in coefficient_table(model):
        rows.append([
            w.term, _fmt(w.estimate), _fmt(w.odds_ratio), _fmt(w.std_error),
            _fmt(w.z), _fmt_p(w.p_value),
        ])
    out.append(_render_rows(rows))
    out.append(
        f"\ndeviance: {_fmt(model.deviance)}  aic: {_fmt(model.aic)}"
        f"  bic: {_fmt(model.bic)}  mcfadden: {_fmt(model.mcfadden)}\n"
    )
    sys.stdout.write("".join(out))
    return 0


def _select_rows(entries) -> str:
    lines = ["model,variables,aic,bic,deviance"]
    for index, variables, aic, bic, deviance in entries:
        lines.append(
            f"{index},{'+'.join(variables)},{_fmt(aic)},{_fmt(bic)},{_fmt(deviance)}"
        )
    return "\n".join(lines) + "\n"


def _cmd_select(args) -> int:
    data = _load_dataset(args.data)
    if args.subsets is not None:
        try:
            payload = json.loads(_read_text(args.subsets))
        except json.JSONDecodeError as exc:
            raise DataError(f"bad subsets file {args.subsets}: {exc}") from None
        if not isinstance(payload, list) or not all(
            isinstance(s, list) and all(isinstance(v, str) for v in s) for s in payload
        ):
            raise DataError(
                f"bad subsets file {args.subsets}: expected a JSON array of name arrays"
            )
        scores = evaluate_subsets(data, payload, k_convention=args.k, threads=args.threads)
        if args.format == "json":
            sys.stdout.write(dumps(subsets_to_dict(scores)))
            return 0
        sys.stdout.write(_select_rows(
            (s.index, s.variables, s.aic, s.bic, s.deviance) for s in scores
        ))
        return 0
    if args.candidates is None:
        raise DataError("select needs --candidates (or --subsets FILE)")
    trace = stepwise_select(
        data,
        args.candidates,
        criterion=args.criterion,
        direction=args.direction,
        k_convention=args.k,
        threads=args.threads,
    )
    if args.format == "json":
        sys.stdout.write(dumps(trace_to_dict(trace)))
        return 0
    sys.stdout.write(_select_rows(
        (i, step.variables, step.aic, step.bic, step.deviance)
        for i, step in enumerate(trace.steps, start=1)
    ))
    return 0


def _cmd_predict(args) -> int:
    model = _load_model(args.model)
    data = _load_dataset(args.items)
    rows = []
    for item in data.items:
        probs = predict_probs(model, item)
        rows.append((item.item_id, probs, classify_probs(probs)))
    if args.format == "json":
        sys.stdout.write(dumps(predictions_to_dict(model, rows)))
        return 0
    table = [["item_id", "p_low", "p_moderate", "p_high", "level"]]
    for item_id, probs, level in rows:
        table.append([
            item_id, _fmt(probs.p_low), _fmt(probs.p_moderate),
            _fmt(probs.p_high), level.label,
        ])
    if args.format == "table":
        sys.stdout.write(_render_rows(table))
    else:
        sys.stdout.write("\n".join(",".join(row) for row in table) + "\n")
    return 0


def _cmd_evaluate(args) -> int:
    model = _load_model(args.model)
    data = _load_dataset(args.items)
    if args.by_course:
        matrices = confusion_by_course(model, data)
    else:
        matrices = (confusion(model, data),)
    if args.format == "json":
        sys.stdout.write(dumps(evaluation_to_dict(matrices)))
        return 0
    out = []
    for m in matrices:
        out.append(f"course: {m.course if m.course is not None else '(all)'}\n")
        rows = [["actual", *LEVEL_NAMES]]
        for i, label in enumerate(LEVEL_NAMES):
            rows.append([label, *(str(c) for c in m.counts[i])])
        out.append(_render_rows(rows))
        out.append(f"accuracy: {_fmt(accuracy(m))}\n\n")
    if len(matrices) > 1:
        mean = sum(accuracy(m) for m in matrices) / len(matrices)
        out.append(f"mean accuracy: {_fmt(mean)}\n")
    sys.stdout.write("".join(out).rstrip("\n") + "\n")
    return 0


def _cmd_diagnose(args) -> int:
    model = _load_model(args.model)
    data = _load_dataset(args.data)
    reduced = _require_converged(
        fit(data, model.variables, k_convention=model.k_convention)
    )
    full = _require_converged(
        fit(data, VARIABLE_NAMES, k_convention=model.k_convention)
    )
    lr = lr_test(reduced, full, data)
    report = vif(data, model.variables)
    if args.format == "json":
        sys.stdout.write(dumps(diagnostics_to_dict(
            report, lr, reduced.mcfadden, model.variables, VARIABLE_NAMES
        )))
        return 0
    out = [f"variables: {','.join(model.variables)}\n\n"]
    rows = [["variable", "vif", "flagged"]]
    for r in report.rows:
        rows.append([r.variable, _fmt(r.vif), "yes" if r.flagged else ""])
    out.append(_render_rows(rows))
    out.append(
        f"\nlr vs full ({len(VARIABLE_NAMES)} variables):"
        f" statistic {_fmt(lr.lr_statistic)}  df {lr.df}  p {_fmt_p(lr.p_value)}\n"
    )
    out.append(f"mcfadden: {_fmt(reduced.mcfadden)}\n")
    sys.stdout.write("".join(out))
    return 0


def _cmd_synth(args) -> int:
    model = _load_model(args.model) if args.model else None
    data = generate_synthetic(DEFAULT_MARGINALS, model, args.n, args.seed)
    if args.format == "json":
        sys.stdout.write(dumps(dataset_to_dict(data)))
        return 0
    sys.stdout.write(serialize_dataset(data))
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    model = _load_model(args.model)
    ui_dir = args.ui_dir
    if ui_dir is None and os.path.isdir(os.path.join("frontend", "dist")):
        ui_dir = os.path.join("frontend", "dist")
    app = create_app(model, ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="itemgauge",
        description="Estimate and serve assessment-item difficulty models.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True,
                                parser_class=_ArgumentParser)

    p = sub.add_parser(
        "describe", help="summary statistics of a dataset",
    )
    p.add_argument("data", help="dataset CSV path")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=_cmd_describe)

    p = sub.add_parser(
        "correlate", help="pairwise correlation matrix (lower triangle)",
    )
    p.add_argument("data", help="labeled dataset CSV path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser(
        "fit", help="fit an ordinal difficulty model",
    )
    p.add_argument("data", help="labeled dataset CSV path")
    p.add_argument("--vars", required=True, type=_variable_list,
                   help="comma-separated predictor names")
    p.add_argument("--k", type=_k_convention, default="all_params",
                   help="parameter-count convention: all-params (default) or slopes-only")
    p.add_argument("--tol", type=float, default=1e-6, help="gradient tolerance")
    p.add_argument("--max-iter", type=_positive_int, default=100)
    p.add_argument("--format", choices=("table", "json"), default="table",
                   help="json emits the loadable model document")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser(
        "select", help="stepwise search or explicit subset scoring",
    )
    p.add_argument("data", help="labeled dataset CSV path")
    p.add_argument("--candidates", type=_variable_list,
                   help="comma-separated candidate predictors")
    p.add_argument("--criterion", choices=("aic", "bic"), default="aic")
    p.add_argument("--direction", choices=("forward", "both"), default="forward")
    p.add_argument("--subsets", metavar="FILE",
                   help="score this JSON array of variable-name arrays instead")
    p.add_argument("--k", type=_k_convention, default="all_params")
    p.add_argument("--threads", type=_positive_int, default=1,
                   help="candidate fits per step run on this many threads")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser(
        "predict", help="predict difficulty probabilities for items",
    )
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--items", required=True, help="items CSV path")
    p.add_argument("--format", choices=("csv", "json", "table"), default="csv")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser(
        "evaluate", help="confusion matrices and accuracy on labeled items",
    )
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--items", required=True, help="labeled items CSV path")
    p.add_argument("--by-course", action="store_true",
                   help="one confusion matrix per course tag")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser(
        "diagnose", help="VIF, likelihood-ratio test vs the full model, McFadden",
    )
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--data", required=True, help="labeled dataset CSV path")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser(
        "synth", help="generate a synthetic dataset",
    )
    p.add_argument("--n", required=True, type=_nonnegative_int)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--model", help="model JSON used to sample difficulty labels")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser(
        "serve", help="serve the model over HTTP",
    )
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--port", type=_positive_int, default=8630)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui-dir", help="static UI directory (default: frontend/dist if present)")
    p.set_defaults(func=_cmd_serve)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NUMERIC_EXIT


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
