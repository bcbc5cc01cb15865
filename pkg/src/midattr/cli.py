"""Command-line front end.

Exit codes: 0 success, 1 runtime error, 2 usage error. Runtime errors are
reported on stderr as one JSON object ``{"error": <type>, "message": <text>}``.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import io
from .barycenter import EXACT, HARD, MAX_LP_VARS, PRUNE_EPS, candidate_count, gmm_barycenter
from .core import AttributeSpace, InterpolationWeights, MIXTURE_WEIGHT_TOL
from .errors import DimensionMismatch, DuplicateLabel, MidAttrError, UnknownLabel, ValidationError
from .fitting import FitConfig, LabeledEmbeddings, fit_space, make_synthetic_space
from .sampling import SamplerConfig, sample
from .wasserstein import w2_squared

SOURCE_MODE = "source"
_SELECTOR = re.compile(r"^(?P<label>.+)\.(?P<k>\d+)$")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {value}")
    return value


def _seed(text: str) -> int:
    value = _nonneg_int(text)
    if value >= 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text!r}")
    return value


def parse_lambda(text: str) -> list[tuple[str, float]]:
    """Parse ``label=weight,label=weight`` into ordered pairs."""
    pairs = []
    for item in text.split(","):
        label, sep, value = item.strip().rpartition("=")
        if not sep or not label:
            raise argparse.ArgumentTypeError(f"malformed lambda entry {item!r}; expected label=weight")
        try:
            weight = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"malformed weight in {item!r}") from None
        if label in (lab for lab, _ in pairs):
            raise argparse.ArgumentTypeError(f"label {label!r} given twice")
        pairs.append((label, weight))
    return pairs


def _selector(text: str) -> tuple[str, int]:
    m = _SELECTOR.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"malformed selector {text!r}; expected label.component")
    return m["label"], int(m["k"])


def _points_out(out: Path) -> Path:
    return out.with_name(out.stem + ".points.csv")


def _report_out(out: Path) -> Path:
    return out.with_name(out.stem + ".report.json")


def cmd_synth(args) -> int:
    space, datasets = make_synthetic_space(args.dim, args.attrs, args.mixtures, args.points, args.seed)
    out = Path(args.out)
    points_out = Path(args.points_out) if args.points_out else _points_out(out)
    io.save_space(space, out, {lab: {"mode": SOURCE_MODE, "lambda": {lab: 1.0}} for lab in space})
    metas, rows = [], []
    for data in datasets:
        lam = io.format_lambda([data.label], [1.0])
        metas += [io.SampleMeta(data.label, SOURCE_MODE, lam, int(k)) for k in data.components]
        rows.append(data.points)
    io.export_samples(np.vstack(rows), metas, points_out)
    print(f"wrote {out} and {points_out}")
    return 0


def cmd_fit(args) -> int:
    metas, values = io.read_samples(args.points)
    order: dict[str, list[int]] = {}
    for i, meta in enumerate(metas):
        order.setdefault(meta.attribute, []).append(i)
    if not order:
        raise ValidationError(f"{args.points}: no points to fit")
    datasets = [LabeledEmbeddings(label, values[idx]) for label, idx in order.items()]
    config = FitConfig(K=args.mixtures, max_iters=args.max_iters, tol=args.tol, seed=args.seed)
    space = fit_space(datasets, config)
    io.save_space(space, args.out, {lab: {"mode": "fit", "lambda": {lab: 1.0}} for lab in space})
    print(f"wrote {args.out}")
    return 0


def _resolve_lambda(space: AttributeSpace, pairs) -> tuple[list[str], InterpolationWeights]:
    labels = [lab for lab, _ in pairs]
    for lab in labels:
        if lab not in space:
            raise UnknownLabel(f"unknown attribute label {lab!r}; file has {space.labels}")
    raw = np.array([w for _, w in pairs])
    # checked at the looser file tolerance, then renormalized exactly
    weights = InterpolationWeights(raw, tol=MIXTURE_WEIGHT_TOL)
    return labels, weights


def default_mode(space: AttributeSpace, max_lp_vars: int = MAX_LP_VARS) -> str:
    n_vars = sum(m.n_components for m in space.values()) * candidate_count(space)
    return EXACT if n_vars <= max_lp_vars else HARD


def derived_label(labels, weights: InterpolationWeights) -> str:
    return "mid[" + ",".join(f"{lab}={w:g}" for lab, w in zip(labels, weights.values)) + "]"


def cmd_barycenter(args) -> int:
    space = io.load_space(args.model)
    labels, lam = _resolve_lambda(space, args.lam)
    sub = space.subset(labels)
    mode = args.mode or default_mode(sub)
    result = gmm_barycenter(sub, lam, mode=mode, prune_eps=args.prune_eps)
    label = args.label or derived_label(labels, lam)
    origin = {"mode": mode, "lambda": dict(zip(labels, lam.values.tolist()))}
    out = Path(args.out)
    io.save_space(AttributeSpace([(label, result.mixture)]), out, {label: origin})
    report = io.report_to_dict(result, labels)
    report["label"] = label
    report_path = Path(args.report) if args.report else _report_out(out)
    io.write_json(report, report_path)
    print(f"wrote {out} ({result.mixture.n_components} components, mode={mode}, "
          f"objective={result.objective!r}) and {report_path}")
    return 0


def _sample_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


def cmd_sample(args) -> int:
    entries = []
    origins = {}
    dims = set()
    for path in args.model:
        space, orig = io.load_space_with_origins(path)
        for lab, mix in space.items():
            if lab in origins:
                raise DuplicateLabel(f"label {lab!r} appears in more than one model file")
            origins[lab] = orig.get(lab)
            entries.append((lab, mix))
            dims.add(mix.dim)
    if len(dims) > 1:
        raise DimensionMismatch(f"model files have differing dimensions {sorted(dims)}")
    space = AttributeSpace(entries)
    labels = args.label or space.labels
    for lab in labels:
        space[lab]  # raises UnknownLabel

    dim = next(iter(dims))
    metas, rows = [], []
    for i, lab in enumerate(labels):
        if args.n == 0:
            break
        origin = origins.get(lab) or {}
        mode = origin.get("mode", SOURCE_MODE)
        lam = origin.get("lambda", {lab: 1.0})
        lam_text = io.format_lambda(list(lam), list(lam.values()))
        values, comps = sample(space[lab], SamplerConfig(_sample_seed(args.seed, i), args.n),
                               return_components=True)
        metas += [io.SampleMeta(lab, mode, lam_text, int(k)) for k in comps]
        rows.append(values)
    values = np.vstack(rows) if rows else np.zeros((0, dim))
    io.export_samples(values, metas, args.out, dim=dim)
    print(f"wrote {len(metas)} samples to {args.out}")
    return 0


def cmd_w2(args) -> int:
    space = io.load_space(args.model)
    gaussians = []
    for label, k in (args.first, args.second):
        mix = space[label]
        if k >= mix.n_components:
            raise ValidationError(f"{label!r} has {mix.n_components} components; index {k} out of range")
        gaussians.append(mix.component(k))
    print(repr(w2_squared(*gaussians)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="midattr",
        description="Wasserstein barycenters of attribute-conditioned Gaussian mixtures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic attribute space and labeled points")
    p.add_argument("--dim", type=_positive_int, required=True)
    p.add_argument("--attrs", type=_positive_int, required=True)
    p.add_argument("--mixtures", type=_positive_int, required=True)
    p.add_argument("--points", type=_positive_int, required=True, help="points per attribute")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--points-out", help="labeled points CSV (default: <out>.points.csv)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit one mixture per attribute from labeled points")
    p.add_argument("--points", required=True, help="labeled points CSV")
    p.add_argument("--mixtures", type=_positive_int, required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--max-iters", type=_positive_int, default=200)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("barycenter", help="mid-attribute mixture from per-label weights")
    p.add_argument("--model", required=True)
    p.add_argument("--lambda", dest="lam", type=parse_lambda, required=True,
                   metavar="LABEL=W[,LABEL=W...]")
    p.add_argument("--mode", choices=(EXACT, HARD), default=None,
                   help="default: exact when the LP fits under the size cap, else hard")
    p.add_argument("--prune-eps", type=_nonneg_float, default=PRUNE_EPS)
    p.add_argument("--label", help="label of the output mixture")
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="report JSON (default: <out>.report.json)")
    p.set_defaults(func=cmd_barycenter)

    p = sub.add_parser("sample", help="draw samples into a CSV")
    p.add_argument("--model", action="append", required=True, help="model file (repeatable)")
    p.add_argument("--label", action="append", help="attribute to sample (repeatable; default all)")
    p.add_argument("-n", "--count", dest="n", type=_nonneg_int, required=True,
                   help="samples per attribute")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("w2", help="squared W2 between two mixture components")
    p.add_argument("--model", required=True)
    p.add_argument("first", type=_selector, metavar="LABEL.K")
    p.add_argument("second", type=_selector, metavar="LABEL.K")
    p.set_defaults(func=cmd_w2)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (MidAttrError, OSError, ValueError) as exc:
        name = type(exc).__name__
        if isinstance(exc, OSError):
            name = "IoError"
        print(json.dumps({"error": name, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
