"""``axisdesc`` command line: extract, match, query, render, gen-corpus.

Exit codes: 0 ok, 1 usage or input error, 2 pipeline failure, 3 unresolved
topology. Scores are printed with three decimals.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import corpus
from .database import DescriptorDatabase
from .descriptor import format_descriptor, read_descriptor
from .errors import AxisDescError, DescriptorFormatError, ManifestMismatchError, MaskError, TopologyError
from .field import write_field
from .grid import load_mask
from .matcher import SimilarityThresholds, match_multi
from .pipeline import ExtractParams, extract

EXIT_OK, EXIT_USAGE, EXIT_PIPELINE, EXIT_TOPOLOGY = 0, 1, 2, 3

# CLI flag -> ExtractParams field; a config file may use either spelling
PARAM_FLAGS = {
    "mode": "mode",
    "rho": "rho",
    "tau-start": "tau_start",
    "tau-growth": "tau_growth",
    "tau-max": "tau_max",
    "target": "target",
    "fg-threshold": "fg_threshold",
    "min-length-fraction": "min_length_fraction",
    "anchor-fraction": "anchor_fraction",
    "center-eps": "center_eps",
    "contrast": "contrast",
    "margin-fraction": "margin_fraction",
    "gap-fraction": "gap_fraction",
    "boundary-band": "boundary_band",
}
THR_FLAGS = {"thr-r": "r_thr", "thr-theta": "theta_thr", "thr-len": "len_thr"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("_", "-")] = v
    return out


def _add_params(p: argparse.ArgumentParser, thresholds: bool = False):
    g = p.add_argument_group("extraction")
    g.add_argument("--config", help="key=value file; flags given here override it")
    g.add_argument("--mode", choices=["screened", "diffusion"])
    g.add_argument("--rho", type=float, help="screening length (screened mode)")
    g.add_argument("--tau-start", type=float)
    g.add_argument("--tau-growth", type=float)
    g.add_argument("--tau-max", type=float)
    g.add_argument("--target", choices=["center", "dumbbell"])
    g.add_argument("--fg-threshold", type=int, help="gray level; darker pixels are foreground")
    g.add_argument("--min-length-fraction", type=float)
    g.add_argument("--anchor-fraction", type=float)
    g.add_argument("--center-eps", type=float)
    g.add_argument("--contrast", type=float)
    g.add_argument("--margin-fraction", type=float)
    g.add_argument("--gap-fraction", type=float)
    g.add_argument("--boundary-band", type=float, help="radians; 0 disables boundary alternatives")
    if thresholds:
        _add_thresholds(p)


def _add_thresholds(p):
    g = p.add_argument_group("matching")
    g.add_argument("--thr-r", type=float)
    g.add_argument("--thr-theta", type=float)
    g.add_argument("--thr-len", type=float)
    g.add_argument("--match-mode", "--variant-mode", dest="match_mode", choices=["invariant", "variant"])


def _settings(args) -> dict[str, str]:
    conf = read_config(args.config) if getattr(args, "config", None) else {}
    for flag in list(PARAM_FLAGS) + list(THR_FLAGS) + ["match-mode"]:
        v = getattr(args, flag.replace("-", "_"), None)
        if v is not None:
            conf[flag] = str(v)
    known = set(PARAM_FLAGS) | set(THR_FLAGS) | {"match-mode"}
    unknown = sorted(set(conf) - known)
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
    return conf


def params_from(args) -> ExtractParams:
    conf = _settings(args)
    items = {PARAM_FLAGS[k]: v for k, v in conf.items() if k in PARAM_FLAGS}
    try:
        return ExtractParams.from_items(items)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def thresholds_from(args) -> tuple[SimilarityThresholds, str]:
    conf = _settings(args)
    kw = {THR_FLAGS[k]: float(v) for k, v in conf.items() if k in THR_FLAGS}
    try:
        thr = SimilarityThresholds(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return thr, conf.get("match-mode", "invariant")


def _extract_file(path, params: ExtractParams):
    mask = load_mask(path, params.fg_threshold)
    return extract(mask, params)


def _desc_set(spec: str):
    """A ``.desc`` file, or a stem whose alternatives are ``stem.<k>.desc``."""
    p = Path(spec)
    if p.is_file():
        return [read_descriptor(p)]
    alts = sorted(p.parent.glob(p.name + ".*.desc"), key=lambda q: int(q.suffixes[-2][1:]))
    if not alts:
        raise UsageError(f"{spec}: no descriptor file or alternatives found")
    return [read_descriptor(q) for q in alts]


# --------------------------------------------------------------------------
# commands


def cmd_extract(args) -> int:
    params = params_from(args)
    ext = _extract_file(args.image, params)
    stem = Path(args.output) if args.output else Path(args.image).with_suffix("")
    stem.parent.mkdir(parents=True, exist_ok=True)
    written = []
    if len(ext.descriptors) == 1:
        written.append(stem.with_name(stem.name + ".desc"))
    else:
        written += [stem.with_name(f"{stem.name}.{k}.desc") for k in range(len(ext.descriptors))]
    for path, d in zip(written, ext.descriptors):
        path.write_text(format_descriptor(d), encoding="utf-8")
    if args.field:
        write_field(ext.field, args.field)
    if args.axes:
        from .render import write_svg

        write_svg(ext, args.axes)
    if args.db:
        db = DescriptorDatabase.create(args.db, params)
        sid = args.id or Path(args.image).stem
        db.add(sid, args.category or "-", ext.descriptors, str(args.image))
    for w in written:
        print(w)
    summary = f"topology {ext.topology} alternatives {len(ext.descriptors)} records {len(ext.descriptors[0])}"
    if ext.field.mode == "diffusion":
        summary += f" tau {ext.field.time:.3f}"
    print(summary)
    for note in ext.notes:
        print(f"note: {note}")
    return EXIT_OK


def _print_match(res, out=None):
    out = out or sys.stdout
    print(f"total {res.total:.3f}", file=out)
    print(f"mode {res.mode} half_pairing {res.half_pairing[0]}-{res.half_pairing[1]} "
          f"alternatives {res.alternatives[0]} {res.alternatives[1]}", file=out)
    for a, b, s in res.pairs:
        print(f"pair {a} {b} {s:.3f}", file=out)
    print("unmatched_a " + " ".join(map(str, res.unmatched_a)), file=out)
    print("unmatched_b " + " ".join(map(str, res.unmatched_b)), file=out)


def cmd_match(args) -> int:
    thr, mode = thresholds_from(args)
    res = match_multi(_desc_set(args.a), _desc_set(args.b), thr, mode)
    _print_match(res)
    return EXIT_OK


def cmd_query(args) -> int:
    if args.k < 1:
        raise UsageError("-k must be at least 1")
    db = DescriptorDatabase.open(args.db)
    params = params_from(args)
    if args.config or any(getattr(args, f.replace("-", "_")) is not None for f in PARAM_FLAGS):
        db.check(params)
    else:
        params = db.params
    thr, mode = thresholds_from(args)
    if args.image.endswith(".desc") or not Path(args.image).exists():
        descs = _desc_set(args.image)
    else:
        descs = _extract_file(args.image, params).descriptors
    ranked = db.query(descs, args.k, thr, mode, exclude=args.exclude)
    print(f"{'rank':>4} {'score':>6}  {'category':<12} id")
    for i, (e, res) in enumerate(ranked, 1):
        print(f"{i:>4} {res.total:6.3f}  {e.category:<12} {e.shape_id}")
    return EXIT_OK


def cmd_render(args) -> int:
    from .render import write_svg

    ext = _extract_file(args.image, params_from(args))
    write_svg(ext, args.axes, args.alternative)
    print(args.axes)
    return EXIT_OK


def cmd_gen_corpus(args) -> int:
    rows = corpus.generate_corpus(args.out, args.per, args.seed)
    print(f"wrote {len(rows)} shapes in {len({c for _, c, _ in rows})} categories to {args.out}")
    if args.db:
        params = params_from(args)
        db = DescriptorDatabase.create(args.db, params)
        for sid, cat, path in rows:
            ext = _extract_file(path, params)
            db.add(sid, cat, ext.descriptors, str(path))
        print(f"database {args.db}: {len(db.entries)} entries")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="axisdesc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("extract", help="image -> descriptor file(s)")
    e.add_argument("image")
    e.add_argument("-o", "--output", help="output stem (default: image path without suffix)")
    e.add_argument("--field", help="write the field dump here")
    e.add_argument("--axes", help="write an SVG overlay here")
    e.add_argument("--db", help="also add the result to this database directory")
    e.add_argument("--id", help="shape id in the database (default: image stem)")
    e.add_argument("--category", help="category label in the database")
    _add_params(e)
    e.set_defaults(func=cmd_extract)

    m = sub.add_parser("match", help="score two descriptors (or alternative sets)")
    m.add_argument("a")
    m.add_argument("b")
    m.add_argument("--config")
    _add_thresholds(m)
    m.add_argument("--mode", dest="match_mode", choices=["invariant", "variant"])
    m.set_defaults(func=cmd_match)

    q = sub.add_parser("query", help="rank database entries against an image or descriptor")
    q.add_argument("db")
    q.add_argument("image")
    q.add_argument("-k", type=int, default=5)
    q.add_argument("--exclude", help="skip this shape id (leave-one-out)")
    _add_params(q, thresholds=True)
    q.set_defaults(func=cmd_query)

    r = sub.add_parser("render", help="SVG overlay of axes, center and frames")
    r.add_argument("image")
    r.add_argument("--axes", required=True, help="output SVG path")
    r.add_argument("--alternative", type=int, default=0)
    _add_params(r)
    r.set_defaults(func=cmd_render)

    g = sub.add_parser("gen-corpus", help="write the synthetic corpus (and optionally its database)")
    g.add_argument("out")
    g.add_argument("--per", type=int, default=4, help="shapes per category")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--db", help="extract every shape into this database directory")
    _add_params(g)
    g.set_defaults(func=cmd_gen_corpus)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ManifestMismatchError, DescriptorFormatError, MaskError, FileNotFoundError) as exc:
        print(f"axisdesc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TopologyError as exc:
        print(f"axisdesc: unresolved topology: {exc}", file=sys.stderr)
        return EXIT_TOPOLOGY
    except AxisDescError as exc:
        stage = getattr(exc, "stage", "pipeline")
        print(f"axisdesc: pipeline failure [{stage}]: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
