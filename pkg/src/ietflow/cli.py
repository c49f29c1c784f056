"""Command-line entry point: ``ietflow induct | certify | sweep``.

Exit codes: 0 ok, 2 induction ended in tied lengths, 3 certification audit
failed, 4 some sweep pairs failed, 64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__, builtins
from . import scalar as sc
from .errors import IETError, TiedLengths
from .iet import CombinatorialData, build_iet
from .induction import Trace, mmy_schedule, raw_schedule, zorich_schedule
from .ratner import ADAPTIVE, STRICT, config_hash, measure_constants, swr_sweep, witness
from .regularity import audit_constant, balance_audit, bounded_type_certificate, gap_profile
from .roof import Roof, RoofSpec

EXIT_OK, EXIT_TIE, EXIT_AUDIT, EXIT_SWEEP, EXIT_USAGE = 0, 2, 3, 4, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_json(text):
    """Inline JSON (starting with '{') or a path to a JSON file."""
    if text.lstrip().startswith("{"):
        return json.loads(text)
    return json.loads(Path(text).read_text())


def load_instance(text):
    if text in builtins.BUILTINS:
        return builtins.get(text)
    obj = _load_json(text)
    alphabet = tuple(obj["alphabet"])
    rows = []
    for row in (obj["pi0"], obj["pi1"]):
        if all(isinstance(v, str) for v in row):
            # rows given as letters, left to right
            row = [list(row).index(a) + 1 if a in row else 0 for a in alphabet]
        rows.append(tuple(row))
    comb = CombinatorialData(alphabet, *rows)
    lengths = obj["lengths"]
    if isinstance(lengths, dict):
        lengths = {a: sc.from_json(v) for a, v in lengths.items()}
    else:
        lengths = [sc.from_json(v) for v in lengths]
    return build_iet(comb, lengths)


def load_roof(text, T):
    if text == "single-pair":
        return RoofSpec.single_pair(T)
    return RoofSpec.from_json(_load_json(text))


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {s}")
    return v


def _scales(s):
    out = []
    for part in s.split(","):
        part = part.strip()
        try:
            v = Fraction(part)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad scale {part!r}") from None
        if not 0 < v < Fraction(1, 2):
            raise argparse.ArgumentTypeError(f"scale {part} must lie in (0, 1/2)")
        out.append(part)
    return out


def build_parser():
    p = _Parser(prog="ietflow", description="Interval exchanges, Rauzy-Veech induction and drift certificates.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", default="golden",
                        help=f"builtin name ({', '.join(sorted(builtins.BUILTINS))}), JSON file or inline JSON")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--precision-bits", type=int, default=53, help="working precision; re-checks use twice this")
    common.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    q = sub.add_parser("induct", parents=[common], help="write an induction trace and block matrices")
    q.add_argument("--schedule", choices=["raw", "zorich", "mmy"], default="mmy")
    q.add_argument("--depth", type=_nonneg_int, default=50, help="steps (raw) or blocks (zorich, mmy)")

    q = sub.add_parser("certify", parents=[common], help="bounded-type certificate and balance audit")
    q.add_argument("--K", type=_positive_int, default=50, help="number of MMY blocks")
    q.add_argument("--gaps", type=_nonneg_int, default=0, metavar="N_MAX",
                   help="also write the partition-gap CSV for n <= N_MAX")

    q = sub.add_parser("sweep", parents=[common], help="drift certificates on random pairs")
    q.add_argument("--roof", default="single-pair", help="'single-pair', roof JSON file or inline JSON")
    q.add_argument("--scales", type=_scales, default=_scales("1e-3,1e-4,1e-5"), help="comma-separated eta values")
    q.add_argument("--pairs", type=_nonneg_int, default=100, help="pairs per scale")
    q.add_argument("--mode", choices=[STRICT, ADAPTIVE], default=ADAPTIVE)
    q.add_argument("--K", type=_positive_int, default=50, help="MMY blocks used to measure C")
    q.add_argument("--constants", default=None,
                   help="JSON (file or inline) with any of c, C, M_prime, D, eps, N, kappa; the rest is measured")
    return p


def _header(cfg):
    return {"config_hash": config_hash(cfg), "version": __version__}


def _dump(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


def cmd_induct(args, T, out):
    cfg = {"command": "induct", "instance": T.to_json(), "schedule": args.schedule, "depth": args.depth}
    head = _header(cfg)
    tr = Trace(T)
    try:
        if args.schedule == "raw":
            sched = raw_schedule(tr, args.depth)
        elif args.schedule == "zorich":
            sched = zorich_schedule(tr, args.depth)
        else:
            sched = mmy_schedule(tr, T.d - 1, args.depth)
    except TiedLengths as exc:
        print(f"tied lengths at induction step {exc.step}", file=sys.stderr)
        return EXIT_TIE
    with open(out / "trace.jsonl", "w") as fh:
        fh.write(json.dumps({"header": head, "config": cfg}, sort_keys=True) + "\n")
        tr.to_jsonl(sched.times[-1] if sched.times else 0, fh)
    _dump(out / "blocks.json", {**head, "config": cfg, **sched.to_json(), "norms": sched.norms()})
    return EXIT_OK


def cmd_certify(args, T, out):
    cfg = {"command": "certify", "instance": T.to_json(), "K": args.K, "gaps": args.gaps}
    head = _header(cfg)
    tr = Trace(T)
    try:
        cert = bounded_type_certificate(T, args.K, tr)
    except TiedLengths as exc:
        print(f"tied lengths at induction step {exc.step}", file=sys.stderr)
        return EXIT_TIE
    C = audit_constant(cert, tr)
    audit = balance_audit(T, args.K, C, cert, tr)
    _dump(out / "certificate.json", {**head, **cert.to_json()})
    _dump(out / "audit.json", {**head, "C": C, "K": args.K, "passed": audit.passed,
                               "chains": {k: [list(w) for w in v] for k, v in audit.chains.items()}})
    if args.gaps:
        prof = gap_profile(T, args.gaps)
        with open(out / "gaps.csv", "w", newline="") as fh:
            fh.write(f"# config_hash={head['config_hash']} version={head['version']}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n", "j", "scope", "min_gap", "max_gap"])
            w.writerows(prof.rows())
    if not audit.passed:
        print(f"balance audit failed at C={C}: {audit.summary()}", file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


SWEEP_COLUMNS = ["eta", "x", "y", "direction", "branch", "k", "M", "L", "p", "deviation", "status"]


def cmd_sweep(args, T, out):
    spec = load_roof(args.roof, T)
    roof = Roof(spec, T)
    given = _load_json(args.constants) if args.constants else {}
    eps = given.pop("eps", "1/10")
    N = given.pop("N", 1)
    kappa = given.pop("kappa", "1/20")
    cfg = {"command": "sweep", "instance": T.to_json(), "roof": spec.to_json(), "scales": args.scales,
           "pairs": args.pairs, "mode": args.mode, "seed": args.seed, "K": args.K,
           "precision_bits": args.precision_bits, "constants": {**given, "eps": eps, "N": N, "kappa": kappa}}
    head = _header(cfg)
    consts, measured = measure_constants(
        T, roof, eps=Fraction(str(eps)), N=int(N), kappa=Fraction(str(kappa)), mode=args.mode, K=args.K,
        seed=args.seed, overrides={k: Fraction(str(v)) for k, v in given.items()},
    )
    reeval = 2 * args.precision_bits
    rep = swr_sweep(T, roof, consts, args.scales, args.pairs, args.seed, args.mode, args.jobs, reeval)
    _dump(out / "sweep.json", {**head, "config": cfg, "measured": measured, "constants": consts.to_json(),
                               "summary": rep.summary()})
    with open(out / "pairs.csv", "w", newline="") as fh:
        fh.write(f"# config_hash={head['config_hash']} version={head['version']}\n")
        w = csv.DictWriter(fh, SWEEP_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rep.results:
            w.writerow(r.row())
    bad = rep.failures()
    if bad:
        wdir = out / "witnesses"
        wdir.mkdir(exist_ok=True)
        for i, r in enumerate(bad):
            _dump(wdir / f"pair_{i:04d}.json", {**head, **witness(T, roof, consts, r, args.mode, reeval)})
        print(f"{len(bad)} of {len(rep.results)} pairs failed", file=sys.stderr)
        return EXIT_SWEEP
    return EXIT_OK


COMMANDS = {"induct": cmd_induct, "certify": cmd_certify, "sweep": cmd_sweep}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        T = load_instance(args.instance)
    except (OSError, ValueError, KeyError, IETError) as exc:
        print(f"ietflow: cannot load instance {args.instance!r}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return COMMANDS[args.command](args, T, out)


if __name__ == "__main__":
    sys.exit(main())
