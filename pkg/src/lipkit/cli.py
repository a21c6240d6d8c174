"""``lipkit`` command line.

Exit codes: 0 success, 1 configuration or input error, 2 soundness failure
(a certificate that does not verify).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import InvariantFailure, LipkitError
from .experiments import ExperimentConfig, run
from .porosity import EscapeCertificate, verify_certificate

log = logging.getLogger("lipkit")


def _formats(text: str) -> tuple[str, ...]:
    return tuple(f.strip() for f in text.split(",") if f.strip())


def _common(p: argparse.ArgumentParser, samples: int) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=samples,
                   help="ball samples per certificate")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("--format", type=_formats, default=("json",),
                   help="comma separated subset of json,csv,svg")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lipkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("snowflake", help="escape certificates for Holder classes on dyadic chains")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--k-min", type=int, default=4)
    p.add_argument("--k-max", type=int, default=20)
    p.add_argument("--functions", type=int, default=3, help="seeded class members besides 0")
    p.add_argument("--m", type=int, default=1, help="target dimension")
    p.add_argument("--norm", default="l2", choices=["l1", "l2", "linf"])
    _common(p, 1000)

    p = sub.add_parser("dual-thinness", help="l1 -> l-infinity truncations in R^n")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=64)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--functions", type=int, default=2)
    _common(p, 200)

    p = sub.add_parser("barrier", help="barrier cone and polar of polyhedral gauges")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--preset", default="strip", choices=["strip", "box", "random"])
    p.add_argument("--grid", type=int, default=21, help="grid points per axis (dim <= 2)")
    p.add_argument("--duals", type=int, default=200, help="random dual vectors (dim > 2)")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--levels", type=lambda t: [int(v) for v in t.split(",")],
                   default=[4, 6, 8, 10, 12], help="eps = 2**-level for the certificate family")
    _common(p, 200)

    p = sub.add_parser("verify", help="re-check a stored escape certificate")
    p.add_argument("certificate", type=Path)
    return parser


def _config(args: argparse.Namespace) -> ExperimentConfig:
    skip = {"command", "verbose", "out", "format"}
    params = {k: v for k, v in vars(args).items() if k not in skip}
    return ExperimentConfig(args.command, params, args.out, args.format)


def _verify(path: Path) -> int:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        cert = EscapeCertificate.from_dict(data)
    except (OSError, ValueError, KeyError, TypeError, LipkitError) as exc:
        print(f"error: cannot load certificate {path}: {exc}", file=sys.stderr)
        return 1
    report = verify_certificate(cert)
    print(json.dumps(report.to_dict(), indent=2))
    return 0 if report.ok else 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        return _verify(args.certificate)
    try:
        payload = run(_config(args))
    except InvariantFailure as exc:
        print(f"internal invariant failure: {exc}", file=sys.stderr)
        return 2
    except LipkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    rows = payload["rows"]
    log.info("%s: %d rows", args.command, len(rows))
    if args.out is None:
        print(json.dumps(payload, indent=2))
    else:
        print(f"wrote {args.command} report to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
