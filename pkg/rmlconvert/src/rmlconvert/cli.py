"""rmlconvert command line.

    rmlconvert convert <archive> <out.sigf>   rewrite an archive as SIGF
    rmlconvert verify <archive>               print a schema report

Exit codes follow the consumer toolkit's convention: 0 success, 1 usage
error, 2 runtime error (verify also exits 2 when anomalies are found).
"""

from __future__ import annotations

import argparse
import sys

from .archive import ArchiveFormatError, convert, verify_archive


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}error: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(prog="rmlconvert", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    p_convert = sub.add_parser("convert")
    p_convert.error = parser.error  # type: ignore[method-assign]
    p_convert.add_argument("archive", help="pickled RadioML archive")
    p_convert.add_argument("out", help="output .sigf path")
    p_verify = sub.add_parser("verify")
    p_verify.error = parser.error  # type: ignore[method-assign]
    p_verify.add_argument("archive", help="pickled RadioML archive")
    return parser


def run(argv) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    try:
        if args.command == "convert":
            count = convert(args.archive, args.out)
            print(f"wrote {count} frames to {args.out}")
            return 0
        report = verify_archive(args.archive)
        print(f"modulations ({len(report.modulations)}): {', '.join(report.modulations)}")
        snrs = ", ".join(f"{s:g}" for s in report.snrs)
        print(f"snrs ({len(report.snrs)}): {snrs}")
        print(f"total examples: {report.total_examples}")
        for (mod, snr), n in sorted(report.per_key.items()):
            print(f"  {mod} @ {snr:g} dB: {n}")
        if report.anomalies:
            print(f"{len(report.anomalies)} anomalies:", file=sys.stderr)
            for a in report.anomalies:
                print(f"  {a}", file=sys.stderr)
            return 2
        print("schema: ok")
        return 0
    except (ArchiveFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        return run(argv)
    except SystemExit as exc:
        code = exc.code
        return int(code) if isinstance(code, int) else 0


def console_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
