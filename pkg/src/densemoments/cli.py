"""
Command-line front end.

Every subcommand reads its numeric settings from flags, optionally backed by
a TOML file given with ``--config``: top-level keys apply to all commands,
a table named after the command (``[copymove]``, ``[phash]`` ...) to that
command only, and flags given on the command line win over both. Reports go
to standard output as CSV with a header row unless ``--csv`` names a file.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 computation error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .basis import BasisKind, order_set
from .errors import DenseMomentsError, FormatError
from .kernels import IntegrationStrategy, bank_build
from .transform import decompose, fft_shape

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["main", "run", "RunConfig", "UsageError"]

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_COMPUTE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def parse_scales(text) -> tuple[int, ...]:
    """``"8,16,24"``, an inclusive range ``"5:200:5"`` or a list of integers."""
    if isinstance(text, (list, tuple)):
        items = list(text)
    elif ":" in str(text):
        parts = [int(p) for p in str(text).split(":")]
        if len(parts) not in (2, 3):
            raise ValueError(f"bad scale range {text!r}")
        start, stop, step = parts[0], parts[1], parts[2] if len(parts) == 3 else 1
        if step < 1:
            raise ValueError("scale range step must be positive")
        items = list(range(start, stop + 1, step))
    else:
        items = [p for p in str(text).split(",") if p.strip()]
    try:
        scales = tuple(int(x) for x in items)
    except (TypeError, ValueError):
        raise ValueError(f"scales must be integers, got {text!r}") from None
    if not scales or any(w < 1 for w in scales):
        raise ValueError(f"scales must be positive integers, got {text!r}")
    return scales


def _norm(text) -> float:
    s = str(text).strip().lower()
    if s in ("inf", "infinity", "oo"):
        return math.inf
    if s in ("1", "1.0"):
        return 1.0
    raise ValueError(f"norm must be 1 or inf, got {text!r}")


@dataclass(frozen=True)
class RunConfig:
    """Validated settings shared by the computing subcommands."""

    basis: BasisKind = BasisKind.PCT
    norm: float = math.inf
    K: int = 3
    scales: tuple[int, ...] = (8,)
    strategy: IntegrationStrategy = IntegrationStrategy(1)
    path: str = "fft"
    seed: int = 0
    threads: int = 1

    @classmethod
    def from_values(cls, values: dict) -> "RunConfig":
        def field(name, conv):
            try:
                return conv(values[name])
            except (TypeError, ValueError) as exc:
                raise UsageError(f"invalid value for '{name}': {exc}") from None

        kw = {}
        for name, conv in (
            ("basis", BasisKind.parse),
            ("norm", _norm),
            ("K", int),
            ("scales", parse_scales),
            ("strategy", IntegrationStrategy.parse),
            ("path", str),
            ("seed", int),
            ("threads", int),
        ):
            if values.get(name) is not None:
                kw[name] = field(name, conv)
        cfg = cls(**kw)
        if cfg.K < 0:
            raise UsageError("invalid value for 'K': must be >= 0")
        if cfg.path not in ("fft", "spatial"):
            raise UsageError(f"invalid value for 'path': {cfg.path!r} (fft or spatial)")
        if cfg.threads < 1:
            raise UsageError("invalid value for 'threads': must be >= 1")
        return cfg


# command -> defaults; only these keys may appear in a config file
_DEFAULTS = {
    "kernels": dict(basis="pct", norm="inf", K=3, scales="8", strategy="zoa", grid=None, rescale=False),
    "decompose": dict(basis="pct", norm="inf", K=3, scales="8", strategy="zoa", path="fft", bank=None),
    "ce": dict(basis="pct", strategy="zoa", K=20, w="8"),
    "bench": dict(basis="pct", size=512, order="1,1", scales="5:200:5", paths="spatial,fft,fft+bank",
                  repeats=5, spatial_scales="50,100,200", spatial_repeats=1, strategy="zoa"),
    "detect": dict(basis="pct", norm="inf", K=5, scales="24", strategy="zoa", threshold=None, nms=24.0),
    "match": dict(basis="pct", norm="inf", K=3, scales="8,12,16", strategy="zoa", iterations=3,
                  shift=None, angle=None, epsilon=2.0),
    "copymove": dict(exclude_border=4, upsample=2000),
    "phash": dict(stride=8),
    "selftest": dict(),
}
_COMMON = dict(seed=0, threads=1)


def _add_common(p):
    p.add_argument("--config", help="TOML file with default settings")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    p.add_argument("--csv", default=None, help="write the CSV report here instead of stdout")


def _add_basis(p, with_norm=True):
    p.add_argument("--basis", default=None, help="pct, pcet, pst, zm, ofmm, efm or rhfm")
    if with_norm:
        p.add_argument("--norm", default=None, help="order-set norm: 1 or inf")
    p.add_argument("--K", type=int, default=None, help="order bound")
    p.add_argument("--strategy", default=None, help="zoa or upsampleL")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="densemoments", description="Dense orthogonal-moment fields and forensics tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("kernels", help="build or inspect a kernel-spectrum bank (.dirb)")
    ksub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    b = ksub.add_parser("build")
    _add_common(b)
    _add_basis(b)
    b.add_argument("--scales", default=None)
    b.add_argument("--grid", default=None, help="spectrum grid ROWSxCOLS")
    b.add_argument("--rescale", action="store_true", default=None, help="derive larger scales by spectrum rescaling")
    b.add_argument("-o", "--output", required=True)
    i = ksub.add_parser("inspect")
    _add_common(i)
    i.add_argument("bank")

    p = sub.add_parser("decompose", help="image -> moment field (.dirf)")
    _add_common(p)
    _add_basis(p)
    p.add_argument("image")
    p.add_argument("--scales", default=None)
    p.add_argument("--path", default=None, help="fft or spatial")
    p.add_argument("--bank", default=None, help="precomputed .dirb spectra")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("ce", help="unity-image calculation error")
    _add_common(p)
    _add_basis(p, with_norm=False)
    p.add_argument("--w", default=None, help="scale or comma list of scales")

    p = sub.add_parser("bench", help="single-thread decomposition time per scale")
    _add_common(p)
    p.add_argument("--basis", default=None)
    p.add_argument("--strategy", default=None)
    p.add_argument("--size", type=int, default=None, help="square image side")
    p.add_argument("--order", default=None, help="n,m")
    p.add_argument("--scales", default=None)
    p.add_argument("--paths", default=None)
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--spatial-scales", dest="spatial_scales", default=None)
    p.add_argument("--spatial-repeats", dest="spatial_repeats", type=int, default=None)

    p = sub.add_parser("detect", help="template detection in a scene")
    _add_common(p)
    _add_basis(p)
    p.add_argument("template")
    p.add_argument("scene")
    p.add_argument("--scales", default=None)
    p.add_argument("--threshold", type=float, default=None, help="feature distance below which positions are candidates")
    p.add_argument("--nms", type=float, default=None, help="suppression radius in pixels")
    p.add_argument("--map", default=None, help="write the distance map as 16-bit PGM")

    p = sub.add_parser("match", help="dense matching of two images")
    _add_common(p)
    _add_basis(p)
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--scales", default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--shift", type=float, nargs=2, default=None, metavar=("DX", "DY"), help="ground-truth shift")
    p.add_argument("--angle", type=float, default=None, help="ground-truth rotation in degrees about the image center")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("-o", "--output", default=None, help="match field (.dirf)")
    p.add_argument("--offset-map", dest="offset_map", default=None, help="offset length as 16-bit PGM")

    p = sub.add_parser("copymove", help="copy-move forgery mask")
    _add_common(p)
    p.add_argument("image")
    p.add_argument("-o", "--output", default=None, help="mask PGM")
    p.add_argument("--truth", default=None, help="ground-truth mask; enables the score report")
    p.add_argument("--exclude-border", dest="exclude_border", type=int, default=None)
    p.add_argument("--upsample", type=int, default=None, help="target long edge, 0 to disable")

    p = sub.add_parser("phash", help="perceptual hash digests")
    hsub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    g = hsub.add_parser("gen")
    _add_common(g)
    g.add_argument("image")
    g.add_argument("--stride", type=int, default=None)
    g.add_argument("-o", "--output", required=True)
    c = hsub.add_parser("cmp")
    _add_common(c)
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--mask", default=None, help="tampered cells as PGM")
    c.add_argument("--map", default=None, help="cell distances as 16-bit PGM")

    p = sub.add_parser("selftest", help="run the analytic checks")
    _add_common(p)
    return parser


def _load_config(path, command) -> dict:
    if not path:
        return {}
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"{path}: {exc}") from None
    known = set(_DEFAULTS) | set(_DEFAULTS[command]) | set(_COMMON)
    merged = {}
    for key, value in data.items():
        if key not in known:
            raise UsageError(f"{path}: unknown setting '{key}'")
        if key in _DEFAULTS:
            if not isinstance(value, dict):
                raise UsageError(f"{path}: '{key}' must be a table")
            continue
        merged[key] = value
    section = data.get(command, {})
    allowed = set(_DEFAULTS[command]) | set(_COMMON)
    for key, value in section.items():
        if key not in allowed:
            raise UsageError(f"{path}: unknown setting '{command}.{key}'")
        merged[key] = value
    return {k: v for k, v in merged.items() if k in allowed}


def _settings(args) -> dict:
    values = dict(_COMMON)
    values.update(_DEFAULTS[args.command])
    values.update(_load_config(args.config, args.command))
    for key in values:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return values


class _Report:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.fh = open(self.path, "w", newline="") if self.path else sys.stdout
        return csv.writer(self.fh, lineterminator="\n")

    def __exit__(self, *exc):
        if self.path:
            self.fh.close()
        else:
            self.fh.flush()


def _features(image, cfg: RunConfig):
    from .invariants import magnitude_features, pool_scales

    orders = order_set(cfg.basis, cfg.norm, cfg.K)
    field = decompose(image, cfg.basis, orders, cfg.scales, cfg.strategy, cfg.path, workers=cfg.threads)
    return pool_scales(magnitude_features(field, orders)), orders


def _cmd_kernels(args, values):
    from .formats import load_bank, save_bank

    if args.action == "inspect":
        bank = load_bank(args.bank)
        with _Report(args.csv) as out:
            out.writerow(["kind", "strategy", "n", "m", "w", "rows", "cols"])
            for n, m, w in sorted(bank.keys()):
                out.writerow([bank.kind.value, str(bank.strategy), n, m, w, bank.shape[0], bank.shape[1]])
        return
    cfg = RunConfig.from_values(values)
    if values["grid"]:
        try:
            rows, cols = (int(x) for x in str(values["grid"]).lower().split("x"))
        except ValueError:
            raise UsageError(f"invalid value for 'grid': {values['grid']!r} (ROWSxCOLS)") from None
    else:
        rows, cols = fft_shape((4 * max(cfg.scales),) * 2, max(cfg.scales))
    orders = order_set(cfg.basis, cfg.norm, cfg.K)
    bank = bank_build(cfg.basis, orders, cfg.scales, (rows, cols), cfg.strategy, bool(values["rescale"]), workers=cfg.threads)
    save_bank(args.output, bank)


def _cmd_decompose(args, values):
    from .formats import load_bank, load_image, save_moments

    cfg = RunConfig.from_values(values)
    image = load_image(args.image)
    bank = load_bank(values["bank"]) if values["bank"] else None
    orders = order_set(cfg.basis, cfg.norm, cfg.K)
    field = decompose(image, cfg.basis, orders, cfg.scales, cfg.strategy, cfg.path, bank, workers=cfg.threads)
    save_moments(args.output, field)


def _cmd_ce(args, values):
    from .metrics import calculation_error

    cfg = RunConfig.from_values({k: values[k] for k in ("basis", "strategy", "K")})
    scales = RunConfig.from_values({"scales": values["w"]}).scales
    with _Report(args.csv) as out:
        out.writerow(["kind", "strategy", "K", "w", "ce"])
        for w in scales:
            row = calculation_error(cfg.basis, cfg.strategy, cfg.K, w).row()
            out.writerow([row["kind"], row["strategy"], row["K"], row["w"], repr(row["ce"])])


def _cmd_bench(args, values):
    from .metrics import PATHS, decomposition_benchmark

    cfg = RunConfig.from_values({k: values[k] for k in ("basis", "strategy", "scales", "seed")})
    try:
        n, m = (int(x) for x in str(values["order"]).split(","))
    except ValueError:
        raise UsageError(f"invalid value for 'order': {values['order']!r} (n,m)") from None
    paths = [p.strip() for p in str(values["paths"]).split(",") if p.strip()]
    if any(p not in PATHS for p in paths):
        raise UsageError(f"invalid value for 'paths': choose from {', '.join(PATHS)}")
    spatial = parse_scales(values["spatial_scales"]) if values["spatial_scales"] else None
    size = int(values["size"])
    reports = decomposition_benchmark(
        (size, size), cfg.basis, (n, m), sorted(cfg.scales), paths, strategy=cfg.strategy,
        repeats=int(values["repeats"]), spatial_scales=spatial, spatial_repeats=int(values["spatial_repeats"]), seed=cfg.seed,
    )
    with _Report(args.csv) as out:
        out.writerow(["path", "w", "seconds"])
        for rep in reports:
            for row in rep.rows():
                out.writerow([row["path"], row["w"], repr(row["seconds"])])


def _cmd_detect(args, values):
    from .detect import detect_peaks, distance_map, template_signature
    from .formats import load_image, write_map

    cfg = RunConfig.from_values(values)
    if values["threshold"] is None:
        raise UsageError("detect needs --threshold")
    template = load_image(args.template)
    scene = load_image(args.scene)
    features, orders = _features(scene, cfg)
    signature = template_signature(template, cfg.basis, orders, cfg.scales, cfg.strategy).mean(axis=0)
    dmap = distance_map(features, signature)
    result = detect_peaks(dmap, float(values["threshold"]), float(values["nms"]), w=max(cfg.scales))
    if args.map:
        write_map(args.map, dmap)
    with _Report(args.csv) as out:
        out.writerow(["u", "v", "w", "score"])
        for d in result:
            out.writerow([d.u, d.v, d.w, repr(d.score)])


def _cmd_match(args, values):
    from .formats import load_image, save_match, write_map
    from .match import affine, dense_match, repeatability

    cfg = RunConfig.from_values(values)
    src_img, dst_img = load_image(args.source), load_image(args.target)
    src, _ = _features(src_img, cfg)
    dst, _ = _features(dst_img, cfg)
    mf = dense_match(src, dst, int(values["iterations"]), cfg.seed)
    if args.output:
        save_match(args.output, mf)
    if args.offset_map:
        write_map(args.offset_map, np.where(mf.valid, mf.offset_length(), np.nan))
    shift, angle = values["shift"], values["angle"]
    with _Report(args.csv) as out:
        out.writerow(["valid", "mean_distance", "repeatability"])
        rep = ""
        if shift is not None or angle is not None:
            rows, cols = src_img.shape
            gt = affine(shift=tuple(shift or (0.0, 0.0)), angle=math.radians(angle or 0.0), center=((cols - 1) / 2, (rows - 1) / 2))
            rep = repr(repeatability(mf, gt, float(values["epsilon"]), dst.valid))
        dist = mf.distance[mf.valid]
        out.writerow([int(mf.valid.sum()), repr(float(dist.mean())) if dist.size else "", rep])


def _cmd_copymove(args, values):
    from .forensics.copymove import CopyMoveConfig, copymove_detect, score_mask
    from .formats import load_image, write_mask

    up = int(values["upsample"])
    cfg = CopyMoveConfig(upsample_long_edge=up if up > 0 else None)
    image = load_image(args.image)
    truth = load_image(args.truth) > 0.5 if args.truth else None
    result = copymove_detect(image, cfg, int(values["seed"]))
    if args.output:
        write_mask(args.output, result.mask)
    if truth is not None:
        p, r, f = score_mask(result, truth, int(values["exclude_border"]))
        with _Report(args.csv) as out:
            out.writerow(["precision", "recall", "f1"])
            out.writerow([repr(p), repr(r), repr(f)])


def _cmd_phash(args, values):
    from .forensics.phash import HashConfig, phash_compare, phash_generate
    from .formats import load_digest, load_image, save_digest, write_map, write_mask

    if args.action == "gen":
        cfg = HashConfig(stride=int(values["stride"]))
        save_digest(args.output, phash_generate(load_image(args.image), cfg))
        return
    res = phash_compare(load_digest(args.a), load_digest(args.b))
    if args.mask:
        write_mask(args.mask, res.mask)
    if args.map:
        write_map(args.map, res.distance)
    with _Report(args.csv) as out:
        out.writerow(["cells", "tampered", "threshold"])
        out.writerow([res.distance.size, int(res.mask.sum()), repr(res.threshold)])


def _cmd_selftest(args, values):
    from .selftest import run_checks

    checks = run_checks()
    with _Report(args.csv) as out:
        out.writerow(["check", "ok", "value", "limit"])
        for c in checks:
            out.writerow([c.name, int(c.ok), repr(c.value), repr(c.limit)])
    failed = [c.name for c in checks if not c.ok]
    if failed:
        raise DenseMomentsError("failed checks: " + ", ".join(failed))


_COMMANDS = {
    "kernels": _cmd_kernels,
    "decompose": _cmd_decompose,
    "ce": _cmd_ce,
    "bench": _cmd_bench,
    "detect": _cmd_detect,
    "match": _cmd_match,
    "copymove": _cmd_copymove,
    "phash": _cmd_phash,
    "selftest": _cmd_selftest,
}


def run(argv=None) -> int:
    """Run one command line and return its exit code."""
    try:
        args = build_parser().parse_args(argv)
        values = _settings(args)
        threads = int(values["threads"])
        if threads < 1:
            raise UsageError("invalid value for 'threads': must be >= 1")
        # the benchmark pins its own pools to one thread
        with threadpool_limits(limits=threads):
            _COMMANDS[args.command](args, values)
    except UsageError as exc:
        print(f"densemoments: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError) as exc:
        print(f"densemoments: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DenseMomentsError, ValueError, ArithmeticError) as exc:
        print(f"densemoments: error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
