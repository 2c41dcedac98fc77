"""``mfadvr`` command line: synth, encode, render, compare, sweep, bench.

Every subcommand accepts ``--config FILE``, a plain-text ``key=value`` file
whose keys are the long flag names without dashes (``e-max=0.01``,
``shading=false``).  Flags given on the command line override the file.

Exit codes: 0 success, 1 usage, 2 I/O or format error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .encoder import EncodeConfig, encode, fit_scattered_global, runge_risk
from .errors import ConfigError, DomainError, FitError, FormatError, MfaError, RenderError, UnsupportedOrderError
from .fields import DEFAULT_BOUNDS, GaussianBeam, field_from_name, sample_grid, sample_scattered
from .image import read_image, write_pam, write_ppm
from .metrics import compare, error_heatmap
from .model import eval_gradients, eval_points, load_model, save_model
from .renderer import Camera, RenderConfig, analytic_source, filter_source, mfa_source, render
from .transfer import parse_color, parse_opacity
from .volume_io import (
    is_grid_file,
    read_cloud_bounds,
    read_point_cloud,
    read_raw_grid,
    write_point_cloud,
    write_raw_grid,
)

log = logging.getLogger("mfadvr")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_NUMERIC = 3

FIELDS = ("gaussian-beam", "marschner-lobb", "multi-beam", "constant")
FILTERS = ("trilinear", "tricubic", "catmull-rom")
BENCH_SOURCES = ("trilinear", "mfa", "tricubic", "catmull-rom", "analytic")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# argument types
# --------------------------------------------------------------------------


def _numbers(text: str, conv, name: str) -> list:
    parts = [t.strip() for t in str(text).split(",")]
    if not parts or any(not t for t in parts):
        raise argparse.ArgumentTypeError(f"{name}: empty entry in {text!r}")
    try:
        return [conv(t) for t in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{name}: cannot parse {text!r}") from None


def int_triple(text: str) -> tuple:
    """``N`` or ``X,Y,Z``; a scalar applies to all three axes."""
    v = _numbers(text, int, "expected integers")
    if len(v) == 1:
        v = v * 3
    if len(v) != 3:
        raise argparse.ArgumentTypeError(f"need one or three integers, got {text!r}")
    return tuple(v)


def float_vec(n: int):
    def conv(text: str) -> tuple:
        v = _numbers(text, float, "expected numbers")
        if len(v) == 1 and n > 1:
            v = v * n
        if len(v) != n:
            raise argparse.ArgumentTypeError(f"need {n} numbers, got {text!r}")
        return tuple(v)

    conv.__name__ = f"{n} numbers"
    return conv


def int_list(text: str) -> list:
    return _numbers(text, int, "expected an integer list")


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _bounds(values) -> np.ndarray:
    return np.array(values, dtype=np.float64).reshape(2, 3)


# --------------------------------------------------------------------------
# config files
# --------------------------------------------------------------------------


def read_config(path) -> list[tuple[str, str]]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read config {path}: {exc.strerror}") from None
    items = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, val = body.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path} line {lineno}: expected key=value")
        items.append((key.strip().replace("_", "-"), val.strip()))
    return items


def _config_argv(parser: argparse.ArgumentParser, items) -> list[str]:
    """Translate config items into flags understood by ``parser``."""
    actions = {}
    for a in parser._actions:
        for opt in a.option_strings:
            actions[opt] = a
    argv = []
    for key, val in items:
        flag = f"--{key}"
        if flag == "--config" or flag not in actions:
            raise UsageError(f"unknown config key {key!r}")
        a = actions[flag]
        if isinstance(a, argparse.BooleanOptionalAction):
            low = val.lower()
            if low in ("1", "true", "yes", "on"):
                argv.append(flag)
            elif low in ("0", "false", "no", "off"):
                argv.append(f"--no-{key}")
            else:
                raise UsageError(f"config key {key!r} needs a boolean, got {val!r}")
        else:
            argv += [flag, val]
    return argv


# --------------------------------------------------------------------------
# shared option groups
# --------------------------------------------------------------------------


def _add_field_opts(p, required=True):
    p.add_argument("--field", choices=FIELDS, required=required, help="analytic field")
    p.add_argument("--value", type=float, default=0.0, help="value of the constant field")
    p.add_argument("--bounds", type=float_vec(6), default=None, help="x0,y0,z0,x1,y1,z1 (default -1..1)")


def _add_encode_opts(p, lists=False):
    if lists:
        p.add_argument("--degrees", type=int_list, default=[1, 2, 3], help="degree list, each broadcast to 3 axes")
        p.add_argument("--nctrls", type=int_list, default=None, help="control-count list (default half of dims)")
    else:
        p.add_argument("--degree", type=int_triple, default=(2, 2, 2))
        p.add_argument("--nctrl", type=int_triple, default=None, help="control points per axis (default half of dims)")
    p.add_argument("--adaptive", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--e-max", type=positive_float, default=0.01, help="max relative error for refinement")
    p.add_argument("--max-rounds", type=int, default=10)
    p.add_argument("--max-ctrl", type=int_triple, default=None)


def _add_render_opts(p):
    g = p.add_argument_group("render")
    g.add_argument("--width", type=positive_int, default=256)
    g.add_argument("--height", type=positive_int, default=256)
    g.add_argument("--preset", choices=("value", "gradient"), default="value",
                   help="value: ramp opacity, red, unshaded; gradient: step opacity, white, shaded")
    g.add_argument("--tf-range", type=float_vec(2), default=None,
                   help="value range of the value preset ramp (default: the analytic field's range, else 0,255)")
    g.add_argument("--opacity", default=None, help="ramp:V0:V1[:A] | step:T[:A] | points:V,A;...")
    g.add_argument("--color", default=None, help="constant:R,G,B | points:V,R,G,B;...")
    g.add_argument("--shading", action=argparse.BooleanOptionalAction, default=None)
    g.add_argument("--step", type=positive_float, default=1e-3, help="sample distance as a fraction of the diagonal")
    g.add_argument("--o-max", type=positive_float, default=0.98, help="early termination opacity")
    g.add_argument("--opacity-correction", action=argparse.BooleanOptionalAction, default=False)
    g.add_argument("--projection", choices=("perspective", "orthographic"), default="perspective")
    g.add_argument("--fov", type=positive_float, default=30.0, help="vertical field of view in degrees")
    g.add_argument("--eye", type=float_vec(3), default=None, help="camera position (default: framed view)")
    g.add_argument("--look-at", type=float_vec(3), default=None)
    g.add_argument("--up", type=float_vec(3), default=(0.0, 0.0, 1.0))
    g.add_argument("--ortho-height", type=positive_float, default=None)
    g.add_argument("--view-dir", type=float_vec(3), default=(1.0, -0.8, 0.6), help="direction from target to eye")
    g.add_argument("--light-dir", type=float_vec(3), default=None, help="direction toward the light (default headlight)")
    g.add_argument("--ambient", type=float_vec(3), default=(0.3, 0.3, 0.3))
    g.add_argument("--diffuse", type=float_vec(3), default=(0.7, 0.7, 0.7))
    g.add_argument("--specular", type=float_vec(3), default=(0.3, 0.3, 0.3))
    g.add_argument("--shininess", type=float, default=20.0)
    g.add_argument("--background", type=float_vec(4), default=(0.0, 0.0, 0.0, 0.0), help="r,g,b,a in [0,1]")
    g.add_argument("--workers", type=positive_int, default=1)


def _field_spec(args):
    if args.field == "constant":
        return GaussianBeam(v_min=args.value, v_max=args.value)
    return field_from_name(args.field)


def _field_bounds(args) -> np.ndarray:
    return DEFAULT_BOUNDS.copy() if args.bounds is None else _bounds(args.bounds)


def _tf_range(args, spec=None) -> tuple:
    if args.tf_range is not None:
        lo, hi = args.tf_range
    elif spec is not None:
        lo, hi = analytic_source(spec).value_range
    else:
        lo, hi = 0.0, 255.0
    if not hi > lo:
        hi = lo + 1.0
    return lo, hi


def _render_config(args, bounds, spec=None) -> RenderConfig:
    if args.preset == "value":
        lo, hi = _tf_range(args, spec)
        opacity, color, shading = f"ramp:{lo!r}:{hi!r}:0.02", "constant:1,0,0", False
    else:
        opacity, color, shading = "step:0.5:1", "constant:1,1,1", True
    opacity_tf = parse_opacity(args.opacity or opacity)
    color_tf = parse_color(args.color or color)
    shading = shading if args.shading is None else args.shading
    if args.eye is not None:
        b = _bounds(bounds)
        look = tuple(0.5 * (b[0] + b[1])) if args.look_at is None else args.look_at
        oh = float(np.linalg.norm(b[1] - b[0])) if args.ortho_height is None else args.ortho_height
        cam = Camera(args.eye, look, args.up, args.projection, args.fov, oh, args.width, args.height)
    else:
        cam = Camera.framing(bounds, args.width, args.height, args.view_dir, args.projection, args.fov,
                             target=args.look_at)
    return RenderConfig(
        cam, opacity_tf, color_tf, step=args.step, shading=shading, light_dir=args.light_dir,
        ambient=args.ambient, diffuse=args.diffuse, specular=args.specular, shininess=args.shininess,
        o_max=args.o_max, background=args.background, opacity_correction=args.opacity_correction,
    )


def _encode_config(args, dims, degree, nctrl) -> EncodeConfig:
    if nctrl is None:
        nctrl = tuple(max(d // 2, p + 1) for d, p in zip(dims, degree))
    return EncodeConfig(degree, nctrl, args.adaptive, args.e_max, args.max_rounds, args.max_ctrl)


def _write_text(path, lines) -> None:
    text = "".join(line + "\n" for line in lines)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_synth(args) -> int:
    if args.dims is None and args.count is None:
        raise UsageError("synth: one of --dims or --count is required")
    if args.dims is not None and args.count is not None:
        raise UsageError("synth: --dims and --count are mutually exclusive")
    spec = _field_spec(args)
    bounds = _field_bounds(args)
    if args.dims is not None:
        if min(args.dims) < 2:
            raise UsageError("synth: every entry of --dims must be >= 2")
        out = args.output or f"{args.field}.raw"
        grid = sample_grid(spec, args.dims, bounds)
        write_raw_grid(grid, out)
        print(f"wrote {out} dims={','.join(map(str, grid.dims))} bytes={os.path.getsize(out)}")
    else:
        out = args.output or f"{args.field}.xyzv"
        pc = sample_scattered(spec, args.count, bounds, seed=args.seed)
        write_point_cloud(pc, out, bounds)
        print(f"wrote {out} points={len(pc)}")
    return EXIT_OK


def cmd_encode(args) -> int:
    if is_grid_file(args.input):
        grid = read_raw_grid(args.input)
        cfg = _encode_config(args, grid.dims, args.degree, args.nctrl)
        model, report = encode(grid, cfg)
        lines = report.lines()
        if runge_risk(cfg.nctrl, grid.dims, cfg.degree):
            lines.append(
                "warning: runge-risk: control count within 90% of the sample count with degree >= 3; "
                "expect overshoot near the boundaries"
            )
    else:
        pc = read_point_cloud(args.input)
        bounds = read_cloud_bounds(args.input)
        if args.nctrl is None:
            raise UsageError("encode: --nctrl is required for point-cloud input")
        if args.adaptive:
            raise UsageError("encode: --adaptive applies to grid input only")
        cfg = EncodeConfig(args.degree, args.nctrl, False, args.e_max, args.max_rounds, args.max_ctrl)
        model = fit_scattered_global(pc, cfg, bounds)
        pred = eval_points(model, model.normalize(pc.points))
        lo, hi = float(pc.values.min()), float(pc.values.max())
        err = float(np.max(np.abs(pred - pc.values)) / (hi - lo)) if hi > lo else float(np.max(np.abs(pred - pc.values)))
        lines = [f"scattered points={len(pc)} max_rel_error={err:.6e}"]
    out = args.output or os.path.splitext(args.input)[0] + ".mfa"
    save_model(model, out)
    lines.append(f"model={out} degree={','.join(map(str, model.degrees))} nctrl={','.join(map(str, model.nctrl))}")
    _write_text(None, lines)
    if args.report:
        _write_text(args.report, lines)
    return EXIT_OK


def _load_source(args):
    chosen = [x for x in (args.model, args.grid, args.analytic) if x is not None]
    if len(chosen) != 1:
        raise UsageError("render: give exactly one of --model, --grid or --analytic")
    if args.model is not None:
        return mfa_source(load_model(args.model))
    if args.grid is not None:
        if args.filter is None:
            raise UsageError("render: --grid needs --filter")
        return filter_source(read_raw_grid(args.grid), args.filter)
    args.field = args.analytic
    return analytic_source(_field_spec(args), _field_bounds(args))


def cmd_render(args) -> int:
    if args.filter is not None and args.grid is None:
        raise UsageError("render: --filter applies to --grid only")
    src = _load_source(args)
    if args.bounds is not None and args.analytic is None and not np.allclose(_bounds(args.bounds), src.bounds):
        raise ConfigError(f"--bounds {args.bounds} do not match the source bounds {src.bounds.ravel().tolist()}")
    spec = None
    if args.value_field is not None or args.analytic is not None:
        args.field = args.value_field or args.analytic
        spec = _field_spec(args)
    cfg = _render_config(args, src.bounds, spec)
    if args.value_field is not None:
        # gradient isolation: exact values, gradients from the chosen source
        values = analytic_source(spec, src.bounds)
        img = render(values, cfg, gradient_source=src, workers=args.workers)
    else:
        img = render(src, cfg, workers=args.workers)
    out = args.output or "render.ppm"
    (write_pam if args.alpha else write_ppm)(img, out)
    print(f"wrote {out} {img.width}x{img.height} source={src.name}")
    return EXIT_OK


def cmd_compare(args) -> int:
    a = read_image(args.image_a)
    b = read_image(args.image_b)
    rep = compare(a, b)
    print(rep.line())
    if args.heatmap:
        write_ppm(error_heatmap(a, b), args.heatmap)
    return EXIT_OK


def _query_times(model, n: int, seed: int) -> tuple[float, float]:
    """Mean wall time per value and per gradient query, in nanoseconds."""
    q = np.random.default_rng(seed).random((n, 3))
    eval_points(model, q[:8])
    eval_gradients(model, q[:8])
    t0 = time.perf_counter()
    eval_points(model, q)
    t1 = time.perf_counter()
    eval_gradients(model, q)
    t2 = time.perf_counter()
    return (t1 - t0) / n * 1e9, (t2 - t1) / n * 1e9


def cmd_sweep(args) -> int:
    if not args.degrees:
        raise UsageError("sweep: --degrees is empty")
    spec = _field_spec(args)
    bounds = _field_bounds(args)
    grid = sample_grid(spec, args.dims, bounds)
    nctrls = args.nctrls or [max(min(grid.dims) // 2, 2)]
    truth_src = analytic_source(spec, bounds)
    cfg = _render_config(args, bounds, spec)
    gradient_study = args.preset == "gradient"
    truth = render(truth_src, cfg, workers=args.workers)
    header = f"{'nctrl':>6} {'degree':>6} {'mse':>14} {'psnr':>12} {'ssim':>10} {'value_ns':>10} {'gradient_ns':>11}"
    lines = [header]
    for n in nctrls:
        for p in args.degrees:
            ecfg = EncodeConfig(p, n, args.adaptive, args.e_max, args.max_rounds, args.max_ctrl)
            model, _ = encode(grid, ecfg)
            src = mfa_source(model)
            if gradient_study:
                img = render(truth_src, cfg, gradient_source=src, workers=args.workers)
            else:
                img = render(src, cfg, workers=args.workers)
            rep = compare(img, truth)
            if args.timing:
                tv, tg = _query_times(model, args.queries, args.seed)
                times = f"{tv:10.1f} {tg:11.1f}"
            else:
                times = f"{'-':>10} {'-':>11}"
            psnr = "inf" if np.isinf(rep.psnr) else f"{rep.psnr:.6f}"
            lines.append(f"{n:>6} {p:>6} {rep.mse:14.6f} {psnr:>12} {rep.ssim:10.6f} {times}")
            log.info(lines[-1])
    _write_text(args.output, lines)
    return EXIT_OK


def bench_table(sources, sizes, field_spec, width, height, reps, degree=2, nctrl=None, workers=1, bounds=DEFAULT_BOUNDS):
    """Median render seconds per (source, size); repetitions interleave sources."""
    rows = []
    for size in sizes:
        grid = sample_grid(field_spec, (size, size, size), bounds)
        built = {}
        for name in sources:
            if name == "mfa":
                n = nctrl if nctrl is not None else max(size // 2, degree + 1)
                model, _ = encode(grid, EncodeConfig(degree, n))
                built[name] = mfa_source(model)
            elif name == "analytic":
                built[name] = analytic_source(field_spec, bounds)
            else:
                built[name] = filter_source(grid, name)
        cam = Camera.framing(bounds, width, height)
        cfg = RenderConfig(cam, parse_opacity("ramp:0:255:0.02"), parse_color("constant:1,0,0"))
        small = cfg.with_camera(width=4, height=4)
        for src in built.values():
            render(src, small)
        times = {name: [] for name in sources}
        for _ in range(reps):
            for name in sources:
                t0 = time.perf_counter()
                render(built[name], cfg, workers=workers)
                times[name].append(time.perf_counter() - t0)
        for name in sources:
            rows.append((name, size, float(np.median(times[name]))))
    return rows


def cmd_bench(args) -> int:
    bad = [s for s in args.sources if s not in BENCH_SOURCES]
    if bad or not args.sources:
        raise UsageError(f"bench: unknown sources {bad}; choose from {', '.join(BENCH_SOURCES)}")
    if not args.sizes or min(args.sizes) < 4:
        raise UsageError("bench: --sizes needs entries >= 4")
    rows = bench_table(
        args.sources, args.sizes, _field_spec(args), args.width, args.height, args.reps,
        args.degree, args.nctrl, args.workers, _field_bounds(args),
    )
    lines = [f"{'source':<12} {'size':>5} {'median_s':>12}"]
    lines += [f"{name:<12} {size:>5} {t:12.6f}" for name, size, t in rows]
    _write_text(args.output, lines)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mfadvr", description="MFA volume encoding, rendering and evaluation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="sample an analytic field to a raw grid or point cloud")
    _add_field_opts(p)
    p.add_argument("--dims", type=int_triple, default=None, help="grid samples per axis")
    p.add_argument("--count", type=positive_int, default=None, help="scattered sample count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("encode", help="fit an MFA model to a raw grid or point cloud")
    p.add_argument("--input", required=True)
    _add_encode_opts(p)
    p.add_argument("--output", default=None, help="model path (default: input with .mfa)")
    p.add_argument("--report", default=None, help="also write the report to this file")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("render", help="ray-cast an image from a model, a filtered grid or an analytic field")
    p.add_argument("--model", default=None)
    p.add_argument("--grid", default=None)
    p.add_argument("--filter", choices=FILTERS, default=None)
    p.add_argument("--analytic", choices=FIELDS, default=None)
    p.add_argument("--value-field", choices=FIELDS, default=None,
                   help="take values from this analytic field and only gradients from the source")
    p.add_argument("--value", type=float, default=0.0, help="value of the constant field")
    p.add_argument("--bounds", type=float_vec(6), default=None)
    _add_render_opts(p)
    p.add_argument("--alpha", action=argparse.BooleanOptionalAction, default=False, help="write RGBA PAM")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("compare", help="MSE, PSNR and SSIM between two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("--heatmap", default=None, help="write an error heatmap PPM")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="quality and query time over control counts and degrees")
    _add_field_opts(p)
    p.add_argument("--dims", type=int_triple, required=True)
    _add_encode_opts(p, lists=True)
    _add_render_opts(p)
    p.add_argument("--timing", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--queries", type=positive_int, default=20000, help="random queries per timing")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None, help="table path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="median render time per source and grid size")
    _add_field_opts(p, required=False)
    p.set_defaults(field="gaussian-beam")
    p.add_argument("--sources", type=lambda t: [s.strip() for s in t.split(",") if s.strip()],
                   default=list(BENCH_SOURCES[:4]))
    p.add_argument("--sizes", type=int_list, default=[16, 32, 64])
    p.add_argument("--width", type=positive_int, default=256)
    p.add_argument("--height", type=positive_int, default=256)
    p.add_argument("--reps", type=positive_int, default=5)
    p.add_argument("--degree", type=positive_int, default=2)
    p.add_argument("--nctrl", type=positive_int, default=None, help="default half of each size")
    p.add_argument("--workers", type=positive_int, default=1)
    p.add_argument("--output", default=None, help="table path (default stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def _expand_config(parser, argv: list[str]) -> list[str]:
    """Insert flags from ``--config FILE`` right after the subcommand name."""
    path = None
    rest = []
    i = 0
    while i < len(argv):
        a = argv[i]
        if a == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a file")
            path = argv[i + 1]
            i += 2
            continue
        if a.startswith("--config="):
            path = a.split("=", 1)[1]
        else:
            rest.append(a)
        i += 1
    if path is None:
        return rest
    subs = parser._subparsers._group_actions[0].choices
    pos = next((k for k, a in enumerate(rest) if a in subs), None)
    if pos is None:
        raise UsageError("--config needs a subcommand")
    return rest[: pos + 1] + _config_argv(subs[rest[pos]], read_config(path)) + rest[pos + 1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_expand_config(parser, argv))
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, UnsupportedOrderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FitError, RenderError, DomainError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except MfaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
