"""Command-line entry point: ``kleinforge <group> <command> [options]``.

Exit codes: 0 success, 1 validation or usage error, 2 file I/O error. Every
file written gets a sidecar ``<file>.manifest.json`` recording the command
line, seeds, tool version, SHA-256 of the inputs and a timestamp.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from kleinforge import __version__
from kleinforge import fields, flow, harmonics, sds, tda
from kleinforge.space import KleinSpace

THREADS_ENV = "KLEINFORGE_THREADS"
DEFAULT_SEED = 0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# run context

class Run:
    def __init__(self, argv, args):
        self.argv = list(argv)
        self.args = args
        self.inputs: list[str] = []
        self.seeds: dict = {}

    def read(self, path) -> str:
        self.inputs.append(str(path))
        return str(path)

    def manifest(self, out_path) -> str:
        digests = {}
        for p in self.inputs:
            digests[p] = hashlib.sha256(Path(p).read_bytes()).hexdigest()
        record = {
            "command": ["kleinforge", *self.argv],
            "seeds": self.seeds,
            "version": __version__,
            "inputs": digests,
            "output": Path(out_path).name,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        path = f"{out_path}.manifest.json"
        with open(path, "w") as fh:
            json.dump(record, fh, indent=1)
        return Path(path).name


def resolve_threads(value) -> int:
    if value is None:
        env = os.environ.get(THREADS_ENV)
        if env is None or env == "":
            return 1
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
    if value < 1:
        raise ValueError("thread count must be >= 1")
    return int(value)


def _load_space(run: Run) -> KleinSpace:
    return KleinSpace.from_json(run.read(run.args.spec))


def _load_field(run: Run, space: KleinSpace, want: str | None = None):
    f, kind = fields.load_field(run.read(run.args.field), space)
    if want is not None and kind != want:
        raise ValueError(f"expected a {want} field, got a {kind} field")
    return f, kind


def _write_json(run: Run, obj: dict, path):
    obj = dict(obj)
    obj["manifest"] = f"{Path(path).name}.manifest.json"
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
    run.manifest(path)


def _read_floats(path) -> np.ndarray:
    vals = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            vals.append(float(line))
    return np.asarray(vals)


def _grid_points(space: KleinSpace, grid: int):
    if grid < 1:
        raise ValueError("grid must be >= 1")
    t = (np.arange(grid) + 0.5) / grid
    mesh = np.meshgrid(*([t] * space.dim), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    return pts[:, :space.k1], pts[:, space.k1:]


def _coord_names(space: KleinSpace):
    return [f"x{i + 1}" for i in range(space.k1)] + [f"y{j + 1}" for j in range(space.k2)]


# space

def cmd_space_info(run: Run):
    space = _load_space(run)
    print(f"k1={space.k1}")
    print(f"k2={space.k2}")
    print(f"mode={space.mode}")
    if space.mode == "diagonal":
        print(f"rank(B)={space.gf2_rank()}")
        ht = space.hidden_tori()
        if ht.duplicate_column_classes:
            classes = "; ".join(",".join(f"y{j + 1}" for j in c) for c in ht.duplicate_column_classes)
            print(f"hidden tori: {classes} (GF(2) rank deficiency {ht.gf2_rank_deficiency})")
        elif ht.gf2_rank_deficiency:
            print(f"hidden tori: GF(2) rank deficiency {ht.gf2_rank_deficiency}")
        else:
            print("hidden tori: none")
    distinct = {h.tobytes() for _, h in space.parity_classes()}
    print(f"holonomy group order={len(distinct)}")
    return 0


def _parse_point(text: str, space: KleinSpace):
    vals = [float(v) for v in text.replace(" ", "").split(",") if v]
    if len(vals) != space.dim:
        raise ValueError(f"point needs {space.dim} coordinates, got {len(vals)}")
    return np.asarray(vals[:space.k1]), np.asarray(vals[space.k1:])


def cmd_space_canon(run: Run):
    space = _load_space(run)
    a = run.args
    if (a.point is None) == (a.input is None):
        raise ValueError("give exactly one of --point or --in")
    if a.point is not None:
        x, y = _parse_point(a.point, space)
        xc, yc, ga, gb = space.canonicalize(x, y)
        print("canonical=" + ",".join(repr(float(v)) for v in np.concatenate([xc, yc])))
        print("a=" + ",".join(str(int(v)) for v in ga))
        print("b=" + ",".join(str(int(v)) for v in gb))
        return 0
    pts = np.loadtxt(run.read(a.input), delimiter=",", comments="#", ndmin=2)
    if pts.shape[1] != space.dim:
        raise ValueError(f"points need {space.dim} columns")
    xc, yc, ga, gb = space.canonicalize(pts[:, :space.k1], pts[:, space.k1:])
    names = _coord_names(space)
    header = names + [f"a{i + 1}" for i in range(space.k1)] + [f"b{j + 1}" for j in range(space.k2)]
    lines = [",".join(header)]
    for row in range(pts.shape[0]):
        vals = [repr(float(v)) for v in np.concatenate([xc[row], yc[row]])]
        vals += [str(int(v)) for v in np.concatenate([ga[row], gb[row]])]
        lines.append(",".join(vals))
    _emit(run, "\n".join(lines) + "\n", a.out)
    return 0


def _emit(run: Run, text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
        run.manifest(out)


def cmd_space_generators(run: Run):
    space = _load_space(run)
    rels = space.basic_generators() if run.args.basic else space.reduced_generators()
    lines = ["family,a,b"]
    for r in rels:
        lines.append(f"{r.family},{' '.join(map(str, r.element.a))},{' '.join(map(str, r.element.b))}")
    _emit(run, "\n".join(lines) + "\n", run.args.out)
    return 0


# field

def cmd_field_sample_scalar(run: Run):
    space = _load_space(run)
    f, _ = _load_field(run, space, "scalar")
    x, y = _grid_points(space, run.args.grid)
    vals = np.asarray(f(x, y), dtype=float)
    names = _coord_names(space)
    with open(run.args.out, "w") as fh:
        fh.write(",".join(names) + ",value\n")
        for p, v in zip(np.concatenate([x, y], axis=1), vals):
            fh.write(",".join(repr(float(c)) for c in p) + f",{float(v)!r}\n")
    run.manifest(run.args.out)
    if run.args.svg:
        if space.dim != 2:
            raise ValueError("SVG heatmaps need k1 + k2 = 2")
        Path(run.args.svg).write_text(heatmap_svg(vals.reshape(run.args.grid, run.args.grid)))
        run.manifest(run.args.svg)
    return 0


def heatmap_svg(values: np.ndarray, cell: int = 2) -> str:
    """Diverging red-white-blue heatmap; white is zero, red positive, blue negative.

    ``values[i, j]`` is the sample at x index i, y index j; y increases upward.
    """
    nx, ny = values.shape
    scale = float(np.max(np.abs(values))) or 1.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{nx * cell}" height="{ny * cell}" '
             f'viewBox="0 0 {nx * cell} {ny * cell}" shape-rendering="crispEdges">']
    for i in range(nx):
        for j in range(ny):
            t = float(values[i, j]) / scale
            if t >= 0:
                rgb = (255, round(255 * (1 - t)), round(255 * (1 - t)))
            else:
                rgb = (round(255 * (1 + t)), round(255 * (1 + t)), 255)
            parts.append(f'<rect x="{i * cell}" y="{(ny - 1 - j) * cell}" width="{cell}" height="{cell}" '
                         f'fill="#{rgb[0]:02x}{rgb[1]:02x}{rgb[2]:02x}"/>')
    parts.append("</svg>\n")
    return "\n".join(parts)


def cmd_field_sample_vector(run: Run):
    space = _load_space(run)
    f, _ = _load_field(run, space, "vector")
    x, y = _grid_points(space, run.args.grid)
    X, Y = f(x, y)
    names = _coord_names(space)
    comps = [f"X{i + 1}" for i in range(space.k1)] + [f"Y{j + 1}" for j in range(space.k2)]
    with open(run.args.out, "w") as fh:
        fh.write(",".join(names + comps) + "\n")
        for row in np.concatenate([x, y, np.asarray(X), np.asarray(Y)], axis=1):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    run.manifest(run.args.out)
    return 0


def cmd_field_check(run: Run):
    space = _load_space(run)
    f, kind = _load_field(run, space)
    a = run.args
    run.seeds["sampling"] = a.seed
    check = fields.check_scalar_symmetry if kind == "scalar" else fields.check_vector_symmetry
    rep = check(f, space, n_samples=a.samples, tol=a.tol, seed=a.seed)
    status = "PASS" if rep.passed else "FAIL"
    g = rep.worst_generator
    print(f"{status} kind={kind} max_residual={rep.max_residual:.3e} tol={a.tol:g} samples={a.samples}")
    if g is not None:
        print(f"worst point={rep.worst_point} generator a={list(g.a)} b={list(g.b)}")
    return 0 if rep.passed else 1


# harmonics

def cmd_harmonics_basis(run: Run):
    space = _load_space(run)
    a = run.args
    basis = harmonics.fourier_basis(space, a.kind, a.lmax, a.zmax, workers=run.threads)
    _write_json(run, basis.to_dict(), a.out)
    print(f"{len(basis.functions)} real basis functions from {len(basis.blocks)} blocks "
          f"({len(basis.incomplete)} incomplete orbits skipped)")
    return 0


# flow

def cmd_flow_streamlines(run: Run):
    space = _load_space(run)
    f, _ = _load_field(run, space, "vector")
    a = run.args
    trajs = flow.streamline_grid(f, space, a.grid, a.step, a.steps, a.every)
    flow.write_csv(trajs, a.out, space)
    run.manifest(a.out)
    return 0


# sds

def cmd_sds_generate(run: Run):
    a = run.args
    transit_seed = a.transit_seed if a.transit_seed is not None else a.seed + 1
    run.seeds.update(graph=a.seed, transit=transit_seed)
    graph = sds.generate_graph(a.nodes, a.density, a.seed, a.max_tries)
    net = sds.SpikeNet.from_graph(graph, a.delta, transit_seed, (a.lo, a.hi))
    d = net.to_dict()
    d["realized_density"] = graph.density
    d["diameter"] = graph.diameter()
    d["tries"] = graph.tries
    print(f"nodes={graph.n} edges={len(graph.edges)} density={graph.density:.5f} "
          f"diameter={d['diameter']} tries={graph.tries}", file=sys.stderr if a.out is None else sys.stdout)
    if a.out is None:
        json.dump(d, sys.stdout, indent=1)
        sys.stdout.write("\n")
    else:
        _write_json(run, d, a.out)
    return 0


def cmd_sds_run(run: Run):
    a = run.args
    net = sds.SpikeNet.from_json(run.read(a.graph))
    run.seeds.update({k: v for k, v in net.seeds.items() if k in ("graph", "transit")})
    if a.spikes is None and a.max_time is None:
        raise ValueError("give --spikes and/or --max-time")
    rec = sds.simulate(net, a.kick, a.observe, max_time=a.max_time, max_spikes=a.spikes)
    sds.write_spikes_csv(rec, a.out)
    run.manifest(a.out)
    return 0


def cmd_sds_isi(run: Run):
    a = run.args
    rec = sds.read_spikes_csv(run.read(a.spikes))
    if not 0 <= a.node < len(rec.times):
        raise ValueError(f"node {a.node} never appears in the spike file")
    isi = sds.extract_isi(rec, a.node, a.burn_in)
    with open(a.out, "w") as fh:
        for v in isi.intervals:
            fh.write(f"{float(v)!r}\n")
    run.manifest(a.out)
    msg = f"intervals={isi.intervals.size} min={isi.intervals.min():.6g}"
    if isi.intervals.size >= 4:
        p = sds.detect_period(isi, a.period_tol)
        msg += f" period={p if p is not None else 'none'}"
    print(msg)
    return 0


# isi / tda

def cmd_isi_embed(run: Run):
    a = run.args
    seq = _read_floats(run.read(a.input))
    cloud = tda.window_embed(seq, a.window, a.dedup, source=a.input)
    with open(a.out, "w") as fh:
        for p in cloud.points:
            fh.write(",".join(repr(float(v)) for v in p) + "\n")
    run.manifest(a.out)
    print(f"windows={seq.size - a.window + 1} points={len(cloud)}")
    return 0


def cmd_isi_dim2nn(run: Run):
    a = run.args
    pts = tda.read_cloud_csv(run.read(a.input))
    est = tda.dim_2nn(pts, a.discard, a.method)
    print(f"d_hat={est.d_hat:.6f} n_used={est.n_used} method={est.method} discard={est.discard_fraction:g}")
    return 0


def cmd_isi_rips(run: Run):
    a = run.args
    pts = tda.read_cloud_csv(run.read(a.input))
    dgms = tda.rips_persistence(pts, a.rmax, a.max_degree, a.max_points)
    tda.write_diagrams_csv(dgms, a.out)
    run.manifest(a.out)
    print(" ".join(f"H{d.degree}={len(d.pairs)}" for d in dgms))
    return 0


def cmd_isi_profile(run: Run):
    a = run.args
    seq = _read_floats(run.read(a.input))
    if a.wmin < 1 or a.wmax < a.wmin:
        raise ValueError("need 1 <= wmin <= wmax")
    rows = tda.dimension_profile(seq, range(a.wmin, a.wmax + 1), a.dedup, a.discard, a.method)
    text = "W,d_hat,n_points\n" + "".join(f"{w},{d!r},{n}\n" for w, d, n in rows)
    _emit(run, text, a.out)
    return 0


# parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed for all randomness (default 0)")
    common.add_argument("--threads", type=int, default=None, help=f"worker cap (fallback ${THREADS_ENV}, else 1)")

    p = _Parser(prog="kleinforge", description="Generalised Klein bottles and spiking-network point clouds.")
    p.add_argument("--version", action="version", version=f"kleinforge {__version__}")
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def leaf(sub, name, func, help_):
        q = sub.add_parser(name, parents=[common], help=help_)
        q.set_defaults(func=func)
        return q

    g = groups.add_parser("space", help="space specs: info, canonical points, generators")
    s = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = leaf(s, "info", cmd_space_info, "dimensions, GF(2) rank, hidden tori")
    q.add_argument("--spec", required=True)
    q = leaf(s, "canon", cmd_space_canon, "fold points into the fundamental domain")
    q.add_argument("--spec", required=True)
    q.add_argument("--point", help="comma-separated x..., y...")
    q.add_argument("--in", dest="input", help="CSV of points, one per row")
    q.add_argument("--out")
    q = leaf(s, "generators", cmd_space_generators, "list group relations to test symmetry against")
    q.add_argument("--spec", required=True)
    q.add_argument("--basic", action="store_true", help="basic instead of reduced generators")
    q.add_argument("--out")

    g = groups.add_parser("field", help="sample and check symmetric fields")
    s = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = leaf(s, "sample-scalar", cmd_field_sample_scalar, "sample a scalar field on a grid")
    q.add_argument("--spec", required=True)
    q.add_argument("--field", required=True)
    q.add_argument("--grid", type=int, default=256)
    q.add_argument("--out", required=True)
    q.add_argument("--svg", help="also write a heatmap (2-d spaces only)")
    q = leaf(s, "sample-vector", cmd_field_sample_vector, "sample a vector field on a grid")
    q.add_argument("--spec", required=True)
    q.add_argument("--field", required=True)
    q.add_argument("--grid", type=int, default=32)
    q.add_argument("--out", required=True)
    q = leaf(s, "check", cmd_field_check, "randomised symmetry check")
    q.add_argument("--spec", required=True)
    q.add_argument("--field", required=True)
    q.add_argument("--samples", type=int, default=1000)
    q.add_argument("--tol", type=float, default=1e-10)

    g = groups.add_parser("harmonics", help="exact Fourier bases of symmetric fields")
    s = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = leaf(s, "basis", cmd_harmonics_basis, "solve every orbit block in a frequency box")
    q.add_argument("--spec", required=True)
    q.add_argument("--kind", choices=("scalar", "vector"), default="scalar")
    q.add_argument("--lmax", type=int, default=3)
    q.add_argument("--zmax", type=int, default=3)
    q.add_argument("--out", required=True)

    g = groups.add_parser("flow", help="streamlines of vector fields")
    s = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = leaf(s, "streamlines", cmd_flow_streamlines, "RK4 streamlines from a seed grid")
    q.add_argument("--spec", required=True)
    q.add_argument("--field", required=True)
    q.add_argument("--grid", type=int, default=12)
    q.add_argument("--step", type=float, default=flow.DEFAULT_STEP)
    q.add_argument("--steps", type=int, default=20000)
    q.add_argument("--every", type=int, default=1, help="record every n-th step")
    q.add_argument("--out", required=True)

    g = groups.add_parser("sds", help="spiking dynamical systems")
    s = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = leaf(s, "generate", cmd_sds_generate, "random strongly connected network with transit times")
    q.add_argument("--nodes", type=int, required=True)
    q.add_argument("--density", type=float, required=True)
    q.add_argument("--delta", type=float, default=0.05, help="refractory period (default 0.05)")
    q.add_argument("--lo", type=float, default=sds.DEFAULT_TRANSIT[0])
    q.add_argument("--hi", type=float, default=sds.DEFAULT_TRANSIT[1])
    q.add_argument("--transit-seed", type=int, default=None, help="default: --seed + 1")
    q.add_argument("--max-tries", type=int, default=1000)
    q.add_argument("--out")
    q = leaf(s, "run", cmd_sds_run, "simulate from a single kick")
    q.add_argument("--graph", required=True)
    q.add_argument("--kick", type=int, default=0)
    q.add_argument("--observe", type=int, default=0)
    q.add_argument("--spikes", type=int, default=None, help="stop after this many firings of --observe")
    q.add_argument("--max-time", type=float, default=None)
    q.add_argument("--out", required=True)
    q = leaf(s, "isi", cmd_sds_isi, "inter-spike intervals of one node")
    q.add_argument("--spikes", required=True)
    q.add_argument("--node", type=int, default=0)
    q.add_argument("--burn-in", type=int, default=sds.DEFAULT_BURN_IN)
    q.add_argument("--period-tol", type=float, default=1e-9)
    q.add_argument("--out", required=True)

    g = groups.add_parser("isi", help="point clouds from ISI sequences")
    s = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = leaf(s, "embed", cmd_isi_embed, "sliding-window embedding")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--window", type=int, required=True)
    q.add_argument("--dedup", type=float, default=0.0)
    q.add_argument("--out", required=True)
    q = leaf(s, "dim2nn", cmd_isi_dim2nn, "2NN intrinsic dimension")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--discard", type=float, default=0.1)
    q.add_argument("--method", choices=("mle", "cdf_fit"), default="mle")
    q = leaf(s, "rips", cmd_isi_rips, "Rips persistence in degrees 0 and 1")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--rmax", type=float, required=True)
    q.add_argument("--max-degree", type=int, choices=(0, 1), default=1)
    q.add_argument("--max-points", type=int, default=tda.MAX_RIPS_POINTS)
    q.add_argument("--out", required=True)
    q = leaf(s, "profile", cmd_isi_profile, "2NN dimension against window length")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--wmin", type=int, default=2)
    q.add_argument("--wmax", type=int, default=40)
    q.add_argument("--dedup", type=float, default=0.0)
    q.add_argument("--discard", type=float, default=0.1)
    q.add_argument("--method", choices=("mle", "cdf_fit"), default="mle")
    q.add_argument("--out")
    return p


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        print("see FORMATS.md or `kleinforge <group> <command> --help` for flags and file schemas", file=sys.stderr)
        return 1
    run = Run(argv, args)
    try:
        run.threads = resolve_threads(args.threads)
        return int(args.func(run) or 0)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, RuntimeError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
