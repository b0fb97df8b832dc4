"""``spskit`` command line.

Exit status: 0 on success, 1 for invalid input or usage, 2 when a
computation cannot complete (size caps, every shot rejected).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .basis import MAX_QUBITS, format_ket, parse_ket
from .editmap import DEFAULT_TOL, EditMapSet, LocalUnitary, build_edit_map
from .metrics import EmptyPostselection, fidelity_curve
from .models import Circuit, build_model, default_initial_state, rocky_initial_states
from .oracle import (OracleTooLarge, compose_step, oracle_partition, verify_projector_commutation,
                     verify_theorem1)
from .pathfind import SearchCache, chi, failure_rate, max_depth, verdict
from .sim import (NoiseSpec, default_workers, ideal_distribution, read_records, sample_measurements,
                  write_records)
from .sps import SubspaceTooLarge, enumerate_sps, partition_hilbert

COMPUTE_ERRORS = (SubspaceTooLarge, OracleTooLarge, EmptyPostselection, MemoryError)


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    """Everything needed to regenerate an output file; written into its header."""

    command: str
    model: str | None = None
    n: int | None = None
    theta: float | None = None
    boundary: str | None = None
    tol: float | None = None
    init: str | None = None
    steps: int | None = None
    shots: int | None = None
    eps3: float | None = None
    mu: list | None = None
    seed: int | None = None
    floor: float | str | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None and v != {}}


def _header_lines(cfg: RunConfig) -> str:
    return f"# spskit {__version__}\n# config={json.dumps(cfg.to_dict(), sort_keys=True)}\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        sys.stdout.write(text)


def _csv_text(cfg: RunConfig, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(_header_lines(cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# -- model loading --------------------------------------------------------------


def _n_arg(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid qubit count {text!r}") from None
    if not 1 <= n <= MAX_QUBITS:
        raise argparse.ArgumentTypeError(f"n must be in 1..{MAX_QUBITS}, got {n}")
    return n


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=["hop", "heis", "t6", "f4"], help="built-in model")
    p.add_argument("--custom", help="JSON circuit file: {n, steps: [[[unitary, ...], ...], ...]}")
    p.add_argument("--n", type=_n_arg, required=False)
    p.add_argument("--theta", type=float, default=0.1)
    p.add_argument("--boundary", choices=["controls", "frozen"], default="controls")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)


def load_custom(path: str) -> Circuit:
    """Circuit from JSON; ``steps[i]`` is used at steps ``i+1, i+1+T, ...``."""
    obj = json.loads(Path(path).read_text())
    n = int(obj["n"])
    steps = obj["steps"]
    if not steps:
        raise ValueError("custom circuit has no steps")
    given = [tuple(tuple(LocalUnitary.from_json(g).check_unitary() for g in layer) for layer in step)
             for step in steps]
    T = len(given)
    # Circuit uses templates[j % T] at step j
    templates = tuple(given[(t - 1) % T] for t in range(T))
    return Circuit(n, templates, obj.get("name", Path(path).stem))


def _model(args) -> tuple[Circuit, EditMapSet, str]:
    if args.custom:
        c = load_custom(args.custom)
        return c, c.edit_maps(args.tol), c.name
    if not args.model:
        raise UsageError("one of --model or --custom is required")
    if args.n is None:
        raise UsageError("--n is required with --model")
    c, maps = build_model(args.model, args.n, theta=args.theta, tol=args.tol, boundary=args.boundary)
    return c, maps, args.model


def _ket(text: str | None, n: int, flag: str) -> int:
    if text is None:
        raise UsageError(f"{flag} is required")
    return parse_ket(text, n)


def _config(args, **kw) -> RunConfig:
    base = dict(command=args.cmd_name, model=getattr(args, "model", None) or getattr(args, "custom", None),
                n=getattr(args, "n", None), theta=getattr(args, "theta", None),
                boundary=getattr(args, "boundary", None), tol=getattr(args, "tol", None))
    base.update(kw)
    return RunConfig(**base)


# -- editmap ----------------------------------------------------------------------


def cmd_editmap_build(args) -> int:
    if args.unitary:
        U = LocalUnitary.from_json(json.loads(Path(args.unitary).read_text()))
        obj = build_edit_map(U, args.tol).to_json()
    else:
        obj = _model(args)[1].to_json()
    _emit(json.dumps(obj, indent=1) + "\n", args.out)
    return 0


# -- sps --------------------------------------------------------------------------


def cmd_sps_enum(args) -> int:
    c, maps, _ = _model(args)
    G = enumerate_sps(maps, _ket(args.init, maps.n, "--init"), cap=args.cap)
    _emit(G.dumps(), args.out)
    return 0


def cmd_sps_partition(args) -> int:
    c, maps, _ = _model(args)
    parts = partition_hilbert(maps, cap=args.cap)
    cfg = _config(args)
    if args.sizes_only:
        text = _csv_text(cfg, ["seed", "size"], [[format_ket(G.seed, maps.n), len(G)] for G in parts])
    else:
        text = _header_lines(cfg) + "".join(G.dumps() for G in parts)
    _emit(text, args.out)
    return 0


# -- path -------------------------------------------------------------------------


def cmd_path_min(args) -> int:
    c, maps, _ = _model(args)
    r = chi(maps, _ket(args.state, maps.n, "--state"), args.mu)
    print(f"{format_ket(r.minimum, maps.n)} depth={r.depth} expanded={r.nodes_expanded}")
    return 0


def cmd_path_failrate(args) -> int:
    c, maps, _ = _model(args)
    cache = SearchCache()
    rows = []
    for mu in args.mu:
        fr = failure_rate(maps, mu, sample=args.sample, seed=args.seed, cache=cache)
        rows.append([maps.n, mu, fr.failures, fr.total, f"{fr.rate:.6f}", f"{fr.ci_low:.6f}", f"{fr.ci_high:.6f}"])
    cfg = _config(args, mu=list(args.mu), seed=args.seed if args.sample else None,
                  extra={"sample": args.sample} if args.sample else {})
    _emit(_csv_text(cfg, ["n", "mu", "failures", "total", "rate", "ci_low", "ci_high"], rows), args.out)
    return 0


def cmd_path_depth(args) -> int:
    c, maps, _ = _model(args)
    d, b = max_depth(maps, args.mu)
    print(f"depth={d} state={format_ket(b, maps.n)}")
    return 0


def cmd_path_verdict(args) -> int:
    c, maps, _ = _model(args)
    ok = verdict(maps, _ket(args.init, maps.n, "--init"), _ket(args.state, maps.n, "--state"), args.mu)
    print("accept" if ok else "reject")
    return 0


# -- sim --------------------------------------------------------------------------


def _eps3(text: str) -> float:
    v = float(text)
    if not 0 <= 3 * v <= 1:
        raise argparse.ArgumentTypeError(f"eps3 must be in [0, 1/3], got {v}")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def cmd_sim_run(args) -> int:
    c, maps, name = _model(args)
    psi0 = _ket(args.init, c.n, "--init")
    noise = NoiseSpec(args.eps3, args.seed)
    cfg = _config(args, init=format_ket(psi0, c.n), steps=args.steps, shots=args.shots,
                  eps3=args.eps3, seed=args.seed)
    header = {"tool": "spskit", "version": __version__, "config": cfg.to_dict(), "model": name,
              "n": c.n, "theta": args.theta, "boundary": args.boundary, "tol": args.tol,
              "eps": 3 * args.eps3, "M": args.shots, "base_seed": args.seed,
              "init": format_ket(psi0, c.n), "steps": args.steps}
    if args.custom:
        header["custom"] = args.custom
    recs = (sample_measurements(c, psi0, p, args.shots, noise, args.workers) for p in range(args.steps + 1))
    if not args.out:
        raise UsageError("--out is required")
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_records(args.out, recs, header)
    return 0


# -- metrics ----------------------------------------------------------------------


def _floor(text: str):
    if text == "auto":
        return "auto"
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("floor must be > 0")
    return v


def _mu_arg(text: str):
    if text == "exact":
        return "exact"
    return _positive(text)


def _circuit_from_header(h: dict) -> tuple[Circuit, EditMapSet]:
    tol = float(h.get("tol", DEFAULT_TOL))
    if "custom" in h:
        c = load_custom(h["custom"])
        return c, c.edit_maps(tol)
    return build_model(h["model"], int(h["n"]), theta=float(h.get("theta", 0.1)), tol=tol,
                       boundary=h.get("boundary", "controls"))


def cmd_metrics_curve(args) -> int:
    header, recs = read_records(args.record)
    c, maps = _circuit_from_header(header)
    psi0 = parse_ket(header["init"], c.n)
    ideal = [ideal_distribution(c, psi0, r.p) for r in recs]
    floor = None if args.floor == "auto" else args.floor
    cfg = RunConfig("metrics curve", model=header.get("model"), n=c.n, init=header["init"],
                    mu=list(args.mu), floor=args.floor, seed=header.get("base_seed"),
                    extra={"record": header.get("config", {})})
    curve = fidelity_curve(recs, ideal, maps, psi0, args.mu, floor,
                           meta={"spskit": __version__, "config": json.dumps(cfg.to_dict(), sort_keys=True)})
    _emit(curve.csv_text(), args.out)
    if args.emit_gnuplot:
        curve.write_gnuplot(args.emit_gnuplot)
    empties = [(r.p, s) for r in curve.rows for s, k in r.M_kept.items() if k == 0]
    if empties:
        print(f"post-selection kept no shots at (p, selector) = {empties}", file=sys.stderr)
        return 2
    return 0


# -- oracle -----------------------------------------------------------------------


def cmd_oracle_verify(args) -> int:
    c, maps, name = _model(args)
    steps = [compose_step(c, j, cap=args.cap) for j in range(1, len(c.templates) + 1)]
    oracle = oracle_partition(steps, args.tol)
    sps = partition_hilbert(maps)
    same = {G.members for G in oracle} == {G.members for G in sps}
    rep = verify_theorem1(c, trials=args.trials, seed=args.seed, tol=args.tol, cap=args.cap)
    comm = max(verify_projector_commutation(U, G) for U in steps for G in oracle)
    union = 0.0
    if len(oracle) > 1:
        union = max(verify_projector_commutation(U, [oracle[i], oracle[i + 1]])
                    for U in steps for i in range(len(oracle) - 1))
    ok = same and rep.passed() and comm < 1e-10 and union < 1e-10
    print(f"model={name} n={c.n} components={len(oracle)}")
    print(f"partition_match={'pass' if same else 'FAIL'}")
    print(f"theorem1_max_violation={rep.max_violation:.3e} {'pass' if rep.passed() else 'FAIL'}")
    print(f"projector_residual={comm:.3e} {'pass' if comm < 1e-10 else 'FAIL'}")
    print(f"union_residual={union:.3e} {'pass' if union < 1e-10 else 'FAIL'}")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 2


# -- repro ------------------------------------------------------------------------


def repro_fig1() -> tuple[list[int], bool]:
    c, maps = build_model("hop", 4)
    parts = partition_hilbert(maps)
    sizes = [len(G) for G in parts]
    oracle = oracle_partition(compose_step(c))
    return sizes, {G.members for G in parts} == {G.members for G in oracle}


def cmd_repro(args) -> int:
    fig = args.figure
    if fig == "fig1":
        sizes, same = repro_fig1()
        print(",".join(map(str, sizes)))
        print(f"oracle_match={'pass' if same else 'FAIL'}")
        return 0 if same else 2
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
    cfg = RunConfig(f"repro {fig}", extra={"full": args.full})

    def emit(name: str, text: str):
        if out:
            (out / name).write_text(text)
        else:
            sys.stdout.write(text)

    if fig == "fig3":
        hi = 16 if args.full else 12
        rows, summary = [], []
        for model in ("heis", "t6", "f4"):
            for n in range(6, hi + 1):
                parts = partition_hilbert(build_model(model, n)[1])
                sizes = [len(G) for G in parts]
                rows += [[model, n, format_ket(G.seed, n), len(G)] for G in parts]
                summary.append([model, n, len(parts), sum(s > 1 for s in sizes), f"{math.log2(max(sizes)):.4f}"])
        emit("fig3_sizes.csv", _csv_text(cfg, ["model", "n", "seed", "size"], rows))
        emit("fig3_summary.csv", _csv_text(cfg, ["model", "n", "subspaces", "nontrivial", "log2_max"], summary))
        return 0
    if fig == "fig4":
        hi = 14 if args.full else 12
        rows = []
        for model, mus in (("heis", (1,)), ("t6", (1, 2)), ("f4", (1, 2, 3, 4, 5))):
            for n in range(6, hi + 1):
                maps = build_model(model, n)[1]
                cache = SearchCache()
                for mu in mus:
                    fr = failure_rate(maps, mu, cache=cache)
                    rows.append([model, n, mu, fr.failures, fr.total, f"{fr.rate:.6f}",
                                 f"{fr.ci_low:.6f}", f"{fr.ci_high:.6f}"])
        emit("fig4_failrate.csv",
             _csv_text(cfg, ["model", "n", "mu", "failures", "total", "rate", "ci_low", "ci_high"], rows))
        return 0
    if fig == "fig5":
        n = 15 if args.full else 11
        shots = args.shots or 10_000
        for model, mus in (("heis", [1]), ("t6", [1, 2])):
            c, maps = build_model(model, n)
            psi0 = default_initial_state(model, n)
            curve = _curve(c, maps, psi0, 2 * n, shots, 0.02, args.seed, mus, args.workers, cfg, model)
            emit(f"fig5_{model}.csv", curve.csv_text())
        return 0
    if fig == "fig6":
        states = rocky_initial_states() if args.full else rocky_initial_states()[:3]
        shots = args.shots or (5000 if args.full else 500)
        c, maps = build_model("f4", 15)
        for eps3 in (0.0, 0.02):
            for i, psi0 in enumerate(states):
                curve = _curve(c, maps, psi0, 29, shots, eps3, args.seed, [5, 9], args.workers, cfg, "f4")
                emit(f"fig6_eps{eps3:g}_{format_ket(psi0, 15)}.csv", curve.csv_text())
        return 0
    raise UsageError(f"unknown figure {fig}")


def _curve(c, maps, psi0, steps, shots, eps3, seed, mus, workers, cfg, model):
    noise = NoiseSpec(eps3, seed)
    recs = [sample_measurements(c, psi0, p, shots, noise, workers) for p in range(steps + 1)]
    ideal = [ideal_distribution(c, psi0, p) for p in range(steps + 1)]
    meta = {"spskit": __version__, "model": model, "n": c.n, "init": format_ket(psi0, c.n),
            "eps3": eps3, "shots": shots, "base_seed": seed,
            "config": json.dumps(cfg.to_dict(), sort_keys=True)}
    return fidelity_curve(recs, ideal, maps, psi0, mus, meta=meta)


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spskit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"spskit {__version__}")
    sub = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def leaf(group_sub, name, func, model=True):
        p = group_sub.add_parser(name)
        if model:
            _add_model_args(p)
        p.set_defaults(func=func)
        return p

    g = sub.add_parser("editmap").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = leaf(g, "build", cmd_editmap_build)
    p.add_argument("--unitary", help="LocalUnitary JSON file")
    p.add_argument("--out")

    g = sub.add_parser("sps").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = leaf(g, "enum", cmd_sps_enum)
    p.add_argument("--init")
    p.add_argument("--cap", type=_positive, default=1 << 28)
    p.add_argument("--out")
    p = leaf(g, "partition", cmd_sps_partition)
    p.add_argument("--sizes-only", action="store_true")
    p.add_argument("--cap", type=_positive, default=1 << 28)
    p.add_argument("--out")

    g = sub.add_parser("path").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = leaf(g, "min", cmd_path_min)
    p.add_argument("--state")
    p.add_argument("--mu", type=_positive, default=1)
    p = leaf(g, "failrate", cmd_path_failrate)
    p.add_argument("--mu", type=_positive, nargs="+", default=[1])
    p.add_argument("--sample", type=_positive, help="sample this many states instead of all 2**n")
    p.add_argument("--seed", type=_nonneg, default=0)
    p.add_argument("--out")
    p = leaf(g, "depth", cmd_path_depth)
    p.add_argument("--mu", type=_positive, default=1)
    p = leaf(g, "verdict", cmd_path_verdict)
    p.add_argument("--init")
    p.add_argument("--state")
    p.add_argument("--mu", type=_positive, default=1)

    g = sub.add_parser("sim").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = leaf(g, "run", cmd_sim_run)
    p.add_argument("--init")
    p.add_argument("--steps", type=_nonneg, required=True)
    p.add_argument("--shots", type=_positive, required=True)
    p.add_argument("--eps3", type=_eps3, default=0.0)
    p.add_argument("--seed", type=_nonneg, default=0)
    p.add_argument("--workers", type=_positive, default=None)
    p.add_argument("--out")

    g = sub.add_parser("metrics").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = leaf(g, "curve", cmd_metrics_curve, model=False)
    p.add_argument("--record", required=True)
    p.add_argument("--mu", type=_mu_arg, nargs="+", default=[1])
    p.add_argument("--floor", type=_floor, default="auto")
    p.add_argument("--out")
    p.add_argument("--emit-gnuplot", metavar="PATH")

    g = sub.add_parser("oracle").add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = leaf(g, "verify", cmd_oracle_verify)
    p.add_argument("--trials", type=_positive, default=20)
    p.add_argument("--seed", type=_nonneg, default=0)
    p.add_argument("--cap", type=_positive, default=10)

    p = sub.add_parser("repro")
    p.add_argument("figure", choices=["fig1", "fig3", "fig4", "fig5", "fig6"])
    p.add_argument("--full", action="store_true", help="full-size runs (n up to 17) instead of the small defaults")
    p.add_argument("--shots", type=_positive)
    p.add_argument("--seed", type=_nonneg, default=7)
    p.add_argument("--workers", type=_positive, default=None)
    p.add_argument("--out", help="directory for CSV outputs (stdout if omitted)")
    p.set_defaults(func=cmd_repro)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.cmd_name = " ".join(x for x in (args.group, getattr(args, "action", None)) if x)
        if getattr(args, "workers", None) is None and hasattr(args, "workers"):
            args.workers = default_workers()
        return args.func(args)
    except COMPUTE_ERRORS as exc:
        print(f"spskit: error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ValueError, TypeError, KeyError, IndexError, OSError, json.JSONDecodeError) as exc:
        print(f"spskit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
