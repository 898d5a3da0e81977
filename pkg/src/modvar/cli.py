"""Command-line front end.

Every run writes its outputs plus one ``*.manifest.json`` recording the
arguments and a hash of every output.  ``modvar replay MANIFEST`` re-runs
the recorded command and checks the hashes.

Exit codes: 0 success, 2 usage or validation error, 3 verification failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .bell import (
    block_bell_state,
    chsh_optimize,
    chsh_scan,
    scan_csv,
    tensor_product_state,
)
from .bloch import bloch_csv, find_degenerate_pair, random_bloch_samples, sample_ball_fill, bloch_coords
from .blocks import block_gram_rank
from .compiler import TargetSpec, compile_gamma, verify
from .conventions import CONVENTION_VERSION
from .gamma import build_gamma, build_su3_family, closure_residual, commutator_norm
from .gates import apply_gate, gate_from_dict, sequence_matrix
from .grid import (
    ModularGrid,
    ModularState,
    PositionState,
    inner_product,
    prepare_state,
    state_from_dict,
    state_to_dict,
    zak_forward,
    zak_inverse,
)
from .interferometer import mz_probabilities
from .programs import UnsupportedTargetError
from .weights import NAMED_WEIGHTS, make_weight, validate_weight


class UsageError(Exception):
    pass


class VerificationFailed(Exception):
    pass


# I/O helpers --------------------------------------------------------------

class Run:
    """Collects outputs of one command and writes them atomically."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.out_dir = Path(args.out_dir)
        self.outputs: list[dict[str, str]] = []
        self.indent = args.json_indent

    def write_text(self, name: str, text: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        fd, tmp = tempfile.mkstemp(dir=self.out_dir, prefix=f".{name}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
        self.outputs.append({"file": name, "sha256": hashlib.sha256(text.encode()).hexdigest()})
        return path

    def write_json(self, name: str, obj: Any) -> Path:
        return self.write_text(name, json.dumps(obj, indent=self.indent, sort_keys=True) + "\n")


def parse_grid(text: str) -> ModularGrid:
    try:
        m, n = (int(x) for x in text.lower().split("x"))
        return ModularGrid(m, n)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid must look like 48x8 with m>=2, n>=1 ({exc})") from None


def parse_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def parse_complex_list(text: str) -> list[complex]:
    return [complex(x.replace(" ", "")) for x in text.split(",")]


def read_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def load_state(path: str, grid: ModularGrid | None = None):
    obj = read_json(path)
    if obj.get("representation") == "position":
        g = ModularGrid(int(obj["grid"]["m_theta"]), int(obj["grid"]["n_k"]))
        pairs = np.asarray(obj["amplitudes"], dtype=float)
        return PositionState(g, pairs[:, 0] + 1j * pairs[:, 1])
    return state_from_dict(obj)


def state_payload(s) -> dict[str, Any]:
    if isinstance(s, PositionState):
        return {"grid": s.grid.to_dict(), "representation": "position",
                "amplitudes": [[float(z.real), float(z.imag)] for z in s.amplitudes]}
    return {**state_to_dict(s), "representation": "modular"}


def resolve_weight_arg(args: argparse.Namespace, grid: ModularGrid):
    if getattr(args, "f_file", None):
        path = args.f_file
        if path.endswith(".npy"):
            arr = np.load(path)
        else:
            pairs = np.asarray(read_json(path)["samples"], dtype=float)
            arr = pairs[..., 0] + 1j * pairs[..., 1]
        return np.asarray(arr, dtype=complex).reshape(grid.shape)
    name = args.f
    if name not in NAMED_WEIGHTS:
        raise UsageError(f"unknown weight {name!r}; known: {', '.join(sorted(NAMED_WEIGHTS))}")
    return name


# Commands -----------------------------------------------------------------

def cmd_state(args, run: Run, grid: ModularGrid) -> int:
    if args.sub == "prepare":
        params: dict[str, Any] = {}
        for key in ("center", "width", "j0", "theta0", "k0", "d", "center1", "center2", "phase"):
            val = getattr(args, key)
            if val is not None:
                params[key] = val
        if args.spinor is not None:
            params["spinor"] = parse_complex_list(args.spinor)
        try:
            s = prepare_state(grid, args.kind, **params)
        except KeyError as exc:
            raise UsageError(f"missing parameter {exc} for kind {args.kind!r}") from None
        run.write_json(args.out or "state.json", state_payload(s))
    elif args.sub == "zak":
        s = load_state(args.input)
        if args.inverse != isinstance(s, ModularState):
            raise UsageError("zak expects a position state, or a modular state with --inverse")
        out = zak_inverse(s) if args.inverse else zak_forward(s)
        run.write_json(args.out or "zak.json", state_payload(out))
    elif args.sub == "apply-gate":
        s = load_state(args.input)
        gates = json.loads(args.gate)
        gates = gates if isinstance(gates, list) else [gates]
        for g in gates:
            s = apply_gate(gate_from_dict(g), s)
        run.write_json(args.out or "gated.json", state_payload(s))
    elif args.sub == "inner":
        a, b = load_state(args.a), load_state(args.b)
        z = inner_product(a, b)
        run.write_json(args.out or "inner.json", {"re": z.real, "im": z.imag, "abs": abs(z)})
        print(f"<a|b> = {z.real:.15g} {z.imag:+.15g}i")
    return 0


def cmd_gamma(args, run: Run, grid: ModularGrid) -> int:
    if args.sub == "validate-weight":
        F = resolve_weight_arg(args, grid)
        rep = validate_weight(F, args.d, args.axis, grid)
        run.write_json(args.out or "weight_report.json", rep.to_dict())
        print(json.dumps(rep.to_dict()))
        if not rep.passed:
            print("weight fails validation", file=sys.stderr)
            return 2
        return 0
    if args.sub == "su3-family":
        fam = build_su3_family(grid, args.f or "exp3")
        ranks = block_gram_rank(fam)
        offs = [fam[a - 1] for a in (1, 2, 4, 5, 6, 7)]
        comm = min(commutator_norm(x, y) for i, x in enumerate(offs) for y in offs[i + 1:])
        summary = {"min_rank": int(ranks.min()), "closure_residual": closure_residual(fam),
                   "min_pairwise_commutator": comm,
                   "operators": [op.to_dict() for op in fam]}
        run.write_json(args.out or "su3_family.json", summary)
        print(f"rank {int(ranks.min())} everywhere, closure residual {summary['closure_residual']:.3g}")
        return 0
    F = resolve_weight_arg(args, grid)
    w = make_weight(F, args.d, grid, args.axis)
    op = build_gamma(args.d, args.alpha, w)
    if args.sub == "build":
        run.write_json(args.out or "gamma.json", op.to_dict())
    elif args.sub == "spectrum":
        run.write_text(args.out or "spectrum.csv", op.spectrum_csv())
    elif args.sub == "expect":
        s = load_state(args.state)
        val = op.expectation(s)
        run.write_json(args.out or "expectation.json", {"re": val.real, "im": val.imag})
        print(f"{val.real:.15g}")
    return 0


def cmd_bloch(args, run: Run, grid: ModularGrid) -> int:
    if args.sub == "sample":
        rows = random_bloch_samples(args.n, args.seed, grid)
        run.write_text(args.out or "bloch.csv", bloch_csv(rows, args.seed))
        print(f"max radius {rows[:, 3].max():.12g} over {args.n} states")
    elif args.sub == "fill":
        radii = parse_floats(args.radii)
        rep = sample_ball_fill(radii, args.per_radius, args.seed, grid)
        run.write_json(args.out or "fill.json", [
            {"requested": r.requested, "achieved": r.achieved, "direction": list(r.direction)} for r in rep])
    elif args.sub == "degenerate":
        target = parse_floats(args.target)
        s1, s2 = find_degenerate_pair(target, grid)
        p1, p2 = bloch_coords(s1), bloch_coords(s2)
        run.write_json(args.out or "degenerate.json", {
            "target": target, "points": [[p.x, p.y, p.z] for p in (p1, p2)],
            "overlap": abs(inner_product(s1, s2)),
            "states": [state_payload(s1), state_payload(s2)]})
    return 0


DEFAULT_EPSILONS = "0,0.1,0.2,0.3,0.4,0.6,0.8,1.0,1.2"


def cmd_bell(args, run: Run, grid: ModularGrid) -> int:
    if grid.m_theta % 2:
        raise UsageError("bell scans need an even m_theta")
    if args.product:
        rng = np.random.default_rng(args.seed)
        best = -np.inf
        rows = []
        for i in range(args.trials):
            a = prepare_state(grid, "block_qubit", theta0=0.0, k0=0.0, d=2,
                              spinor=rng.normal(size=2) + 1j * rng.normal(size=2))
            b = prepare_state(grid, "block_qubit", theta0=0.0, k0=0.0, d=2,
                              spinor=rng.normal(size=2) + 1j * rng.normal(size=2))
            r = chsh_optimize(tensor_product_state(a, b))
            rows.append(f"{i},{r.value:.12g}")
            best = max(best, r.value)
        run.write_text(args.out or "chsh_product.csv", "trial,S\n" + "\n".join(rows) + "\n")
        run.write_json("chsh_product.json", {"max_S": best, "trials": args.trials})
        print(f"product control: max S = {best:.12g}")
        return 0
    eps = parse_floats(args.epsilons)
    rows = chsh_scan(grid, eps, args.theta0, args.k0)
    run.write_text(args.out or "chsh_scan.csv", scan_csv(rows))
    best = max(rows, key=lambda r: r.result.value)
    state = block_bell_state(grid, args.theta0, args.k0, best.epsilon)
    X = state.coeffs
    nz = np.argwhere(np.abs(X) > 0)
    run.write_json("chsh_certificate.json", {
        "best_S": best.result.value, "epsilon": best.epsilon, "theta0": args.theta0, "k0": args.k0,
        "violation": best.result.value > 2,
        "directions": {n: [float(x) for x in u] for n, u in zip(("u1", "u1p", "u2", "u2p"), best.result.directions)},
        "state": {"grid": grid.to_dict(),
                  "support": [[int(a), int(b), float(X[a, b].real), float(X[a, b].imag)] for a, b in nz]}})
    for r in rows:
        print(f"eps={r.epsilon:.4g}  S={r.result.value:.6f}")
    return 0


def _target(args) -> TargetSpec:
    if args.sigma:
        i, j, k = (int(x) for x in args.sigma.split(","))
        return TargetSpec(args.d, kind="sigma", sigma=(i, j, k), weight=args.weight)
    if args.alpha is None:
        raise UsageError("give --alpha or --sigma")
    return TargetSpec(args.d, args.alpha, axis=args.axis, weight=args.weight, reflections=args.reflections)


def cmd_compile(args, run: Run, grid: ModularGrid) -> int:
    t = _target(args)
    p = compile_gamma(t, grid)
    rep = verify(p, t, grid)
    run.write_json(args.out or "program.json", p.to_dict())
    run.write_json("verification.json", rep.to_dict())
    print(p.listing())
    print(f"verification: deviation {rep.deviation:.3e} -> {'PASS' if rep.passed else 'FAIL'}")
    if not rep.passed:
        raise VerificationFailed(f"deviation {rep.deviation:.3e} above {rep.tolerance:g}")
    return 0


def cmd_interf(args, run: Run, grid: ModularGrid) -> int:
    t = _target(args)
    p = compile_gamma(t, grid)
    if p.node is None:
        raise UsageError("this target compiles to a plain gate sequence; no interferometer node")
    s = load_state(args.state) if args.state else prepare_state(grid, "gaussian", center=np.pi, width=0.6)
    if p.gates:
        s = ModularState.from_vector(grid, sequence_matrix(p.gates, grid) @ s.vector)
    arm = sequence_matrix(p.node.arm, grid)
    P1, P2 = mz_probabilities(arm, None, p.node.eta + args.eta, s)
    readout = 2 * p.node.scale * (P1 - P2)
    run.write_json(args.out or "interferometer.json",
                   {"P1": P1, "P2": P2, "readout": readout, "eta": p.node.eta + args.eta})
    print(f"P1={P1:.12g} P2={P2:.12g} readout={readout:.12g}")
    return 0


# Parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="modvar", description="Modular-variable operator laboratory.")
    ap.add_argument("--version", action="version", version=f"modvar {__version__}")
    ap.add_argument("--grid", type=parse_grid, default=ModularGrid(48, 8), help="grid as MxN (default 48x8)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default=".")
    ap.add_argument("--json-indent", type=int, default=2)
    sub = ap.add_subparsers(dest="command", required=True)

    st = sub.add_parser("state", help="prepare and transform states")
    ss = st.add_subparsers(dest="sub", required=True)
    pr = ss.add_parser("prepare")
    pr.add_argument("--kind", required=True, choices=["gaussian", "comb", "block_qubit", "cat"])
    for name in ("center", "width", "theta0", "k0", "center1", "center2", "phase"):
        pr.add_argument(f"--{name}", type=float)
    pr.add_argument("--j0", type=int)
    pr.add_argument("--d", type=int)
    pr.add_argument("--spinor", help="comma-separated complex components, e.g. 1,0 or 1,1j")
    pr.add_argument("--out")
    zk = ss.add_parser("zak")
    zk.add_argument("--in", dest="input", required=True)
    zk.add_argument("--inverse", action="store_true", help="input is modular; write the position state")
    zk.add_argument("--out")
    ag = ss.add_parser("apply-gate")
    ag.add_argument("--in", dest="input", required=True)
    ag.add_argument("--gate", required=True, help='JSON gate or list, e.g. {"gate":"X","theta":0.5}')
    ag.add_argument("--out")
    ip = ss.add_parser("inner")
    ip.add_argument("--a", required=True)
    ip.add_argument("--b", required=True)
    ip.add_argument("--out")

    ga = sub.add_parser("gamma", help="weights and block operators")
    gs = ga.add_subparsers(dest="sub", required=True)
    for name in ("validate-weight", "build", "spectrum", "expect", "su3-family"):
        p = gs.add_parser(name)
        p.add_argument("--f", default="cos2" if name != "su3-family" else None,
                       help=f"named weight ({', '.join(sorted(NAMED_WEIGHTS))})")
        p.add_argument("--out")
        if name == "su3-family":
            continue
        p.add_argument("--f-file", help="tabulated weight (.npy, or JSON {samples: [[re, im], ...]})")
        p.add_argument("--d", type=int, default=2)
        p.add_argument("--axis", default="theta", choices=["theta", "k"])
        if name != "validate-weight":
            p.add_argument("--alpha", type=int, default=1)
        if name == "expect":
            p.add_argument("--state", required=True)

    bl = sub.add_parser("bloch", help="Bloch-ball coordinates")
    bs = bl.add_subparsers(dest="sub", required=True)
    p = bs.add_parser("sample")
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--out")
    p = bs.add_parser("fill")
    p.add_argument("--radii", default=",".join(f"{r / 10:g}" for r in range(11)))
    p.add_argument("--per-radius", type=int, default=1)
    p.add_argument("--out")
    p = bs.add_parser("degenerate")
    p.add_argument("--target", required=True, help="x,y,z with radius < 1")
    p.add_argument("--out")

    be = sub.add_parser("bell", help="CHSH epsilon scan")
    be.add_argument("--epsilons", default=DEFAULT_EPSILONS)
    be.add_argument("--theta0", type=float, default=0.0)
    be.add_argument("--k0", type=float, default=0.0)
    be.add_argument("--product", action="store_true", help="separable control run")
    be.add_argument("--trials", type=int, default=20)
    be.add_argument("--out")

    for name in ("compile", "interf"):
        p = sub.add_parser(name, help="compile and verify a target" if name == "compile"
                           else "interferometric readout of a compiled target")
        p.add_argument("--d", type=int, required=True)
        p.add_argument("--alpha", type=int)
        p.add_argument("--sigma", help="i,j,k for Sigma_i^(jk)")
        p.add_argument("--axis", default="theta", choices=["theta", "k"])
        p.add_argument("--weight")
        p.add_argument("--reflections", action="store_true")
        p.add_argument("--out")
        if name == "interf":
            p.add_argument("--state")
            p.add_argument("--eta", type=float, default=0.0, help="extra reference-arm phase")

    rp = sub.add_parser("replay", help="re-run a manifest and compare output hashes")
    rp.add_argument("manifest")
    return ap


COMMANDS = {"state": cmd_state, "gamma": cmd_gamma, "bloch": cmd_bloch, "bell": cmd_bell,
            "compile": cmd_compile, "interf": cmd_interf}


def _manifest_name(args) -> str:
    sub = getattr(args, "sub", None)
    return f"{args.command}{'-' + sub if sub else ''}.manifest.json"


def _strip_out_dir(argv: Sequence[str]) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out-dir":
            skip = True
            continue
        if a.startswith("--out-dir="):
            continue
        out.append(a)
    return out


def _replay(args) -> int:
    man = read_json(args.manifest)
    out_dir = args.out_dir if args.out_dir != "." else str(Path(args.manifest).parent)
    code = main(["--out-dir", out_dir] + man["argv"], _replaying=True)
    if code != man.get("exit_code", 0):
        print(f"replay exit code {code} differs from recorded {man.get('exit_code')}", file=sys.stderr)
        return 3
    bad = []
    for o in man["outputs"]:
        data = (Path(out_dir) / o["file"]).read_bytes()
        if hashlib.sha256(data).hexdigest() != o["sha256"]:
            bad.append(o["file"])
    if bad:
        print(f"outputs differ from manifest: {', '.join(bad)}", file=sys.stderr)
        return 3
    print(f"replay reproduced {len(man['outputs'])} output(s) byte-identically")
    return 0


def main(argv: Sequence[str] | None = None, _replaying: bool = False) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "replay":
        return _replay(args)
    run = Run(args)
    start = time.perf_counter()
    try:
        code = COMMANDS[args.command](args, run, args.grid)
    except VerificationFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        code = 3
    except (UsageError, UnsupportedTargetError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 2
    manifest = {
        "command": args.command, "sub": getattr(args, "sub", None), "argv": _strip_out_dir(argv),
        "params": {k: (v.to_dict() if isinstance(v, ModularGrid) else v) for k, v in sorted(vars(args).items())
                   if k not in ("out_dir",)},
        "grid": args.grid.to_dict(), "seed": args.seed, "convention_version": CONVENTION_VERSION,
        "version": __version__, "outputs": run.outputs, "exit_code": code,
        "wall_clock_seconds": round(time.perf_counter() - start, 6),
    }
    if not _replaying:
        run.write_json(_manifest_name(args), manifest)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
