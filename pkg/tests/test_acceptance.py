"""Acceptance criteria 1-9 on the default 48x8 grid.

Each test records one PASS/FAIL line; pytest prints them in an
``acceptance criteria`` section at the end of the run, and running this file
directly prints them as it goes.
"""
import itertools
import json
import time
from pathlib import Path

import numpy as np

from modvar.bell import (
    TSIRELSON,
    BipartiteState,
    build_bipartite_gamma,
    chsh_optimize,
    chsh_scan,
    entangling_evolution,
    entanglement_entropy,
    operator_schmidt_rank,
    tensor_product_state,
)
from modvar.blocks import block_gram_rank
from modvar.bloch import random_bloch_samples, sample_ball_fill
from modvar.cli import main as cli_main
from modvar.compiler import TargetSpec, compile_gamma, verify
from modvar.conventions import derive_table
from modvar.gamma import (
    build_delta,
    build_gamma,
    build_shift,
    build_su3_family,
    closure_residual,
    gamma_from_SD,
    gamma_via_gates,
)
from modvar.generators import block_generator, levi_civita
from modvar.grid import DEFAULT_GRID, PositionState, block_qubit, inner_product, random_state, zak_forward, zak_inverse
from modvar.interferometer import mz_probabilities
from modvar.weights import make_weight, validate_weight

G = DEFAULT_GRID


def _elapsed(t0):
    return time.perf_counter() - t0


def test_criterion_1_zak_unitarity(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_rt = worst_ip = 0.0
    for _ in range(100):
        a = PositionState.from_vector(G, random_state(G, rng).vector)
        b = PositionState.from_vector(G, random_state(G, rng).vector)
        za, zb = zak_forward(a), zak_forward(b)
        worst_rt = max(worst_rt, float(np.max(np.abs(zak_inverse(za).vector - a.vector))))
        worst_ip = max(worst_ip, abs(inner_product(za, zb) - inner_product(a, b)))
    dt = _elapsed(t0)
    ok = worst_rt < 1e-12 and worst_ip < 1e-12 and dt < 1.0
    record(1, ok, f"Zak roundtrip {worst_rt:.1e}, inner product {worst_ip:.1e} over 100 states, {dt:.2f}s")
    assert ok


def test_criterion_2_weight_validation(record):
    t0 = time.perf_counter()
    c2 = validate_weight("cos2", 2, grid=G)
    e3 = validate_weight("exp3", 3, grid=G)
    bad = validate_weight("cos_theta", 3, grid=G)
    dt = _elapsed(t0)
    ok = c2.passed and e3.passed and not bad.passed and bad.roots_residual > 0.1 and dt < 1.0
    record(2, ok, f"cos2/d=2 {c2.passed}, exp3/d=3 {e3.passed}, cos/d=3 fails with residual "
                  f"{bad.roots_residual:.3f}, {dt:.2f}s")
    assert ok


def test_criterion_3_block_algebra(record):
    t0 = time.perf_counter()
    w = make_weight("cos2", 2, G)
    gam = [build_gamma(2, a, w) for a in (1, 2, 3)]
    z = w.fundamental.real[..., None, None]
    pauli = 0.0
    for a, b, c in itertools.permutations((1, 2, 3)):
        comm = gam[a - 1].commutator(gam[b - 1]).blocks
        expected = 2j * levi_civita(a, b, c) * z**2 * block_generator(2, c)
        pauli = max(pauli, float(np.max(np.abs(comm - expected))))
    fam = build_su3_family(G)
    rank = block_gram_rank(fam)
    closure = closure_residual(fam)
    dt = _elapsed(t0)
    ok = pauli < 1e-10 and (rank == 8).all() and closure < 1e-8 and dt < 10
    record(3, ok, f"Pauli residual {pauli:.1e}, SU(3) Gram rank min {rank.min()}, closure {closure:.1e}, {dt:.2f}s")
    assert ok


def test_criterion_4_gates_vs_blocks(record):
    t0 = time.perf_counter()
    for a in (1, 2, 3):
        gamma_via_gates(2, a, G, tol=1e-10)  # raises if not block-diagonal
    table = max(r.max_deviation for r in derive_table(G) if r.d == 2 and r.axis == "theta")
    targets = ([TargetSpec(2, a) for a in (1, 2, 3)] + [TargetSpec(3, a) for a in range(1, 9)]
               + [TargetSpec(2, kind="sigma", sigma=(2, 1, 2)), TargetSpec(3, kind="sigma", sigma=(2, 1, 3))])
    devs = [verify(compile_gamma(t, G), t, G).deviation for t in targets]
    dt = _elapsed(t0)
    ok = table < 1e-8 and max(devs) < 1e-8 and dt < 30
    record(4, ok, f"gate vs direct {table:.1e}; {len(targets)} targets compile+verify, worst {max(devs):.1e}, {dt:.2f}s")
    assert ok


def test_criterion_5_bloch_ball(record):
    t0 = time.perf_counter()
    rows = random_bloch_samples(10_000, seed=2024)
    rmax = float(np.max(rows[:, 3] ** 2))
    fill = sample_ball_fill([r / 10 for r in range(11)], samples_per_radius=3, seed=5)
    miss = max(abs(s.achieved - s.requested) for s in fill)
    dt = _elapsed(t0)
    ok = rmax <= 1 + 1e-9 and miss < 1e-6 and dt < 30
    record(5, ok, f"max r^2 {rmax:.4f} over 1e4 states, fill error {miss:.1e}, {dt:.2f}s")
    assert ok


def test_criterion_6_chsh(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    product = []
    for _ in range(10):
        a = block_qubit(G, np.pi / 6, 0.25, 2, rng.normal(size=2) + 1j * rng.normal(size=2))
        b = block_qubit(G, 0.0, 0.0, 2, rng.normal(size=2) + 1j * rng.normal(size=2))
        product.append(chsh_optimize(tensor_product_state(a, b)).value)
    for _ in range(5):
        product.append(chsh_optimize(tensor_product_state(random_state(G, rng), random_state(G, rng))).value)
    scan = [r.result.value for r in chsh_scan(G, [0.0, 0.1, 0.2, 0.4, 0.8, 1.2])]
    sampled = list(scan) + list(product)
    for _ in range(10):
        X = rng.normal(size=(G.total_dim,) * 2) + 1j * rng.normal(size=(G.total_dim,) * 2)
        sampled.append(chsh_optimize(BipartiteState.from_unnormalized_coeffs(G, G, X)).value)
    dt = _elapsed(t0)
    ok = (max(product) <= 2 + 1e-6 and max(scan) > 2 and max(scan[:2]) >= 2.5
          and max(sampled) <= TSIRELSON + 1e-9 and dt < 120)
    record(6, ok, f"product max S {max(product):.6f}, scan S {scan[0]:.4f}->{scan[-1]:.4f}, "
                  f"sampled max {max(sampled):.6f}, {dt:.2f}s")
    assert ok


def test_criterion_7_interferometer(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    S, D = build_shift(3, 1.0, G), build_delta("exp3", G, 3)
    Gm = gamma_from_SD(S, D).to_dense()
    err = psum = 0.0
    in_range = True
    for _ in range(100):
        s = random_state(G, rng)
        p1, p2 = mz_probabilities(S, D, 0.0, s)
        err = max(err, abs(2 * (p1 - p2) - np.vdot(s.vector, Gm @ s.vector).real))
        psum = max(psum, abs(p1 + p2 - 1))
        in_range &= 0 <= p1 <= 1 and 0 <= p2 <= 1
    dt = _elapsed(t0)
    ok = err < 1e-10 and psum < 1e-12 and in_range and dt < 5
    record(7, ok, f"readout error {err:.1e} over 100 states, probabilities valid {in_range}, {dt:.2f}s")
    assert ok


def test_criterion_8_entangling_gate(record):
    t0 = time.perf_counter()
    nonsep = build_bipartite_gamma(2, 2, 2, 2, lambda t1, k1, t2, k2: np.cos(t1 - t2 - np.pi * (k1 - k2)), G)
    sep = build_bipartite_gamma(
        2, 2, 2, 2, lambda t1, k1, t2, k2: np.cos(t1 - np.pi * k1) * np.cos(t2 - np.pi * k2), G)
    a = block_qubit(G, np.pi / 6, 0.0, 2, [1, 0])
    b = block_qubit(G, np.pi / 2, 0.0, 2, [1, 0])
    entropy = entanglement_entropy(entangling_evolution(nonsep, np.pi / 2, tensor_product_state(a, b)))
    r_ns, r_s = operator_schmidt_rank(nonsep), operator_schmidt_rank(sep)
    dt = _elapsed(t0)
    ok = r_ns >= 2 and r_s == 1 and entropy > 0.1 and dt < 30
    record(8, ok, f"operator Schmidt rank {r_ns} (non-separable) / {r_s} (separable), "
                  f"entropy {entropy:.4f} nats, {dt:.2f}s")
    assert ok


CLI_RUNS = [
    ["state", "prepare", "--kind", "cat", "--center1", "2", "--center2", "9", "--width", "0.5", "--phase", "1"],
    ["gamma", "spectrum", "--f", "cos2", "--d", "2", "--alpha", "2"],
    ["gamma", "su3-family"],
    ["--seed", "3", "bloch", "sample", "--n", "500"],
    ["bloch", "fill"],
    ["bell", "--epsilons", "0,0.3,0.8"],
    ["bell", "--product", "--trials", "4"],
    ["compile", "--d", "3", "--alpha", "6"],
    ["compile", "--d", "2", "--sigma", "2,1,2"],
    ["interf", "--d", "3", "--alpha", "4"],
]


def test_criterion_9_cli_determinism(record, tmp_path):
    t0 = time.perf_counter()
    replayed = 0
    for i, argv in enumerate(CLI_RUNS):
        out = tmp_path / f"run{i}"
        assert cli_main(["--out-dir", str(out), *argv]) == 0
        (manifest,) = out.glob("*.manifest.json")
        before = {p.name: p.read_bytes() for p in out.iterdir() if p != manifest}
        if cli_main(["replay", str(manifest)]) == 0:
            after = {p.name: p.read_bytes() for p in out.iterdir() if p != manifest}
            replayed += before == after and len(json.loads(manifest.read_text())["outputs"]) == len(before)
    dt = _elapsed(t0)
    ok = replayed == len(CLI_RUNS)
    record(9, ok, f"{replayed}/{len(CLI_RUNS)} CLI runs replayed byte-identically, {dt:.2f}s")
    assert ok


if __name__ == "__main__":
    import tempfile

    def _print(n, ok, detail):
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")

    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                if "tmp_path" in fn.__code__.co_varnames:
                    with tempfile.TemporaryDirectory() as d:
                        fn(_print, Path(d))
                else:
                    fn(_print)
            except AssertionError:
                pass
