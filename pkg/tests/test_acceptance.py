"""Acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line (see the ``criterion`` fixture);
the lines are repeated in the pytest terminal summary.  Training-based
criteria run single-threaded to match the one-core budget.
"""
import time

import numpy as np
import pytest
from threadpoolctl import threadpool_limits

from qlogad import pqc, qsim
from qlogad.encode import amplitude_encode, encode, prepare_uniform_superposition
from qlogad.harness import ConfusionCounts, ExperimentConfig, compute_metrics, emit_reports, preset_configs
from qlogad.harness.experiment import results_csv, run_experiment, run_sweep
from qlogad.logpipe.drain import drain_parse
from qlogad.logpipe.reader import read_raw_log
from qlogad.logpipe.vectorize import Vocabulary
from qlogad.logpipe.windows import WindowedSample, chronological_split, windowize
from qlogad.models import ModelConfig, build_model, count_parameters
from qlogad.pqc import CircuitDesign
from qlogad.qsim import Gate, StateVector

SMALL = dict(synth_windows=20, synth_seed=1)


@pytest.fixture(autouse=True)
def single_thread():
    with threadpool_limits(1):
        yield


def dense_gate(gate, n):
    dim = 1 << n
    if gate.kind == "CNOT":
        U = np.zeros((dim, dim))
        for i in range(dim):
            flip = (i >> (n - 1 - gate.control)) & 1
            U[i ^ (flip << (n - 1 - gate.target)), i] = 1
        return U
    U = np.eye(1)
    for q in range(n):
        U = np.kron(U, gate.matrix() if q == gate.target else np.eye(2))
    return U


def random_gate(rng, n):
    kind = rng.choice(qsim.GATE_KINDS if n > 1 else qsim.GATE_KINDS[:-1])
    target = int(rng.integers(n))
    if kind == "CNOT":
        control = int(rng.choice([q for q in range(n) if q != target]))
        return Gate("CNOT", target, control=control)
    angle = float(rng.uniform(-2 * np.pi, 2 * np.pi)) if kind in qsim.ROTATIONS else None
    return Gate(str(kind), target, angle=angle)


def random_state(rng, n):
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(v / np.linalg.norm(v))


def test_criterion_01_quantum_correctness(criterion):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst_norm = worst_inv = worst_comp = worst_dense = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        out = qsim.apply_gate(random_gate(rng, n), random_state(rng, n))
        worst_norm = max(worst_norm, abs(np.linalg.norm(out.amplitudes) - 1))
    for n in (2, 3, 4):
        psi = random_state(rng, n)
        for q in range(n):
            for g in (Gate("H", q), Gate("X", q), Gate("Z", q), Gate("CNOT", q, control=(q + 1) % n)):
                twice = qsim.apply_gate(g, qsim.apply_gate(g, psi))
                worst_inv = max(worst_inv, np.max(np.abs(twice.amplitudes - psi.amplitudes)))
    for kind in qsim.ROTATIONS:
        for a, b in rng.uniform(-7, 7, (50, 2)):
            lhs = qsim.gate_matrix(kind, a) @ qsim.gate_matrix(kind, b)
            worst_comp = max(worst_comp, np.max(np.abs(lhs - qsim.gate_matrix(kind, a + b))))
    for n in (1, 2, 3):
        for _ in range(100):
            gate, psi = random_gate(rng, n), random_state(rng, n)
            got = qsim.apply_gate(gate, psi).amplitudes
            worst_dense = max(worst_dense, np.max(np.abs(got - dense_gate(gate, n) @ psi.amplitudes)))
    elapsed = time.perf_counter() - start
    ok = max(worst_norm, worst_inv, worst_comp, worst_dense) <= 1e-10 and elapsed < 10
    criterion(1, ok, f"norm {worst_norm:.1e}, involution {worst_inv:.1e}, composition {worst_comp:.1e}, "
                     f"dense {worst_dense:.1e}, {elapsed:.1f}s")


def test_criterion_02_parameter_shift_exactness(criterion):
    rng = np.random.default_rng(2)
    start = time.perf_counter()
    worst = 0.0
    h = 1e-4
    for layout in pqc.LAYOUTS:
        for n in (2, 4):
            for layers in (1, 2):
                d = CircuitDesign(layout, n, layers, "ry")
                for _ in range(50):
                    theta = pqc.random_params(d, rng)
                    x = rng.uniform(-np.pi, np.pi, n)
                    up = rng.normal(size=n)
                    g = pqc.gradient_params(d, theta, x, up)
                    E = np.eye(theta.size) * h
                    fd = np.array([up @ (pqc.forward(d, theta + e, x) - pqc.forward(d, theta - e, x)) / (2 * h)
                                   for e in E])
                    worst = max(worst, np.max(np.abs(g - fd)))
    elapsed = time.perf_counter() - start
    criterion(2, worst <= 1e-6 and elapsed < 60, f"max |shift - FD| {worst:.1e} over 800 draws, {elapsed:.1f}s")


def test_criterion_03_gradient_anchor(criterion):
    # with ry encoding of -pi/2 the register starts in |0>, so the circuit is Ry(theta)|0>
    d = CircuitDesign("RyRx", 1, 1, "ry")
    worst = 0.0
    for theta in np.linspace(-np.pi, np.pi, 20):
        assert np.isclose(pqc.forward(d, [theta, 0.0], [-np.pi / 2])[0], np.cos(theta), atol=1e-12)
        g = pqc.gradient_params(d, [theta, 0.0], [-np.pi / 2], [1.0])[0]
        worst = max(worst, abs(g + np.sin(theta)))
    criterion(3, worst <= 1e-10, f"max |dZ/dtheta + sin theta| {worst:.1e} at 20 angles")


def test_criterion_04_encoding_suite(criterion):
    rng = np.random.default_rng(4)
    exact = np.array_equal(amplitude_encode([3, 4]).amplitudes, [0.6, 0.8])
    scale = norm = zero = 0.0
    for _ in range(200):
        x = rng.normal(size=int(rng.integers(1, 17))) * 10
        c = float(np.exp(rng.uniform(-5, 5)))
        a = amplitude_encode(x).amplitudes
        scale = max(scale, np.max(np.abs(amplitude_encode(c * x).amplitudes - a)))
        norm = max(norm, abs(np.linalg.norm(a) - 1))
        for enc in ("rx", "ry", "rz"):
            norm = max(norm, abs(np.linalg.norm(encode(x[:4], enc, x[:4].size).amplitudes) - 1))
    for n in (1, 2, 4, 6):
        for enc in ("rx", "ry", "rz"):
            diff = encode(np.zeros(n), enc, n).amplitudes - prepare_uniform_superposition(n).amplitudes
            zero = max(zero, np.max(np.abs(diff)))
    ok = exact and max(scale, norm, zero) <= 1e-10
    criterion(4, ok, f"[3,4] exact {exact}, scale {scale:.1e}, norm {norm:.1e}, zero-angle {zero:.1e}")


def full_fd_error(model, rows, h=1e-6):
    w = np.full(len(rows), 1 / len(rows))
    _, grads = model.loss(model.params, rows, w)
    worst = 0.0
    for name, p in model.params.items():
        flat = p.reshape(-1)
        for j in range(flat.size):
            old = flat[j]
            flat[j] = old + h
            up = model.loss(model.params, rows, w)[0]
            flat[j] = old - h
            down = model.loss(model.params, rows, w)[0]
            flat[j] = old
            worst = max(worst, abs((up - down) / (2 * h) - grads[name].reshape(-1)[j]))
    return worst


def test_criterion_05_hybrid_gradient(criterion):
    vocab = Vocabulary(range(3))
    encodings = ("rx", "ry", "rz", "amplitude")
    layouts = tuple(pqc.LAYOUTS)
    worst = 0.0
    for seed in range(10):
        cfg = ModelConfig(kind="deeplog", variant="quantum", n_qubits=2, history=3, seed=seed,
                          encoding=encodings[seed % 4], layout=layouts[seed % 4])
        model = build_model(cfg, vocab)
        events = tuple(np.random.default_rng(seed).integers(0, 4, 7))
        rows = model.training_rows([WindowedSample(events, 0, 0)])
        worst = max(worst, full_fd_error(model, rows))
    criterion(5, worst <= 1e-4, f"max |analytic - FD| {worst:.1e} over 10 seeds")


def test_criterion_06_metrics_oracle(criterion):
    rng = np.random.default_rng(6)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(0, 40))
        pred, act = rng.integers(0, 2, n), rng.integers(0, 2, n)
        c = ConfusionCounts.from_predictions(pred, act)
        tp = fp = tn = fn = 0
        for p, a in zip(pred, act):
            if p and a:
                tp += 1
            elif p:
                fp += 1
            elif a:
                fn += 1
            else:
                tn += 1
        P = tp / (tp + fp) if tp + fp else 0.0
        R = tp / (tp + fn) if tp + fn else 0.0
        S = tn / (tn + fp) if tn + fp else 0.0
        F = 2 * P * R / (P + R) if P + R else 0.0
        m = compute_metrics(c)
        mismatches += (c.tp, c.fp, c.tn, c.fn) != (tp, fp, tn, fn) or (m.precision, m.recall, m.specificity, m.f1) != (P, R, S, F)
    empty = compute_metrics(ConfusionCounts())
    degenerate = (empty.precision, empty.recall, empty.specificity, empty.f1) == (0.0, 0.0, 0.0, 0.0)
    only_tn = compute_metrics(ConfusionCounts(tn=5))
    degenerate &= only_tn.specificity == 1.0 and only_tn.f1 == 0.0
    criterion(6, mismatches == 0 and degenerate, f"{mismatches} mismatches in 1000 vectors, degenerate ok {degenerate}")


def test_criterion_07_pipeline_fixture(criterion, bgl_fixture):
    lines = read_raw_log(bgl_fixture)
    templates, ids = drain_parse(lines)
    windows = windowize(ids, [line.is_alert for line in lines], 100)
    train, test = chronological_split(windows, 0.8)
    got = (len(templates) - 1, len(windows), [w.label for w in windows], len(train), len(test))
    want = (5, 10, [0, 1, 0, 0, 0, 0, 0, 0, 0, 1], 8, 2)
    criterion(7, got == want, f"templates {got[0]}, windows {got[1]}, labels {got[2]}, split {got[3]}/{got[4]}")


@pytest.mark.slow
def test_criterion_08_desk_scale_rq1(criterion):
    base = dict(model="deeplog", synth_windows=5000, epochs=50)
    q = run_experiment(ExperimentConfig(variant="quantum", **base))
    c = run_experiment(ExperimentConfig(variant="classical", **base))
    q_ok = q.metrics.f1 >= 0.90 and q.metrics.recall >= 0.95 and q.wall_time <= 600
    c_ok = c.metrics.f1 >= 0.90
    criterion(8, q_ok and c_ok,
              f"QDeepLog F1 {q.metrics.f1:.3f} recall {q.metrics.recall:.3f} in {q.wall_time:.0f}s "
              f"({'ok' if q_ok else 'miss'}); DeepLog F1 {c.metrics.f1:.3f} recall {c.metrics.recall:.3f} "
              f"({'ok' if c_ok else 'miss'})")


@pytest.mark.slow
def test_criterion_09_preset_sweeps(criterion, tmp_path):
    problems = []
    cells = 0
    for preset in ("rq2", "rq3", "rq4", "rq5"):
        configs = preset_configs(preset, epochs=2, **SMALL)
        results = run_sweep(configs, workers=1)
        emit_reports(results, tmp_path / preset)
        rows = (tmp_path / preset / "results.csv").read_text().splitlines()
        cells += len(rows) - 1
        if len(rows) != len(configs) + 1 or any("" in r.split(",") or "nan" in r for r in rows):
            problems.append(f"{preset} table incomplete")
        table = (tmp_path / preset / "table.txt").read_text().splitlines()
        if len(table) != len(configs) + 2:
            problems.append(f"{preset} text table has {len(table)} lines")
        again = run_experiment(configs[-1])
        if results_csv([again]) != results_csv([results[-1]]):
            problems.append(f"{preset} rerun of {configs[-1].name} differs")
    criterion(9, not problems, f"{cells} cells in 4 sweeps; " + ("; ".join(problems) or "tables full, reruns identical"))


@pytest.mark.slow
def test_criterion_10_loss_decreases(criterion):
    problems = []
    for model in ("deeplog", "loganomaly", "logrobust"):
        for variant in ("classical", "quantum"):
            r = run_experiment(ExperimentConfig(model=model, variant=variant, epochs=100, **SMALL))
            tr, va = np.array(r.losses.train), np.array(r.losses.val)
            if len(tr) != 100 or not (np.all(np.isfinite(tr)) and np.all(np.isfinite(va))):
                problems.append(f"{r.config.name} non-finite loss")
            elif not tr[19] < tr[0]:
                problems.append(f"{r.config.name} epoch 20 {tr[19]:.4f} >= epoch 1 {tr[0]:.4f}")
    criterion(10, not problems, "; ".join(problems) or "6 variants: epoch 20 below epoch 1, 100 epochs finite")


def test_criterion_11_parameter_accounting(criterion):
    vocab = Vocabulary(range(20))
    problems = []
    for kind in ("deeplog", "loganomaly", "logrobust"):
        # hidden=0 compares the two default configurations
        for hidden in (0, 8, 16, 32, 64, 128):
            c = count_parameters(build_model(ModelConfig(kind=kind, hidden=hidden), vocab))
            q = count_parameters(build_model(ModelConfig(kind=kind, variant="quantum", hidden=hidden), vocab))
            if not q.classical_bits < c.classical_bits:
                problems.append(f"{kind} h={hidden}: {q} vs {c}")
    qlstm = count_parameters(build_model(ModelConfig(variant="quantum", n_qubits=4), vocab))
    qubits = qlstm.components["lstm"].qubit_count
    ok = not problems and qubits == 16
    criterion(11, ok, f"QLSTM {qubits} qubits; " + ("; ".join(problems) or "quantum fewer bits at defaults and hidden 8..128"))
