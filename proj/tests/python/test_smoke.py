"""Smoke tests for the Python bindings and the CLI report contract."""

import json
import math
import os
import subprocess
import tempfile

import numpy as np
import pytest

import holonomy as hl


def test_phase_loop_amplitude_and_scale():
    gamma = hl.phase_loop_operator(k=1, m=1, phi=0.0, refinement=1)
    assert abs(gamma[0, 0] - 0.25) < 1e-12
    assert hl.phase_loop_scale(1) == 0.25

    phi = 0.8
    gamma = hl.phase_loop_operator(k=1, m=1, phi=phi, refinement=1)
    assert abs(np.angle(gamma[0, 0]) - phi) < 1e-9

    states = hl.phase_loop_states(k=1, m=1, phi=phi, refinement=2)
    assert len(states) == 9
    np.testing.assert_allclose(states[0], states[-1])
    invariant = hl.bargmann_invariant(states)
    assert abs(np.angle(invariant) - phi) < 1e-9


def test_compose_matches_diagonal_target():
    phases = [0.3, 1.2]
    gamma, scale = hl.compose_diag_unitary(phases, refinement=2)
    block = np.asarray(gamma)[:2, :2] / scale
    target = np.diag(np.exp(1j * np.array(phases)))
    assert np.max(np.abs(block - target)) < 1e-9

    state = np.array([0.6, 0.8j, 0.0], dtype=complex)
    assert abs(hl.survival_probability(gamma, state) - scale**2) < 1e-10


def test_subspace_isometry_and_complement():
    theta = math.pi / 4
    source = hl.Subspace.standard(4, 2)
    columns = np.zeros((4, 2), dtype=complex)
    columns[0, 0] = columns[1, 1] = math.cos(theta)
    columns[2, 0] = columns[3, 1] = math.sin(theta)
    target = hl.Subspace.from_columns(columns)

    report = hl.isometry_report(source, target)
    assert report["is_isometry"]
    assert abs(report["scale"] ** 2 - 0.5) < 1e-9
    np.testing.assert_allclose(
        hl.principal_angles(source, target), [theta, theta], atol=1e-9
    )

    comp = hl.complement(target)
    comp_report = hl.isometry_report(source, comp)
    assert comp_report["is_isometry"]
    assert abs(comp_report["scale"] ** 2 - 0.5) < 1e-9

    projected, probability = hl.apply_projection(
        np.array([1.0, 0.0, 0.0, 0.0], dtype=complex), target
    )
    assert abs(probability - 0.5) < 1e-9
    assert abs(np.linalg.norm(projected) - 1.0) < 1e-12


def test_bloch_round_trip_and_solid_angle():
    r = (0.0, 0.6, 0.8)
    state = hl.state_from_bloch(r)
    np.testing.assert_allclose(hl.bloch_from_state(state), r, atol=1e-12)

    octant = [(0.0, 0.0, 1.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]
    assert abs(hl.solid_angle(octant) - math.pi / 2) < 1e-9


def test_rus_graph_round_trip():
    phi = 0.9
    graph = hl.build_qubit_rus_graph(phi)
    assert graph.ambient_dim == 4
    assert graph.node_count == 6
    assert abs(hl.expected_steps(graph) - 8.0) < 1e-9

    state = np.array([1.0, 1.0, 0.0, 0.0], dtype=complex) / math.sqrt(2.0)
    trace = hl.run_protocol(graph, state, seed=7)
    assert trace.completed
    assert trace.phase_class in (-1, 1)

    result = hl.extract_holonomy(graph, trace)
    assert abs(result["fidelity_to_target"] - 1.0) < 1e-9
    target = np.diag([1.0, np.exp(1j * phi)])
    assert hl.equal_up_to_phase(result["unitary"], target, [1.0, -1.0])

    forced = hl.run_protocol_forced(graph, state, [1, 1, 1, 1])
    assert forced.completed and forced.step_count == 4

    assert hl.mix_seed(1, 0) != hl.mix_seed(1, 1)


def test_svd_and_orthonormalize():
    matrix = np.array([[3.0, 0.0], [0.0, 1.0 + 0.0j]])
    left, singular, right = hl.svd(matrix)
    np.testing.assert_allclose(singular, [3.0, 1.0], atol=1e-12)
    reconstructed = np.asarray(left) @ np.diag(singular) @ np.asarray(right).conj().T
    np.testing.assert_allclose(reconstructed, matrix, atol=1e-10)

    basis = hl.orthonormalize(
        [np.array([1.0, 1.0], dtype=complex), np.array([1.0, -1.0], dtype=complex)]
    )
    gram = np.asarray(basis).conj().T @ np.asarray(basis)
    np.testing.assert_allclose(gram, np.eye(2), atol=1e-12)


@pytest.fixture(scope="module")
def cli_path():
    path = os.environ.get("HOLONOMY_CLI")
    if not path or not os.path.exists(path):
        pytest.skip("HOLONOMY_CLI does not point at the CLI binary")
    return path


@pytest.fixture(scope="module")
def report_schema():
    path = os.environ.get("HOLONOMY_SCHEMA")
    if not path or not os.path.exists(path):
        pytest.skip("HOLONOMY_SCHEMA does not point at the report schema")
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def run_cli(cli, args, output):
    result = subprocess.run(
        [cli, *args, "--output", output], capture_output=True, text=True, check=False
    )
    assert result.returncode == 0, result.stderr
    with open(os.path.join(output, "report.json"), encoding="utf-8") as handle:
        return json.load(handle)


def test_cli_reports_validate_against_schema(cli_path, report_schema):
    jsonschema = pytest.importorskip("jsonschema")
    invocations = [
        ["phase-loop", "--k", "1", "--phi", "0", "--refinement", "1"],
        ["compose", "--phases", "0.4,1.1,2.2"],
        ["isometry-check", "--k", "2", "--ambient", "3"],
        ["rus-run", "--phi", "1.2", "--shots", "64", "--seed", "3", "--per-shot"],
        ["rus-analyze", "--phi", "0.7"],
        ["zeno-sweep", "--refinement", "8"],
    ]
    with tempfile.TemporaryDirectory() as tmp:
        for index, args in enumerate(invocations):
            out_dir = os.path.join(tmp, str(index))
            report = run_cli(cli_path, args, out_dir)
            jsonschema.validate(report, report_schema)
            assert report["mode"] == args[0]

        # Mode-specific spot checks against the library.
        loop_dir = os.path.join(tmp, "0")
        with open(os.path.join(loop_dir, "report.json"), encoding="utf-8") as handle:
            loop_report = json.load(handle)
        assert loop_report["results"]["scale_squared"] == 0.0625

        shots_csv = os.path.join(tmp, "3", "shots.csv")
        with open(shots_csv, encoding="utf-8") as handle:
            lines = handle.read().splitlines()
        assert lines[0] == "shot,steps,completed,phase_class"
        assert len(lines) == 65


def test_cli_reports_are_deterministic(cli_path):
    args = ["rus-run", "--phi", "0.5", "--shots", "40", "--seed", "11", "--per-shot"]
    with tempfile.TemporaryDirectory() as tmp:
        run_cli(cli_path, args, tmp)
        with open(os.path.join(tmp, "report.json"), "rb") as handle:
            first = handle.read()
        with open(os.path.join(tmp, "shots.csv"), "rb") as handle:
            first_csv = handle.read()
        run_cli(cli_path, args, tmp)
        with open(os.path.join(tmp, "report.json"), "rb") as handle:
            assert handle.read() == first
        with open(os.path.join(tmp, "shots.csv"), "rb") as handle:
            assert handle.read() == first_csv
