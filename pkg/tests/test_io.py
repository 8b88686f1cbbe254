import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from conftest import FIXTURES, small_dataset
from rastair.exceptions import BaseDatasetTooSmall, ParseError, UnitNormViolation
from rastair.io import (
    GeneratorConfig,
    format_dataset,
    generate_synthetic,
    ground_truth_sidecar,
    instance_name,
    load_base,
    make_grid_dataset,
    matrix_to_quat,
    params_to_pose,
    parse,
    parse_text,
    pose_to_params,
    quat_to_matrix,
    read_vertices,
    split_contiguous,
    sweep_configs,
    weights_from_information,
    write,
)
from rastair.problem import INTER_LOOP, PRIVATE

TOY_2D = """\
VERTEX_SE2 a0 0 0 0
VERTEX_SE2 a1 1 0 0.1
VERTEX_SE2 b0 1 1 0.2
VERTEX_XY La0 0.5 2
EDGE_SE2 a0 a1 1 0 0.1 10 5
EDGE_SE2 a1 b0 0 1 0.1 10 5
EDGE_RANGE a0 La0 2.06 4
EDGE_RANGE b0 La0 1.12 4
"""


def test_parse_toy_dataset():
    g = parse_text(TOY_2D)
    assert g.d == 2
    assert [s.name for s in g.poses] == ["a0", "a1", "b0"]
    assert [s.name for s in g.landmarks] == ["La0"]
    assert len(g.pose_measurements) == 2 and len(g.range_measurements) == 2
    m = g.pose_measurements[1]
    assert g.edge_class(m) == INTER_LOOP
    assert np.allclose(m.rotation, [[np.cos(0.1), -np.sin(0.1)], [np.sin(0.1), np.cos(0.1)]])
    assert (m.kappa, m.tau) == (10.0, 5.0)
    assert g.labels[g.poses[0]] == PRIVATE


@pytest.mark.parametrize("name", ["tiny_grid3d", "tiny_grid2d", "tiny_sphere"])
def test_round_trip_is_byte_identical(name, tmp_path):
    text = (FIXTURES / f"{name}.txt").read_text()
    g = parse_text(text)
    assert format_dataset(g) == text
    write(g, tmp_path / "out.txt")
    assert (tmp_path / "out.txt").read_bytes() == text.encode()


def test_generated_dataset_round_trips(tmp_path):
    data = small_dataset(d=3, agents=3, seed=4)
    write(data.graph, tmp_path / "g.txt", ground_truth=data.ground_truth)
    again = parse(tmp_path / "g.txt")
    assert format_dataset(again) == (tmp_path / "g.txt").read_text()
    d, gt = read_vertices(ground_truth_sidecar(tmp_path / "g.txt"))
    assert d == 3 and set(gt) == {s.name for s in data.ground_truth}


@pytest.mark.parametrize("text, exc, line", [
    ("", ParseError, 0),
    ("VERTEX_SE2 a0 0 0 0\nVERTEX_SE2 a0 0 0 0\n", ParseError, 2),
    ("VERTEX_SE2 a0 0 0 0\nVERTEX_SE3:QUAT a1 0 0 0 0 0 0 1\n", ParseError, 2),
    ("VERTEX_SE2 a0 0 0\n", ParseError, 1),
    ("VERTEX_SE2 a0 0 0 0\nVERTEX_SE2 a1 0 0 0\nEDGE_SE2 a0 a2 1 0 0 1 1\n", ParseError, 3),
    ("VERTEX_SE3:QUAT a0 0 0 0 0 0 0 1.1\n", UnitNormViolation, 1),
    ("VERTEX_SE2 a0 0 0 x\n", ParseError, 1),
])
def test_parse_errors_carry_line_numbers(text, exc, line):
    with pytest.raises(exc) as info:
        parse_text(text)
    assert info.value.line == line


def test_missing_file_is_parse_error(tmp_path):
    with pytest.raises(ParseError):
        parse(tmp_path / "missing.txt")


def test_integer_ids_map_to_first_agent():
    g = parse_text("VERTEX_SE2 0 0 0 0\nVERTEX_SE2 1 1 0 0\nEDGE_SE2 0 1 1 0 0 1 1\n")
    assert [s.name for s in g.poses] == ["a0", "a1"]


def test_information_matrix_weights():
    sr, st_ = 0.1, 0.3
    info3 = np.diag([1 / st_ ** 2] * 3 + [1 / sr ** 2] * 3)
    kappa, tau = weights_from_information(info3, 3)
    assert np.isclose(tau, 1 / st_ ** 2) and np.isclose(kappa, 1 / (2 * sr ** 2))
    info2 = np.diag([1 / st_ ** 2] * 2 + [1 / sr ** 2])
    kappa, tau = weights_from_information(info2, 2)
    assert np.isclose(tau, 1 / st_ ** 2) and np.isclose(kappa, 1 / sr ** 2)


def test_full_information_records_parse():
    upper = np.diag([4.0, 4.0, 4.0, 50.0, 50.0, 50.0])[np.triu_indices(6)]
    line = "EDGE_SE3:QUAT a0 a1 1 0 0 0 0 0 1 " + " ".join(str(v) for v in upper)
    g = parse_text("VERTEX_SE3:QUAT a0 0 0 0 0 0 0 1\nVERTEX_SE3:QUAT a1 1 0 0 0 0 0 1\n" + line + "\n")
    m = g.pose_measurements[0]
    assert np.isclose(m.tau, 4.0) and np.isclose(m.kappa, 25.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_quaternion_round_trip(seed):
    R = Rotation.random(random_state=seed).as_matrix()
    q = matrix_to_quat(R)
    assert q[3] >= 0
    assert np.allclose(quat_to_matrix(q), R, atol=1e-12)
    Rt, t = params_to_pose(pose_to_params(R, [1.0, 2.0, 3.0]), 3)
    assert np.allclose(Rt, R, atol=1e-12) and np.allclose(t, [1, 2, 3])


def test_generator_is_deterministic(tmp_path):
    cfg = GeneratorConfig(num_agents=4, num_landmarks=16, range_prob=1.0, seed=7)
    write(generate_synthetic(cfg).graph, tmp_path / "a.txt")
    write(generate_synthetic(cfg).graph, tmp_path / "b.txt")
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()
    cfg2 = GeneratorConfig(num_agents=4, num_landmarks=16, range_prob=1.0, seed=8)
    write(generate_synthetic(cfg2).graph, tmp_path / "c.txt")
    assert (tmp_path / "a.txt").read_bytes() != (tmp_path / "c.txt").read_bytes()


def test_generator_summary_and_structure():
    data = generate_synthetic(GeneratorConfig(num_agents=4, num_landmarks=8, range_prob=1.0, seed=1))
    g = data.graph
    assert data.summary["agents"] == 4 == len(g.agents)
    assert data.summary["range_edges"] == len(g.range_measurements)
    assert data.summary["poses"] == 125
    sizes = [sum(1 for s in g.poses if s.agent == a) for a in g.agents]
    assert max(sizes) - min(sizes) <= 1
    for m in g.range_measurements:
        assert m.rho == 100.0 and m.range >= 0


def test_range_prob_zero_has_no_ranges():
    data = generate_synthetic(GeneratorConfig(num_agents=2, num_landmarks=4, range_prob=0.0, seed=0))
    assert data.summary["range_edges"] == 0
    assert data.summary["landmarks"] == 0


def test_noiseless_ranges_equal_true_distances():
    data = small_dataset(d=3, noise=False, seed=3)
    truth = {s: np.asarray(p[:3]) for s, p in data.ground_truth.items()}
    for m in data.graph.range_measurements:
        assert np.isclose(m.range, np.linalg.norm(truth[m.i] - truth[m.j]), rtol=1e-12)


def test_base_too_small():
    base = make_grid_dataset(side=2, d=2)
    with pytest.raises(BaseDatasetTooSmall):
        generate_synthetic(GeneratorConfig(num_agents=5), base=base)


def test_load_base_errors(tmp_path):
    with pytest.raises(ValueError):
        load_base("no-such-base")
    (tmp_path / "b.txt").write_text(TOY_2D)
    assert load_base(str(tmp_path / "b.txt")).n_poses == 3


def test_config_validation():
    with pytest.raises(ValueError):
        GeneratorConfig(range_prob=1.5)
    with pytest.raises(ValueError):
        GeneratorConfig(rho=0.0)
    with pytest.raises(ValueError):
        GeneratorConfig(num_agents=0)


def test_sweep_has_24_instances():
    configs = list(sweep_configs())
    assert len(configs) == 24
    assert len({instance_name(c) for c in configs}) == 24


def test_split_contiguous():
    assert split_contiguous(10, 3) == [3, 3, 4]
    assert split_contiguous(8, 4) == [2, 2, 2, 2]
