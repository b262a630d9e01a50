import json

import numpy as np
import pytest

import pygvf


def test_filled_triangle():
    k = pygvf.Complex(["agent", "agent", "sensor"], [(0, 1), (0, 2), (1, 2)], [(0, 1, 2)])
    assert k.betti() == (1, 0)
    assert np.array_equal(k.b1() @ k.b2(), np.zeros((3, 1)))
    ring = np.array([[1.0], [-1.0], [1.0]])
    d = pygvf.decompose(k, ring)
    assert d["energy"][1] == pytest.approx(1.0)


def test_decomposition_matches_numpy_projections():
    cohort = pygvf.simulate("mixed", seed=3)
    k = cohort["complex"]
    f = cohort["flow"]
    d = pygvf.decompose(k, f)
    b1t = k.b1().T
    grad_part = b1t @ np.linalg.lstsq(b1t, f, rcond=None)[0]
    assert np.allclose(d["gradient"], grad_part, atol=1e-8 * np.linalg.norm(f))
    assert np.allclose(d["gradient"] + d["curl"] + d["harmonic"], f)
    assert sum(d["energy"]) == pytest.approx(1.0)


def test_stream_rebuilds_planted_complex():
    cohort = pygvf.simulate("harmonic_dominant", seed=2)
    k = pygvf.build_complex(cohort["stream"])
    assert k.edges == cohort["complex"].edges
    assert k.betti()[1] == cohort["beta1"] == 2
    l1 = k.laplacian(1)
    assert np.sum(np.linalg.eigvalsh(l1) < 1e-9 * np.abs(l1).max()) == 2


def test_scores():
    k = pygvf.Complex(["agent"] * 3, [(0, 1), (0, 2)])
    f = np.array([[1.0], [1.0]])
    assert pygvf.dps(k, f)[0] == pytest.approx(2.0)
    assert np.all(pygvf.cri(k, f) == 0)
    r = np.array([[0.0], [1.0], [3.0]])
    assert pygvf.grad(k, r)[:, 0].tolist() == [1.0, 3.0]


def test_errors():
    with pytest.raises(pygvf.ValidationError):
        pygvf.Complex(["agent", "agent"], [(1, 0)])
    with pytest.raises(pygvf.ValidationError):
        pygvf.simulate("spiral")


def test_cli_roundtrip(tmp_path):
    assert pygvf.cli(["simulate", "--seed", "2", "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    out = tmp_path / "complex"
    assert pygvf.cli(["build-complex", "--stream", str(tmp_path / "stream.jsonl"), "--out", str(out)]) == 0
    k = pygvf.complex_from_json((out / "complex.json").read_text())
    assert k.num_vertices == 32
    assert pygvf.cli(["no-such-command"]) == 64
