import json

import numpy as np
import pytest

import projlearn as pl


@pytest.fixture(scope="module")
def rings():
    data = pl.generate_rings(30, seed=3)
    coords = pl.tsne(data.values, perplexity=10, iterations=300, seed=3)
    return data, coords


def test_rings_shape_and_labels():
    data = pl.generate_rings(20, seed=1)
    assert data.values.shape == (60, 3)
    assert sorted(set(data.labels)) == [0, 1, 2]
    assert len(data) == 60


def test_split_partitions_rows():
    train, test = pl.split(50, 0.2, seed=4)
    assert len(test) == 10
    assert sorted(train + test) == list(range(50))


def test_tsne_is_deterministic(rings):
    data, coords = rings
    again = pl.tsne(data.values, perplexity=10, iterations=300, seed=3)
    assert coords.shape == (90, 2)
    np.testing.assert_array_equal(coords, again)


def test_train_encode_decode_roundtrip(rings, tmp_path):
    data, coords = rings
    model, test = pl.train(data.values, coords, arch="ael", epochs=5, seed=2)
    assert model.arch == "ael"
    assert len(model.loss_history) == 5
    y = model.encode(data.values)
    x = model.decode(y)
    assert y.shape == (90, 2) and x.shape == (90, 3)
    assert np.isfinite(pl.parametric_mse(model, data.values, coords, test))
    assert np.isfinite(pl.inverse_mse(model, data.values, coords))
    assert pl.reconstruction_mse(model, data.values, coords, test) >= 0

    path = tmp_path / "m.json"
    model.save(path)
    loaded = pl.Model.load(path)
    np.testing.assert_array_equal(loaded.encode(data.values), y)


@pytest.mark.parametrize("arch", ["pr", "vael"])
def test_other_architectures_train(rings, arch):
    data, coords = rings
    model, _ = pl.train(data.values, coords, arch=arch, epochs=2, seed=1)
    assert model.decode(np.zeros((4, 2))).shape == (4, 3)


def test_gradient_map_of_linear_function():
    a = np.array([[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]])
    g = pl.gradient_map_fn(lambda y: y @ a.T, (0.0, 1.0, 0.0, 1.0), 20, 10)
    expected = np.sqrt(np.sum((a @ [2 / 20, 0]) ** 2) + np.sum((a @ [0, 2 / 10]) ** 2))
    np.testing.assert_allclose(g.values[1:-1, 1:-1], expected, rtol=1e-12)
    assert g.values.shape == (10, 20)


def test_gradient_map_of_model(rings):
    data, coords = rings
    model, _ = pl.train(data.values, coords, epochs=2, seed=0)
    g = pl.gradient_map(model, data.values, coords, 32, 16)
    assert g.values.shape == (16, 32)
    assert g.max_gradient >= g.avg_gradient > 0


def test_errors_map_to_exceptions(rings):
    data, coords = rings
    with pytest.raises(pl.UsageError):
        pl.train(data.values, coords, arch="nope")
    with pytest.raises(pl.DataError):
        pl.train(data.values, coords[:10])
    with pytest.raises(pl.UsageError):
        pl.tsne(data.values, perplexity=40)
    assert issubclass(pl.ModelFormatError, pl.DataError)


def test_cli_in_process(tmp_path):
    out = str(tmp_path / "run")
    code, _, err = pl.run_cli(["prepare", "--rings", "--seed", "1", "--out", out])
    assert code == 0, err
    manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert manifest
    code, _, err = pl.run_cli(["train", "--out", out, "--bogus"])
    assert code == 1 and err
