import json

import numpy as np
import pytest

from pwareg.data import (
    ArxOrders,
    GeneratorConfig,
    build_regressors,
    classifier_margin,
    generate_pwa_dataset,
    model_from_dict,
    model_to_dict,
    random_pwa_model,
    read_dataset_csv,
    read_model_json,
    write_dataset_csv,
    write_labeled_csv,
    write_model_json,
)
from pwareg.exceptions import SequenceTooShort
from pwareg.geometry import check_general_position
from pwareg.regression import Dataset, cost_of_labeling


def test_arx_first_order():
    data = build_regressors(u=[9, 8, 7], y=[1, 2, 3], orders=ArxOrders(1, 0))
    assert data.X.tolist() == [[1, 8], [2, 7]]
    assert data.y.tolist() == [2, 3]


def test_arx_static_map():
    data = build_regressors([4, 5, 6], [1, 2, 3], ArxOrders(0, 0))
    assert data.X.tolist() == [[4], [5], [6]]
    assert data.y.tolist() == [1, 2, 3]


def test_arx_pair_count():
    data = build_regressors(np.arange(5), np.arange(5) * 10, ArxOrders(2, 1))
    assert data.N == 3 and data.d == 4
    # t = 2: y1, y0, u2, u1
    assert data.X[0].tolist() == [10, 0, 2, 1]


def test_arx_errors():
    with pytest.raises(SequenceTooShort):
        build_regressors([1, 2], [1, 2], ArxOrders(2, 0))
    with pytest.raises(ValueError):
        build_regressors([1, 2, 3], [1, 2], ArxOrders(1, 0))
    with pytest.raises(ValueError):
        ArxOrders(-1, 0)


@pytest.mark.parametrize("n, d", [(2, 1), (2, 3), (3, 2), (4, 1)])
def test_generator_noiseless_zero_cost(n, d):
    model = random_pwa_model(n, d, np.random.default_rng(n * 10 + d))
    data, labels = generate_pwa_dataset(GeneratorConfig(model, 40, 0.0, seed=1))
    assert cost_of_labeling(data, labels, n).cost <= 1e-20
    assert np.all(classifier_margin(model, data.X) >= 1e-6)
    assert np.all((data.X >= -10) & (data.X <= 10))


def test_generator_deterministic():
    model = random_pwa_model(2, 2, 0)
    a = generate_pwa_dataset(GeneratorConfig(model, 30, 0.5, seed=7))
    b = generate_pwa_dataset(GeneratorConfig(model, 30, 0.5, seed=7))
    assert a[0].X.tobytes() == b[0].X.tobytes()
    assert a[0].y.tobytes() == b[0].y.tobytes()
    assert np.array_equal(a[1], b[1])


def test_generated_points_in_general_position():
    model = random_pwa_model(2, 2, 3)
    data, _ = generate_pwa_dataset(GeneratorConfig(model, 50, 0.0, seed=3))
    assert check_general_position(data.X)[0]


def test_generator_config_validation():
    model = random_pwa_model(2, 1, 0)
    with pytest.raises(ValueError):
        GeneratorConfig(model, 10, -1.0)
    with pytest.raises(ValueError):
        GeneratorConfig(model, 0)


def test_csv_round_trip(tmp_path):
    data = Dataset(np.random.default_rng(0).normal(size=(7, 3)), np.arange(7.0) / 3)
    write_dataset_csv(data, tmp_path / "d.csv")
    back = read_dataset_csv(tmp_path / "d.csv")
    assert back.X.tobytes() == data.X.tobytes()
    assert back.y.tobytes() == data.y.tobytes()
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == "x1,x2,x3,y"


@pytest.mark.parametrize("text", ["", "a,b\n1,2\n", "x1,y\n", "x1,y\n1,2,3\n", "x1,y\n1,zz\n"])
def test_csv_malformed(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(ValueError):
        read_dataset_csv(path)


@pytest.mark.parametrize("n", [2, 3])
def test_model_json_round_trip(tmp_path, n):
    model = random_pwa_model(n, 2, 5)
    write_model_json(model, tmp_path / "m.json")
    back = read_model_json(tmp_path / "m.json")
    X = np.random.default_rng(1).uniform(-10, 10, size=(20, 2))
    assert np.array_equal(back.predict(X)[0], model.predict(X)[0])
    np.testing.assert_array_equal(back.submodels, model.submodels)
    obj = json.loads((tmp_path / "m.json").read_text())
    assert obj["n"] == n and obj["d"] == 2


def test_model_dict_consistency_check():
    obj = model_to_dict(random_pwa_model(2, 1, 0))
    obj["d"] = 5
    with pytest.raises(ValueError):
        model_from_dict(obj)


def test_labeled_csv(tmp_path):
    data = Dataset([[0.0], [1.0]], [1.0, 2.0])
    write_labeled_csv(data, [1, 2], [1.0, 2.5], tmp_path / "l.csv")
    lines = (tmp_path / "l.csv").read_text().splitlines()
    assert lines[0] == "x1,y,label,yhat"
    assert lines[2] == "1.0,2.0,2,2.5"
