import numpy as np
import pytest

import sgt


def test_plus_sign_needs_two_shape_nodes():
    ds = sgt.gen_plus_sign(7, 1)
    hp = sgt.Hyperparams()
    hp.max_depth = 2
    model = sgt.fit(ds, hp)
    assert model.accuracy(ds) == 1.0
    assert model.stats()["internal"] == 2
    assert model.predict_row([0.0, 0.9]) == 1.0


def test_from_arrays_and_cart_conversion():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, size=(300, 2))
    y = (X[:, 0] > 0.2).astype(float) * 5  # labels 0 and 5
    ds = sgt.Dataset.from_arrays(X, y)
    assert ds.class_labels == ["0", "5"]
    assert ds.feature_names == ["x1", "x2"]
    cart = sgt.fit_cart(ds)
    conv = sgt.from_cart(cart)
    assert conv.stats()["threshold"] == 0
    assert conv.predict(ds) == cart.predict(ds)


def test_json_round_trip(tmp_path):
    ds = sgt.gen_bars(3, 200, 2)
    model = sgt.fit(ds)
    back = sgt.Model.from_json(model.to_json())
    assert back.predict(ds) == model.predict(ds)
    model.save(tmp_path / "m.json")
    assert sgt.Model.load(tmp_path / "m.json").to_json() == model.to_json()
    with pytest.raises(sgt.ModelFormatError):
        sgt.Model.from_json("{")
    assert model.to_dot().startswith("digraph sgt {")


def test_regression_and_refinement():
    ds = sgt.gen_bars_regression(2, 300, 0.1, 4)
    hp = sgt.Hyperparams()
    hp.criterion = "mse"
    hp.max_depth = 3
    model = sgt.fit(ds, hp)
    refined, objective = sgt.tao_refine(model, ds, passes=3, reg=1e-3, params=hp)
    assert all(b <= a for a, b in zip(objective, objective[1:]))
    assert refined.mse(ds) <= model.mse(ds) + 1e-3 * model.stats()["leaves"]


def test_theorem2_and_cli(tmp_path):
    r = sgt.theorem2_gap(3)
    assert r["sgt_nodes"] == 1 and r["cart_nodes"] >= 4
    out = tmp_path / "bars.csv"
    code, text, _ = sgt.run_cli(["synth", "--kind", "bars", "--n", "100", "--out", str(out)])
    assert code == 0 and "wrote 100 rows" in text
    ds = sgt.Dataset.from_csv(out)
    assert ds.rows == 100
    code, _, err = sgt.run_cli(["eval", "--model", str(tmp_path / "none.json"), "--data", str(out)])
    assert code == 2 and err
