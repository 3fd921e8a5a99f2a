import numpy as np
import pytest

from coopnet.errors import DataError
from coopnet.predict import (
    FeatureTable,
    evaluate,
    read_feature_table,
    ridge_solve,
    sigmoid,
    split,
    train_logistic,
    train_ridge,
    write_feature_table,
)
from coopnet.trees import train_extra_trees


def gd_ridge(X, y, lam, steps=200_000, tol=1e-14):
    """Gradient descent on ||y - X t - c||^2 + lam ||t||^2 (intercept c unpenalised)."""
    n, p = X.shape
    t = np.zeros(p)
    c = 0.0
    # Step size from the Lipschitz constant of the gradient.
    A = np.hstack([X, np.ones((n, 1))])
    lr = 1.0 / (2 * (np.linalg.eigvalsh(A.T @ A).max() + lam))
    for _ in range(steps):
        r = X @ t + c - y
        gt = 2 * X.T @ r + 2 * lam * t
        gc = 2 * r.sum()
        t -= lr * gt
        c -= lr * gc
        if max(np.abs(gt).max(), abs(gc)) < tol:
            break
    return t, c


def test_ridge_exact_least_squares():
    theta, icpt = ridge_solve([[1.0], [2.0]], [2.0, 4.0], 0.0, fit_intercept=False)
    assert theta[0] == pytest.approx(2.0) and icpt == 0.0


def test_ridge_penalised_single_feature():
    theta, _ = ridge_solve([[1.0], [2.0]], [2.0, 4.0], 1.0, fit_intercept=False)
    assert theta[0] == pytest.approx(10 / 6)


def test_ridge_matches_gradient_descent():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(40, 4))
    y = X @ np.array([1.0, -2.0, 0.5, 0.0]) + 0.3 + rng.normal(scale=0.1, size=40)
    theta, icpt = ridge_solve(X, y, 0.1)
    t, c = gd_ridge(X, y, 0.1)
    assert np.allclose(theta, t, atol=1e-6)
    assert icpt == pytest.approx(c, abs=1e-6)


def test_ridge_singular_without_penalty():
    X = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    with pytest.raises(DataError, match="lambda > 0"):
        ridge_solve(X, [1.0, 2.0, 3.0], 0.0)
    ridge_solve(X, [1.0, 2.0, 3.0], 0.5)


def test_ridge_shrinkage_is_monotone():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 3))
    y = X @ np.array([2.0, -1.0, 1.0]) + rng.normal(size=30)
    norms = [np.linalg.norm(ridge_solve(X, y, lam)[0]) for lam in (0.0, 0.1, 1, 10, 100, 1e6)]
    assert all(a >= b for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 1e-3


def test_train_ridge_picks_small_lambda_on_linear_data():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(60, 3))
    y = X @ np.array([0.2, -0.1, 0.05]) + 0.5
    table = FeatureTable.from_arrays(X, y)
    model = train_ridge(table, lambdas=(0.01, 1, 100), folds=5)
    assert model.hyperparameters["lambda"] == 0.01
    rep = evaluate(model, table)
    assert rep.rmse <= 1e-3


def test_train_ridge_needs_rows():
    table = FeatureTable.from_arrays(np.arange(3.0), [0.1, 0.2, 0.3])
    with pytest.raises(DataError):
        train_ridge(table, folds=5)


def separable_1d():
    x = np.r_[np.linspace(-3, -1, 10), np.linspace(1, 3, 10)]
    y = (x > 0).astype(float)
    return FeatureTable.from_arrays(x, y, labels=y.astype(int))


def test_logistic_separable():
    table = separable_1d()
    model = train_logistic(table)
    assert evaluate(model, table).prediction_accuracy == 1.0


def test_logistic_squared_sigmoid_cost():
    table = separable_1d()
    model = train_logistic(table, cost="squared_sigmoid", epochs=5000)
    assert evaluate(model, table).prediction_accuracy == 1.0


def test_sigmoid_zero():
    assert sigmoid(0.0) == 0.5


def test_logistic_duplicate_rows_same_decision_function():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(30, 2))
    lab = (X[:, 0] + 0.5 * X[:, 1] + rng.normal(scale=0.5, size=30) > 0).astype(int)
    t1 = FeatureTable.from_arrays(X, lab.astype(float), labels=lab)
    t2 = FeatureTable.from_arrays(np.vstack([X, X]), np.r_[lab, lab].astype(float), labels=np.r_[lab, lab])
    grid = np.array([[a, b] for a in np.linspace(-2, 2, 9) for b in np.linspace(-2, 2, 9)])
    p1 = train_logistic(t1).predict_proba(grid)
    p2 = train_logistic(t2).predict_proba(grid)
    assert np.allclose(p1, p2, atol=1e-6)


def test_logistic_invariant_to_feature_scaling():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(40, 2))
    lab = (X[:, 0] - X[:, 1] > 0).astype(int)
    t1 = FeatureTable.from_arrays(X, lab.astype(float), labels=lab)
    X10 = X.copy()
    X10[:, 0] *= 10
    t2 = FeatureTable.from_arrays(X10, lab.astype(float), labels=lab)
    probe = rng.normal(size=(50, 2))
    probe10 = probe.copy()
    probe10[:, 0] *= 10
    assert np.array_equal(train_logistic(t1).predict(probe), train_logistic(t2).predict(probe10))


def test_logistic_single_class():
    table = FeatureTable.from_arrays(np.arange(5.0), np.zeros(5), labels=np.zeros(5, int))
    with pytest.raises(DataError, match="single-class"):
        train_logistic(table)


def test_constant_feature_is_dropped(caplog):
    X = np.column_stack([np.linspace(-1, 1, 10), np.full(10, 3.0)])
    lab = (X[:, 0] > 0).astype(int)
    model = train_logistic(FeatureTable.from_arrays(X, lab.astype(float), labels=lab))
    assert "dropping constant feature" in caplog.text
    assert model.weights.size == 1


def test_split_stratified():
    lab = np.array([0] * 5 + [1] * 5)
    table = FeatureTable.from_arrays(np.arange(10.0), lab.astype(float), labels=lab)
    train, test = split(table, 0.8, seed=1, stratified=True)
    assert np.bincount(train.labels).tolist() == [4, 4]
    assert len(test) == 2
    again, _ = split(table, 0.8, seed=1, stratified=True)
    assert train.ids == again.ids


def test_split_empty_test_part():
    lab = np.array([0, 1, 1])
    table = FeatureTable.from_arrays(np.arange(3.0), lab.astype(float), labels=lab)
    with pytest.raises(DataError):
        split(table, 0.99, seed=0)


def test_evaluate_binary_perfect_and_inverted():
    table = separable_1d()
    model = train_logistic(table)
    rep = evaluate(model, table)
    assert (rep.prediction_accuracy, rep.mse) == (1.0, 0.0)
    flipped = FeatureTable.from_arrays(table.X, 1 - table.target, labels=1 - table.labels)
    rep = evaluate(model, flipped)
    assert (rep.prediction_accuracy, rep.mse) == (0.0, 1.0)


def test_evaluate_constant_regressor_gives_variance():
    class Mean:
        kind, binary, n_features, hyperparameters = "mean", False, 1, {}

        def __init__(self, value):
            self.value = value

        def predict(self, X):
            return np.full(len(X), self.value)

    y = np.array([0.1, 0.4, 0.2, 0.9])
    table = FeatureTable.from_arrays(np.arange(4.0), y)
    assert evaluate(Mean(y.mean()), table).mse == pytest.approx(y.var())


def test_evaluate_dimension_mismatch():
    model = train_logistic(separable_1d())
    other = FeatureTable.from_arrays(np.zeros((4, 2)), [0.0, 1, 0, 1])
    with pytest.raises(DataError):
        evaluate(model, other)


def test_feature_table_csv_roundtrip(tmp_path):
    table = FeatureTable.from_arrays(np.array([[1.0, 2.0], [3.0, 4.5], [0.0, 1.0]]), [0.2, 0.9, 0.5],
                                     feature_names=["size", "density"])
    path = tmp_path / "t.csv"
    write_feature_table(table, path, header=["config: {}"])
    back = read_feature_table(path, binarize="label")
    assert back.feature_names == ("size", "density")
    assert np.array_equal(back.X, table.X)
    assert np.array_equal(back.target, table.target)
    assert np.array_equal(back.labels, table.labels)


def test_binary_reports_sum_to_one():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(60, 3))
    lab = (X[:, 1] + rng.normal(scale=1.0, size=60) > 0).astype(int)
    table = FeatureTable.from_arrays(X, lab.astype(float), labels=lab)
    train, test = split(table, 0.7, seed=3)
    for model in (train_logistic(train), train_extra_trees(train, n_trees=20, seed=1)):
        rep = evaluate(model, test)
        assert rep.prediction_accuracy + rep.mse == 1.0
