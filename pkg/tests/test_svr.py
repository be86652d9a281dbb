import numpy as np
import pytest

from qp_oracle import svr_dual_oracle
from zslkit.embedding import l2_normalize
from zslkit.kernels import KernelSpec, gram_matrix, heuristic_gamma
from zslkit.model_io import load_model, save_model
from zslkit.smo import ConvergenceError
from zslkit.svr import (
    SemanticRegressor,
    SvrConfig,
    predict,
    predict_batch,
    predict_with_kernel_values,
    train_semantic_regressor,
    train_svr,
)


def random_problem(rng, n, d, gamma=None):
    x = rng.dirichlet(np.ones(d), size=n)
    spec = KernelSpec("rbf_chi2", gamma or heuristic_gamma(x))
    return x, spec, gram_matrix(spec, x)


class TestTrainSvr:
    def test_two_samples_match_oracle(self):
        rng = np.random.default_rng(1)
        x, spec, gram = random_problem(rng, 2, 4)
        y = np.array([-1.0, 1.0])
        model = train_svr(gram, y, SvrConfig(c=2.0, epsilon=0.0, tolerance=1e-10))
        beta_o, bias_o, _ = svr_dual_oracle(gram, y, 2.0, 0.0)
        np.testing.assert_allclose(
            predict_with_kernel_values(model, gram), gram @ beta_o + bias_o, atol=1e-4
        )

    def test_constant_targets_fit_inside_tube(self):
        rng = np.random.default_rng(2)
        _, _, gram = random_problem(rng, 6, 4)
        model = train_svr(gram, np.full(6, 5.0), SvrConfig(c=2.0, epsilon=0.1))
        assert model.support_indices.size == 0
        assert model.bias == pytest.approx(5.0, abs=1e-12)
        np.testing.assert_allclose(
            predict_with_kernel_values(model, gram), np.full(6, 5.0), atol=1e-12
        )

    def test_dual_objective_matches_oracle(self):
        rng = np.random.default_rng(3)
        x, spec, gram = random_problem(rng, 10, 5)
        y = rng.normal(size=10)
        model = train_svr(gram, y, SvrConfig(c=2.0, epsilon=0.1, tolerance=1e-10))
        _, _, obj_o = svr_dual_oracle(gram, y, 2.0, 0.1)
        assert abs(model.dual_objective - obj_o) <= 1e-6 * max(1.0, abs(obj_o))

    def test_box_feasibility(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            _, _, gram = random_problem(rng, 12, 6)
            y = rng.normal(scale=2.0, size=12)
            model = train_svr(gram, y, SvrConfig(c=2.0, epsilon=0.05))
            assert np.all(np.abs(model.dual_coefficients) <= 2.0 + 1e-9)

    def test_kkt_residuals(self):
        # non-bound support vectors sit on the tube; off-tube points are at the box
        rng = np.random.default_rng(5)
        _, _, gram = random_problem(rng, 20, 6)
        y = rng.normal(size=20)
        config = SvrConfig(c=2.0, epsilon=0.1, tolerance=1e-8)
        model = train_svr(gram, y, config)
        preds = predict_with_kernel_values(model, gram)
        beta = model.coefficient_vector()
        resid = np.abs(preds - y)
        free = (np.abs(beta) > 1e-7) & (np.abs(beta) < 2.0 - 1e-7)
        assert np.all(np.abs(resid[free] - 0.1) < 1e-4)
        outside = resid > 0.1 + 1e-4
        assert np.all(np.abs(np.abs(beta[outside]) - 2.0) < 1e-7)

    def test_interpolates_with_tiny_epsilon_and_large_c(self):
        rng = np.random.default_rng(6)
        x = rng.dirichlet(np.ones(4), size=5)
        spec = KernelSpec("rbf_chi2", 2.0)
        gram = gram_matrix(spec, x)
        assert np.linalg.eigvalsh(gram).min() > 1e-10  # strictly PD
        y = rng.normal(size=5)
        model = train_svr(gram, y, SvrConfig(c=1e6, epsilon=0.0, tolerance=1e-10))
        np.testing.assert_allclose(predict_with_kernel_values(model, gram), y, atol=1e-3)

    def test_validation_errors(self):
        config = SvrConfig()
        with pytest.raises(ValueError, match="square"):
            train_svr(np.ones((2, 3)), np.zeros(2), config)
        with pytest.raises(ValueError, match="symmetric"):
            train_svr(np.array([[1.0, 0.5], [0.1, 1.0]]), np.zeros(2), config)
        with pytest.raises(ValueError, match="targets length"):
            train_svr(np.eye(3), np.zeros(2), config)
        with pytest.raises(ValueError, match="at least 2"):
            train_svr(np.eye(1), np.zeros(1), config)

    def test_nonconvergence_carries_diagnostics(self):
        rng = np.random.default_rng(7)
        _, _, gram = random_problem(rng, 10, 5)
        y = rng.normal(size=10)
        with pytest.raises(ConvergenceError) as err:
            train_svr(gram, y, SvrConfig(c=2.0, epsilon=0.0, tolerance=1e-12, max_passes=2))
        assert err.value.iterations == 2
        assert err.value.violation > 0
        assert err.value.result is not None

    def test_config_validation(self):
        with pytest.raises(ValueError, match="c must be positive"):
            SvrConfig(c=0.0)
        with pytest.raises(ValueError, match="epsilon"):
            SvrConfig(epsilon=-0.1)
        with pytest.raises(ValueError, match="tolerance"):
            SvrConfig(tolerance=0.0)


class TestSemanticRegressor:
    def test_single_dimension_reduces_to_train_svr(self):
        rng = np.random.default_rng(8)
        x, spec, gram = random_problem(rng, 8, 5)
        y = rng.normal(size=8)
        config = SvrConfig(c=2.0, epsilon=0.05)
        reg = train_semantic_regressor(x, y[:, None], config, spec)
        solo = train_svr(gram, y, config, spec)
        np.testing.assert_array_equal(reg.models[0].support_indices, solo.support_indices)
        np.testing.assert_array_equal(
            reg.models[0].dual_coefficients, solo.dual_coefficients
        )
        assert reg.models[0].bias == solo.bias

    def test_constant_unit_vector_targets(self):
        rng = np.random.default_rng(9)
        x = rng.dirichlet(np.ones(5), size=10)
        spec = KernelSpec("rbf_chi2", heuristic_gamma(x))
        target = l2_normalize(np.array([1.0, 2.0, 2.0]))
        emb = np.tile(target, (10, 1))
        reg = train_semantic_regressor(x, emb, SvrConfig(epsilon=0.05), spec)
        probe = rng.dirichlet(np.ones(5))
        np.testing.assert_allclose(predict(reg, probe), target, atol=0.05 + 1e-9)

    def test_per_dimension_independence(self):
        rng = np.random.default_rng(10)
        x, spec, _ = random_problem(rng, 8, 5)
        emb = rng.normal(size=(8, 3))
        scrambled = emb.copy()
        scrambled[:, 1] = rng.permutation(scrambled[:, 1])
        scrambled[:, 2] = -scrambled[:, 2]
        config = SvrConfig(c=2.0, epsilon=0.05)
        a = train_semantic_regressor(x, emb, config, spec)
        b = train_semantic_regressor(x, scrambled, config, spec)
        np.testing.assert_array_equal(
            a.models[0].dual_coefficients, b.models[0].dual_coefficients
        )
        assert a.models[0].bias == b.models[0].bias

    def test_no_support_vectors_predicts_bias(self):
        rng = np.random.default_rng(11)
        x = rng.dirichlet(np.ones(4), size=6)
        spec = KernelSpec("rbf_chi2", 1.0)
        emb = np.tile([0.25, -0.5], (6, 1))
        reg = train_semantic_regressor(x, emb, SvrConfig(epsilon=0.1), spec)
        assert reg.pool_features.shape[0] == 0
        np.testing.assert_allclose(
            predict(reg, rng.dirichlet(np.ones(4))), [0.25, -0.5], atol=1e-12
        )

    def test_support_storage_order_is_immaterial(self):
        rng = np.random.default_rng(12)
        x, spec, _ = random_problem(rng, 10, 5)
        emb = rng.normal(size=(10, 2))
        reg = train_semantic_regressor(x, emb, SvrConfig(epsilon=0.01), spec)
        perm = rng.permutation(reg.pool_features.shape[0])
        permuted = SemanticRegressor(
            kernel=reg.kernel,
            dimension=reg.dimension,
            feature_dim=reg.feature_dim,
            n_train=reg.n_train,
            models=reg.models,
            pool_indices=reg.pool_indices[perm],
            pool_features=reg.pool_features[perm],
            coefficients=reg.coefficients[:, perm],
            biases=reg.biases,
        )
        probes = rng.dirichlet(np.ones(5), size=20)
        np.testing.assert_allclose(
            predict_batch(reg, probes), predict_batch(permuted, probes), atol=1e-10
        )

    def test_beats_constant_mean_on_synthetic_linear_map(self):
        rng = np.random.default_rng(13)
        d_x, d_z, n_train, n_test = 8, 4, 50, 20
        mapping = rng.normal(size=(d_z, d_x))
        x = rng.dirichlet(np.ones(d_x), size=n_train + n_test)
        z = x @ mapping.T + 0.02 * rng.normal(size=(n_train + n_test, d_z))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        x_tr, x_te, z_tr, z_te = x[:n_train], x[n_train:], z[:n_train], z[n_train:]
        spec = KernelSpec("rbf_chi2", heuristic_gamma(x_tr))
        reg = train_semantic_regressor(x_tr, z_tr, SvrConfig(epsilon=0.05), spec)
        proj = predict_batch(reg, x_te)

        def mean_cosdist(pred):
            pn = pred / np.linalg.norm(pred, axis=1, keepdims=True)
            return float(np.mean(1.0 - np.sum(pn * z_te, axis=1)))

        baseline = np.tile(z_tr.mean(axis=0), (n_test, 1))
        assert mean_cosdist(proj) < mean_cosdist(baseline)

    def test_thread_count_does_not_change_results(self):
        rng = np.random.default_rng(14)
        x, spec, _ = random_problem(rng, 10, 4)
        emb = rng.normal(size=(10, 4))
        config = SvrConfig(epsilon=0.05)
        serial = train_semantic_regressor(x, emb, config, spec, n_threads=1)
        threaded = train_semantic_regressor(x, emb, config, spec, n_threads=3)
        np.testing.assert_array_equal(serial.coefficients, threaded.coefficients)
        np.testing.assert_array_equal(serial.biases, threaded.biases)

    def test_env_var_caps_worker_count(self, monkeypatch):
        from zslkit.svr import resolve_threads

        monkeypatch.delenv("ZSLKIT_THREADS", raising=False)
        assert resolve_threads(None) == 1
        assert resolve_threads(4) == 4
        monkeypatch.setenv("ZSLKIT_THREADS", "2")
        assert resolve_threads(None) == 2
        assert resolve_threads(8) == 2
        assert resolve_threads(1) == 1

    def test_shape_validation(self):
        spec = KernelSpec("rbf_chi2", 1.0)
        with pytest.raises(ValueError, match="sample count mismatch"):
            train_semantic_regressor(
                np.ones((3, 2)) / 2, np.ones((2, 2)), SvrConfig(), spec
            )
        rng = np.random.default_rng(15)
        x = rng.dirichlet(np.ones(3), size=4)
        reg = train_semantic_regressor(x, rng.normal(size=(4, 2)), SvrConfig(epsilon=0.0), spec)
        with pytest.raises(ValueError, match="feature dimension mismatch"):
            predict(reg, np.ones(5) / 5)


class TestModelSerialization:
    def _trained(self, rng):
        x, spec, _ = random_problem(rng, 8, 4)
        emb = rng.normal(size=(8, 3))
        return x, train_semantic_regressor(x, emb, SvrConfig(epsilon=0.01), spec)

    def test_round_trip_predicts_identically(self, tmp_path):
        rng = np.random.default_rng(16)
        _, reg = self._trained(rng)
        path = tmp_path / "model.json"
        save_model(reg, path)
        loaded = load_model(path)
        probes = rng.dirichlet(np.ones(4), size=100)
        np.testing.assert_allclose(
            predict_batch(reg, probes), predict_batch(loaded, probes), atol=1e-12
        )

    def test_truncated_file_rejected(self, tmp_path):
        rng = np.random.default_rng(17)
        _, reg = self._trained(rng)
        path = tmp_path / "model.json"
        save_model(reg, path)
        path.write_text(path.read_text()[: path.stat().st_size // 2])
        with pytest.raises(ValueError, match="invalid model file"):
            load_model(path)

    def test_dimension_mismatch_rejected(self, tmp_path):
        import json

        rng = np.random.default_rng(18)
        _, reg = self._trained(rng)
        path = tmp_path / "model.json"
        save_model(reg, path)
        doc = json.loads(path.read_text())
        doc["dimension"] = 7
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match="declares dimension 7 but contains 3"):
            load_model(path)

    def test_version_mismatch_rejected(self, tmp_path):
        import json

        rng = np.random.default_rng(19)
        _, reg = self._trained(rng)
        path = tmp_path / "model.json"
        save_model(reg, path)
        doc = json.loads(path.read_text())
        doc["version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match="unsupported model schema version"):
            load_model(path)
