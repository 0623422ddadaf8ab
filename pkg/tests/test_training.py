"""Tests for the learning-rate schedule, loss and optimizer."""

import numpy as np
import pytest

from src.config import ConfigError
from src.errors import DataError, DimensionError
from src.nn.network import build_network
from src.training.loss import l2_gradient, l2_term, loss_mc, nll_term
from src.training.optimizer import OptimizerState, sgd_nesterov_step
from src.training.schedule import TrainConfig, lr_at


class TestSchedule:
    cfg = TrainConfig()

    def test_default_operating_points(self):
        assert lr_at(25, 100, self.cfg) == 0.5
        assert lr_at(95, 100, self.cfg) == 0.0005
        assert lr_at(70, 100, self.cfg) == pytest.approx(0.25025)

    def test_phase_boundaries_are_continuous(self):
        total = 1000
        slope = (self.cfg.lr_peak - self.cfg.lr_floor) / (total * (self.cfg.phase2_frac - self.cfg.phase1_frac))
        for step in (499, 500, 501):
            assert abs(lr_at(step, total, self.cfg) - 0.5) <= slope + 1e-12
        assert lr_at(900, total, self.cfg) == self.cfg.lr_floor

    def test_monotone_non_increasing(self):
        rates = [lr_at(s, 200, self.cfg) for s in range(200)]
        assert all(a >= b for a, b in zip(rates, rates[1:]))

    def test_rejects_non_positive_total(self):
        with pytest.raises(ConfigError):
            lr_at(0, 0, self.cfg)


class TestTrainConfig:
    def test_invalid_values(self):
        with pytest.raises(ConfigError):
            TrainConfig(batch_size=0)
        with pytest.raises(ConfigError):
            TrainConfig(phase1_frac=0.9, phase2_frac=0.5)
        with pytest.raises(ConfigError):
            TrainConfig(drop_prob=1.5)
        with pytest.raises(ConfigError):
            TrainConfig(mode="gaussian")

    def test_from_dict(self):
        cfg = TrainConfig.from_dict({"epochs": 3, "lr_peak": 1, "mode": "dropout"})
        assert cfg.epochs == 3 and cfg.lr_peak == 1.0 and cfg.mode == "dropout"
        with pytest.raises(ConfigError, match="unknown"):
            TrainConfig.from_dict({"epoch": 3})
        with pytest.raises(ConfigError):
            TrainConfig.from_dict({"epochs": "3"})
        with pytest.raises(ConfigError):
            TrainConfig.from_dict({"epochs": True})


class TestLoss:
    def test_perfect_prediction(self):
        probs = np.eye(3)
        assert nll_term(probs, np.array([0, 1, 2])) <= 1e-11

    def test_uniform_prediction(self):
        probs = np.full((4, 10), 0.1)
        assert loss_mc(probs, np.array([0, 3, 5, 9]), [], 0.0) == pytest.approx(np.log(10), abs=1e-12)

    def test_l2_term(self):
        weights = [np.zeros((2, 2)), np.array([[0.0, 2.0]])]
        assert l2_term(weights, 0.01) == pytest.approx(0.04)
        probs = np.eye(2)
        assert loss_mc(probs, np.array([0, 1]), weights, 0.01) == pytest.approx(0.04, abs=1e-10)

    def test_hand_nll(self):
        probs = np.array([[0.5, 0.5], [0.75, 0.25]])
        assert nll_term(probs, np.array([0, 1])) == pytest.approx((np.log(2) + np.log(4)) / 2)

    def test_label_errors(self):
        with pytest.raises(DataError):
            nll_term(np.eye(2), np.array([0, 2]))
        with pytest.raises(DataError):
            nll_term(np.eye(2), np.array([0.0, 1.0]))


class TestNesterov:
    def test_zero_gradient_is_fixed_point(self):
        w = [np.array([1.0, -2.0])]
        state = OptimizerState.zeros_like(w)
        sgd_nesterov_step(w, [np.zeros(2)], state, lr=0.1, momentum=0.9)
        assert w[0].tolist() == [1.0, -2.0]

    def test_zero_momentum_is_plain_sgd(self):
        w = [np.array([1.0, -2.0])]
        state = OptimizerState.zeros_like(w)
        sgd_nesterov_step(w, [np.array([0.5, 1.0])], state, lr=0.1, momentum=0.0)
        np.testing.assert_allclose(w[0], [0.95, -2.1])

    def test_two_steps_hand_computed(self):
        w = [np.array([0.0])]
        state = OptimizerState.zeros_like(w)
        g = [np.array([1.0])]
        sgd_nesterov_step(w, g, state, lr=0.1, momentum=0.5)
        # v = -0.1; w = 0.5*(-0.1) - 0.1
        np.testing.assert_allclose(w[0], [-0.15])
        sgd_nesterov_step(w, g, state, lr=0.1, momentum=0.5)
        # v = -0.15; w = -0.15 + 0.5*(-0.15) - 0.1
        np.testing.assert_allclose(state.velocities[0], [-0.15])
        np.testing.assert_allclose(w[0], [-0.325])

    def test_shape_mismatch(self):
        w = [np.zeros(2)]
        with pytest.raises(DimensionError):
            sgd_nesterov_step(w, [np.zeros(3)], OptimizerState.zeros_like(w), 0.1, 0.9)


class TestWeightDecay:
    cfg = TrainConfig()

    def test_l2_gradient_matches_term(self):
        weights = [np.array([[1.0, -2.0]]), np.array([3.0])]
        grads = l2_gradient(weights, 0.01)
        np.testing.assert_allclose(grads[0], [[0.02, -0.04]])
        np.testing.assert_allclose(grads[1], [0.06])
        # d/dw of 0.01·w² at w=3 by central difference
        h = 1e-6
        slope = (l2_term([np.array([3.0 + h])], 0.01) - l2_term([np.array([3.0 - h])], 0.01)) / (2 * h)
        assert slope == pytest.approx(0.06, rel=1e-6)

    def test_decay_alone_shrinks_every_kernel(self, small_cnn_arch):
        net = build_network(small_cnn_arch, (1, 8, 8), seed=2, dtype=np.float64)
        params = net.weights
        state = OptimizerState.zeros_like(params)
        total = 200
        norms = [[float(np.linalg.norm(w))] for w in params]
        for step in range(total):
            grads = l2_gradient(params, self.cfg.weight_decay)
            sgd_nesterov_step(params, grads, state, lr_at(step, total, self.cfg), self.cfg.momentum)
            for history, w in zip(norms, params):
                history.append(float(np.linalg.norm(w)))
        for history in norms:
            assert all(later < earlier for earlier, later in zip(history, history[1:]))
