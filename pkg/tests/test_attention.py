from __future__ import annotations

import math

import numpy as np
import pytest

from hypersal.attention import (
    GRAD_CHECK_MODULES,
    AttentionParams,
    FeatureMap,
    GateMap,
    GateParams,
    add_positional_embedding,
    grad_check,
    guided_attention,
    init_toy_params,
    run_all_checks,
    sgab_forward,
    sgab_stack,
    softmax_rows,
    srgm_gate,
    srgm_refine,
    _guided_attention_fwd,
)
from hypersal.errors import ValidationError


# ---------------------------------------------------------------------------
# Naive references: explicit loops, no vectorization.


def _ref_softmax_row(row):
    m = max(row)
    e = [math.exp(v - m) for v in row]
    s = sum(e)
    return [v / s for v in e]


def _ref_srgm_refine(x):
    n, c = x.shape
    scale = 1.0 / math.sqrt(c)
    logits = [[sum(x[i][k] * x[j][k] for k in range(c)) * scale for j in range(n)]
              for i in range(n)]
    attn = [_ref_softmax_row(row) for row in logits]
    out = np.zeros_like(x)
    for i in range(n):
        for j in range(c):
            out[i][j] = x[i][j] + sum(attn[i][t] * x[t][j] for t in range(n))
    return out


def _ref_guided_attention(x, gate, ap):
    n, c = x.shape
    q = x @ ap.w_q + ap.b_q
    k = x @ ap.w_k + ap.b_k
    v = x @ ap.w_v + ap.b_v
    scale = 1.0 / math.sqrt(c)
    out = np.zeros_like(x)
    for i in range(n):
        logits = [sum(q[i][d] * k[j][d] for d in range(c)) * scale for j in range(n)]
        weights = _ref_softmax_row(logits)
        for d in range(c):
            out[i][d] = sum(weights[j] * v[j][d] * gate[j][d] for j in range(n))
    return out


def _feature(rng, tokens=4, dim=3):
    return FeatureMap(data=rng.uniform(-1, 1, size=(tokens, dim)), spatial=(1, tokens))


def _gate_map(rng, tokens=4, dim=3):
    data = 1.0 / (1.0 + np.exp(-rng.uniform(-1, 1, size=(tokens, dim))))
    return GateMap(data=data, spatial=(1, tokens))


class TestSrgmRefine:
    def test_zeros_stay_zeros(self):
        f = FeatureMap(data=np.zeros((4, 3)), spatial=(2, 2))
        assert np.all(srgm_refine(f).data == 0.0)

    def test_single_token_doubles(self, rng):
        f = FeatureMap(data=rng.uniform(-1, 1, size=(1, 5)), spatial=(1, 1))
        np.testing.assert_allclose(srgm_refine(f).data, 2.0 * f.data, atol=1e-15)

    def test_matches_naive_reference(self, rng):
        f = _feature(rng)
        np.testing.assert_allclose(
            srgm_refine(f).data, _ref_srgm_refine(f.data), atol=1e-10
        )

    def test_positive_scaling_preserves_attention_argmax(self, rng):
        x = rng.uniform(-1, 1, size=(5, 4))
        base = softmax_rows(x @ x.T / 2.0)
        scaled_logits = (3.0 * x) @ (3.0 * x).T / 2.0
        scaled = softmax_rows(scaled_logits)
        np.testing.assert_array_equal(
            np.argmax(base, axis=1), np.argmax(scaled, axis=1)
        )


class TestSrgmGate:
    def test_zero_params_give_half(self, rng):
        f = _feature(rng)
        gp = GateParams(
            w_phi=np.zeros((3, 3)), b_phi=np.zeros(3),
            w_theta=np.zeros((3, 3)), b_theta=np.zeros(3),
        )
        gate, g_ref = srgm_gate(f, gp)
        assert np.all(gate.data == 0.5)
        assert np.all(g_ref.data == 0.5)

    def test_values_strictly_inside_unit_interval(self, rng):
        params = init_toy_params(spatial=(1, 4), dim=3, seed=3)
        gate, _ = srgm_gate(_feature(rng), params)
        assert gate.data.min() > 0.0
        assert gate.data.max() < 1.0

    def test_gate_monotone_in_head_scale(self, rng):
        # scaling the output layer of the head pushes positive
        # pre-activations monotonically toward 1
        f = _feature(rng)
        base = GateParams(
            w_phi=np.eye(3), b_phi=np.full(3, 1.0),
            w_theta=np.eye(3), b_theta=np.zeros(3),
        )
        previous = None
        for scale in (1.0, 10.0, 100.0):
            gp = GateParams(
                w_phi=base.w_phi, b_phi=base.b_phi,
                w_theta=base.w_theta * scale, b_theta=base.b_theta,
            )
            gate, _ = srgm_gate(f, gp)
            if previous is not None:
                pos = previous > 0.5  # positive pre-activation path
                assert np.all(gate.data[pos] >= previous[pos])
            previous = gate.data

    def test_g_ref_is_channel_mean_on_grid(self, rng):
        params = init_toy_params(spatial=(2, 2), dim=3, seed=1)
        f = FeatureMap(data=rng.uniform(-1, 1, size=(4, 3)), spatial=(2, 2))
        gate, g_ref = srgm_gate(f, params)
        assert g_ref.data.shape == (2, 2)
        np.testing.assert_allclose(
            g_ref.data.ravel(), gate.data.mean(axis=1), atol=1e-15
        )


class TestGuidedAttention:
    def test_unit_gate_equals_plain_attention(self, rng):
        f = _feature(rng)
        params = init_toy_params(spatial=(1, 4), dim=3, seed=2)
        ap = params.attn
        ones = np.ones_like(f.data)
        gated, _ = _guided_attention_fwd(f.data, ones, ap)
        q = f.data @ ap.w_q + ap.b_q
        k = f.data @ ap.w_k + ap.b_k
        v = f.data @ ap.w_v + ap.b_v
        plain = softmax_rows(q @ k.T / math.sqrt(3)) @ v
        assert np.max(np.abs(gated - plain)) <= 1e-12

    def test_epsilon_gate_bounds_output(self, rng):
        f = _feature(rng)
        params = init_toy_params(spatial=(1, 4), dim=3, seed=2)
        eps = 1e-6
        small, _ = _guided_attention_fwd(f.data, np.full_like(f.data, eps), params.attn)
        plain, _ = _guided_attention_fwd(f.data, np.ones_like(f.data), params.attn)
        assert np.linalg.norm(small) <= eps * np.linalg.norm(plain) + 1e-18

    def test_matches_naive_reference(self, rng):
        f = _feature(rng)
        gate = _gate_map(rng)
        params = init_toy_params(spatial=(1, 4), dim=3, seed=5)
        out = guided_attention(f, gate, params)
        ref = _ref_guided_attention(f.data, gate.data, params.attn)
        np.testing.assert_allclose(out.data, ref, atol=1e-10)

    def test_reweighted_values_bounded_by_values(self, rng):
        f = _feature(rng)
        gate = _gate_map(rng)
        params = init_toy_params(spatial=(1, 4), dim=3, seed=5)
        v = f.data @ params.attn.w_v + params.attn.b_v
        v_r = v * gate.data
        assert np.all(np.abs(v_r) <= np.abs(v))

    def test_shape_mismatch_rejected(self, rng):
        f = _feature(rng)
        bad_gate = GateMap(data=np.full((2, 3), 0.5), spatial=(1, 2))
        params = init_toy_params(spatial=(1, 4), dim=3, seed=5)
        with pytest.raises(ValidationError):
            guided_attention(f, bad_gate, params)


class TestSgab:
    def test_zero_projections_give_residual_identity(self, rng):
        params = init_toy_params(spatial=(1, 4), dim=3, n_blocks=1, seed=0)
        bp = params.blocks[0]
        bp.attn.w_v[:] = 0.0
        bp.attn.b_v[:] = 0.0
        bp.w_mlp2[:] = 0.0
        bp.b_mlp2[:] = 0.0
        f = _feature(rng)
        out = sgab_forward(f, _gate_map(rng), bp)
        np.testing.assert_allclose(out.data, f.data, atol=1e-15)

    def test_four_block_stack_preserves_shape(self, rng):
        params = init_toy_params(spatial=(4, 4), dim=8, n_blocks=4, seed=0)
        f = FeatureMap(data=rng.uniform(-1, 1, size=(16, 8)), spatial=(4, 4))
        gate_data = 1.0 / (1.0 + np.exp(-rng.uniform(-1, 1, size=(16, 8))))
        gate = GateMap(data=gate_data, spatial=(4, 4))
        assert len(params.blocks) == 4
        out = sgab_stack(f, gate, params.blocks)
        assert out.data.shape == (16, 8)
        assert out.spatial == (4, 4)


class TestPositionalEmbedding:
    def test_zero_table_is_identity(self, rng):
        f = _feature(rng)
        out = add_positional_embedding(f, np.zeros_like(f.data))
        np.testing.assert_array_equal(out.data, f.data)

    def test_shape_preserved_and_tokens_distinct(self, rng):
        params = init_toy_params(spatial=(1, 4), dim=3, seed=9)
        f = FeatureMap(data=np.zeros((4, 3)), spatial=(1, 4))
        out = add_positional_embedding(f, params)
        assert out.data.shape == (4, 3)
        assert not np.array_equal(out.data[0], out.data[1])


class TestGradChecks:
    @pytest.mark.parametrize("module", GRAD_CHECK_MODULES)
    def test_analytic_matches_finite_differences(self, module):
        assert grad_check(module, seed=0) < 1e-4

    def test_seed_variation(self):
        for seed in (1, 2):
            assert grad_check("sgab", seed=seed) < 1e-4

    def test_corrupted_gradient_detected(self):
        assert grad_check("srgm_refine", seed=0, corrupt="x") > 1e-2
        assert grad_check("srgm_gate", seed=0, corrupt="w_phi") > 1e-2

    def test_unknown_module_rejected(self):
        with pytest.raises(ValidationError):
            grad_check("not-a-module")

    def test_run_all_checks_report(self):
        report = run_all_checks(seed=0)
        assert report["all_pass"]
        names = {entry["check"] for entry in report["checks"]}
        assert {"softmax-rows-sum-to-1", "gate-strictly-inside-(0,1)"} <= names


class TestInvariants:
    def test_softmax_rows_sum_to_one(self, rng):
        z = rng.uniform(-5, 5, size=(12, 12))
        sums = softmax_rows(z).sum(axis=1)
        assert np.max(np.abs(sums - 1.0)) <= 1e-12

    def test_gate_map_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            GateMap(data=np.array([[0.0, 0.5]]), spatial=(1, 1))

    def test_determinism(self, rng):
        params = init_toy_params(seed=4)
        f = FeatureMap(data=np.random.default_rng(11).uniform(-1, 1, (16, 8)), spatial=(4, 4))
        gate, _ = srgm_gate(srgm_refine(f), params)
        a = sgab_stack(f, gate, params.blocks)
        b = sgab_stack(f, gate, params.blocks)
        np.testing.assert_array_equal(a.data, b.data)
