import math

import numpy as np
import pytest

from loramerge import (
    AlignmentError,
    DeltaMap,
    MergeConfig,
    ParameterError,
    dare_prune,
    disjoint_merge,
    elect_sign,
    merge,
    ties_merge,
    trim,
)
from loramerge.merging import _trim_count
from conftest import deltas_bitwise_equal, random_delta_set, ties_reference


def _single(values, label="x"):
    return DeltaMap.from_arrays({"l": np.array(values, dtype=np.float32)}, label=label)


def _column_deltas(rows, labels=None):
    """One DeltaMap per model, each holding a 1x1 layer per value in rows."""
    count = len(rows)
    labels = labels or [f"m{i}" for i in range(count)]
    return [
        DeltaMap.from_arrays({"l": np.array([[v]], dtype=np.float32)}, label=labels[i])
        for i, v in enumerate(rows)
    ]


class TestMergeConfig:
    @pytest.mark.parametrize(
        "pipeline",
        [("TIES",), ("KNOTS", "TIES"), ("DARE", "TIES"), ("DARE", "KNOTS", "TIES")],
    )
    def test_valid_pipelines(self, pipeline):
        assert MergeConfig(pipeline).pipeline == pipeline

    @pytest.mark.parametrize(
        "pipeline",
        [(), ("KNOTS",), ("DARE",), ("TIES", "DARE"), ("KNOTS", "DARE", "TIES"), ("LINEAR",)],
    )
    def test_invalid_pipelines(self, pipeline):
        with pytest.raises(ParameterError):
            MergeConfig(pipeline)

    def test_pipeline_names_normalized(self):
        assert MergeConfig(("dare", "Ties")).pipeline == ("DARE", "TIES")

    @pytest.mark.parametrize("density", [0.0, -0.1, 1.5])
    def test_density_range(self, density):
        with pytest.raises(ParameterError):
            MergeConfig(("TIES",), density=density)

    @pytest.mark.parametrize("drop_rate", [-0.1, 1.0])
    def test_drop_rate_range(self, drop_rate):
        with pytest.raises(ParameterError):
            MergeConfig(("DARE", "TIES"), drop_rate=drop_rate)

    def test_drop_rate_defaults_to_one_minus_density(self):
        assert MergeConfig(("DARE", "TIES"), density=0.5).effective_drop_rate == 0.5
        assert MergeConfig(("DARE", "TIES"), density=1.0).effective_drop_rate == 0.0
        assert MergeConfig(("DARE", "TIES"), density=0.5, drop_rate=0.2).effective_drop_rate == 0.2

    def test_weights_must_be_positive(self):
        with pytest.raises(ParameterError):
            MergeConfig(("TIES",), weights=(1.0, 0.0))

    def test_weights_must_be_numeric(self):
        with pytest.raises(ParameterError):
            MergeConfig(("TIES",), weights=("heavy", 1.0))

    def test_weight_vector_count_check(self):
        config = MergeConfig(("TIES",), weights=(1.0, 2.0))
        with pytest.raises(ParameterError):
            config.weight_vector(3)

    def test_json_round_trip(self):
        doc = {
            "pipeline": ["DARE", "TIES"],
            "density": 0.5,
            "drop_rate": 0.5,
            "weights": [1, 1, 1, 1, 1],
            "seed": 42,
        }
        config = MergeConfig.from_json_dict(doc)
        assert config.to_json_dict() == {
            "pipeline": ["DARE", "TIES"],
            "density": 0.5,
            "drop_rate": 0.5,
            "weights": [1.0, 1.0, 1.0, 1.0, 1.0],
            "seed": 42,
        }

    def test_unknown_config_key_rejected(self):
        with pytest.raises(ParameterError):
            MergeConfig.from_json_dict({"pipeline": ["TIES"], "dencity": 0.5})


class TestTrim:
    def test_magnitude_example(self):
        out = trim(_single([[3, -1, 0.5, 2]]), 0.5)
        assert out.layers["l"].values.tolist() == [[3.0, 0.0, 0.0, 2.0]]

    def test_density_one_is_identity(self):
        delta = _single([[0.1, -0.2, 0.3]])
        out = trim(delta, 1.0)
        assert deltas_bitwise_equal(out, delta)

    def test_tie_break_keeps_lower_flat_index(self):
        out = trim(_single([[1, -1, 1, -1]]), 0.5)
        assert out.layers["l"].values.tolist() == [[1.0, -1.0, 0.0, 0.0]]

    @pytest.mark.parametrize("density", [0.0, -0.5, 1.2])
    def test_density_out_of_range(self, density):
        with pytest.raises(ParameterError):
            trim(_single([[1.0]]), density)

    def test_count_uses_decimal_value_of_density(self):
        assert _trim_count(0.8, 5) == 4
        assert _trim_count(0.1, 30) == 3
        assert _trim_count(0.2, 15) == 3
        assert _trim_count(0.34, 50) == 17
        assert _trim_count(0.5, 5) == 3

    def test_cardinality_bound(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            n = int(rng.integers(1, 40))
            density = float(rng.choice([0.25, 0.5, 0.75, 1.0]))
            delta = _single([rng.standard_normal(n).tolist()])
            out = trim(delta, density).layers["l"].values
            keep = _trim_count(density, n)
            assert np.count_nonzero(out) <= keep
            # gaussian input has no exact zeros, so equality holds
            assert np.count_nonzero(out) == keep

    def test_cardinality_inequality_with_sparse_input(self):
        # only one nonzero but k = 3: bound holds without equality
        out = trim(_single([[0.0, 0.0, 5.0, 0.0]]), 0.75).layers["l"].values
        assert np.count_nonzero(out) == 1
        assert out[0, 2] == 5.0

    def test_kept_entries_unchanged(self):
        rng = np.random.default_rng(22)
        values = rng.standard_normal((4, 5)).astype(np.float32)
        out = trim(DeltaMap.from_arrays({"l": values}), 0.5).layers["l"].values
        mask = out != 0
        np.testing.assert_array_equal(out[mask], values[mask])


class TestDare:
    def test_zero_drop_rate_is_bitwise_identity(self):
        rng = np.random.default_rng(23)
        delta = _single(rng.standard_normal((3, 4)).tolist())
        out = dare_prune(delta, 0.0, seed=99)
        assert deltas_bitwise_equal(out, delta)

    def test_same_seed_same_output(self):
        delta = _single([[1.0, 2.0, 3.0, 4.0]])
        a = dare_prune(delta, 0.5, seed=7)
        b = dare_prune(delta, 0.5, seed=7)
        assert deltas_bitwise_equal(a, b)

    def test_different_seeds_differ(self):
        delta = _single([np.arange(1, 257, dtype=np.float32).tolist()])
        a = dare_prune(delta, 0.5, seed=1)
        b = dare_prune(delta, 0.5, seed=2)
        assert not deltas_bitwise_equal(a, b)

    def test_streams_keyed_by_label(self):
        values = [np.arange(1, 257, dtype=np.float32).tolist()]
        a = dare_prune(_single(values, label="en"), 0.5, seed=1)
        b = dare_prune(_single(values, label="de"), 0.5, seed=1)
        assert not deltas_bitwise_equal(a, b)

    def test_survivors_rescaled(self):
        delta = _single([[1.0] * 64])
        out = dare_prune(delta, 0.75, seed=3).layers["l"].values
        survivors = out[out != 0]
        np.testing.assert_allclose(survivors, 4.0, rtol=1e-6)

    def test_drop_fraction_matches_rate(self):
        delta = _single([[1.0] * 20000])
        out = dare_prune(delta, 0.3, seed=5).layers["l"].values
        dropped = 1.0 - np.count_nonzero(out) / out.size
        assert abs(dropped - 0.3) < 0.02

    def test_scalar_mean_is_unbiased(self):
        delta = _single([[1.0]])
        for p in (0.25, 0.5):
            samples = [
                float(dare_prune(delta, p, seed=s).layers["l"].values[0, 0])
                for s in range(2000)
            ]
            stderr = math.sqrt(p / (1 - p) / len(samples))
            assert abs(np.mean(samples) - 1.0) < 3 * stderr

    @pytest.mark.parametrize("rate", [-0.01, 1.0, 1.5])
    def test_rate_out_of_range(self, rate):
        with pytest.raises(ParameterError):
            dare_prune(_single([[1.0]]), rate)


class TestElectSign:
    def test_majority_magnitude_wins(self):
        signs = elect_sign(_column_deltas([2.0, -1.0, -0.5]))
        assert signs["l"].tolist() == [[1]]

    def test_exact_cancellation_elects_zero(self):
        signs = elect_sign(_column_deltas([1.0, -1.0]))
        assert signs["l"].tolist() == [[0]]

    def test_weights_shift_the_vote(self):
        signs = elect_sign(_column_deltas([1.0, -3.0]), weights=(4.0, 1.0))
        assert signs["l"].tolist() == [[1]]

    def test_shape_mismatch_is_alignment_error(self):
        a = DeltaMap.from_arrays({"l": np.ones((1, 2), np.float32)})
        b = DeltaMap.from_arrays({"l": np.ones((2, 1), np.float32)})
        with pytest.raises(AlignmentError):
            elect_sign([a, b])

    def test_layer_names_mismatch_is_alignment_error(self):
        a = DeltaMap.from_arrays({"l": np.ones((1, 2), np.float32)})
        b = DeltaMap.from_arrays({"m": np.ones((1, 2), np.float32)})
        with pytest.raises(AlignmentError):
            elect_sign([a, b])


class TestDisjointMerge:
    def test_only_matching_signs_average(self):
        deltas = _column_deltas([2.0, -1.0, -0.5])
        out = disjoint_merge(deltas, elect_sign(deltas))
        assert out.layers["l"].values.tolist() == [[2.0]]

    def test_same_sign_mean(self):
        deltas = _column_deltas([2.0, 4.0])
        out = disjoint_merge(deltas, elect_sign(deltas))
        assert out.layers["l"].values.tolist() == [[3.0]]

    def test_all_zero_inputs_give_zero(self):
        deltas = _column_deltas([0.0, 0.0])
        out = disjoint_merge(deltas, elect_sign(deltas))
        assert out.layers["l"].values.tolist() == [[0.0]]

    def test_sign_consistency_property(self):
        rng = np.random.default_rng(31)
        deltas = random_delta_set(rng, 4)
        signs = elect_sign(deltas)
        out = disjoint_merge(deltas, signs)
        for layer, block in out.layers.items():
            nonzero = block.values != 0
            assert np.array_equal(
                np.sign(block.values[nonzero]), signs[layer][nonzero].astype(np.float32)
            )

    def test_output_within_contributing_range(self):
        rng = np.random.default_rng(32)
        deltas = random_delta_set(rng, 3)
        signs = elect_sign(deltas)
        out = disjoint_merge(deltas, signs)
        stacked = np.stack([d.layers["layer0"].values for d in deltas])
        merged = out.layers["layer0"].values
        sign = signs["layer0"]
        matching = (np.sign(stacked) == sign) & (sign != 0)
        lo = np.where(matching, stacked, np.inf).min(axis=0)
        hi = np.where(matching, stacked, -np.inf).max(axis=0)
        picked = matching.any(axis=0)
        assert (merged[picked] >= lo[picked] - 1e-6).all()
        assert (merged[picked] <= hi[picked] + 1e-6).all()


class TestTiesMerge:
    def test_single_input_density_one_identity(self):
        rng = np.random.default_rng(33)
        (delta,) = random_delta_set(rng, 1)
        out = ties_merge([delta], MergeConfig(("TIES",), density=1.0))
        assert deltas_bitwise_equal(out, delta)

    def test_duplicate_inputs_identity(self):
        rng = np.random.default_rng(34)
        (delta,) = random_delta_set(rng, 1)
        out = ties_merge([delta, delta], MergeConfig(("TIES",), density=1.0))
        assert deltas_bitwise_equal(out, delta)

    def test_matches_reference_on_three_vectors(self):
        rng = np.random.default_rng(35)
        rows = [rng.standard_normal(4).astype(np.float32) for _ in range(3)]
        deltas = [DeltaMap.from_arrays({"l": r[None, :]}, label=f"m{i}") for i, r in enumerate(rows)]
        out = ties_merge(deltas, MergeConfig(("TIES",), density=0.5))
        expected = ties_reference([r.tolist() for r in rows], [1.0, 1.0, 1.0], 0.5)
        np.testing.assert_allclose(out.layers["l"].values[0], expected, atol=1e-6)

    def test_matches_reference_randomized(self):
        rng = np.random.default_rng(36)
        for _ in range(100):
            count = int(rng.integers(2, 5))
            n = int(rng.integers(1, 17))
            rows = [rng.standard_normal(n).astype(np.float32) for _ in range(count)]
            weights = tuple(float(w) for w in rng.uniform(0.2, 3.0, count))
            density = float(rng.choice([0.25, 0.5, 0.75, 1.0]))
            deltas = [
                DeltaMap.from_arrays({"l": r[None, :]}, label=f"m{i}")
                for i, r in enumerate(rows)
            ]
            config = MergeConfig(("TIES",), density=density, weights=weights)
            out = ties_merge(deltas, config).layers["l"].values[0]
            expected = ties_reference([r.tolist() for r in rows], list(weights), density)
            np.testing.assert_allclose(out, expected, atol=1e-6)

    def test_homogeneity_power_of_two_is_bitwise(self):
        rng = np.random.default_rng(37)
        deltas = random_delta_set(rng, 3)
        config = MergeConfig(("TIES",), density=0.5)
        base = ties_merge(deltas, config)
        for scale in (0.5, 2.0, 8.0):
            scaled_inputs = [
                DeltaMap.from_arrays(
                    {k: b.values * np.float32(scale) for k, b in d.layers.items()}, d.label
                )
                for d in deltas
            ]
            out = ties_merge(scaled_inputs, config)
            for layer in base.layers:
                expected = base.layers[layer].values * np.float32(scale)
                assert out.layers[layer].values.tobytes() == expected.tobytes()

    def test_weight_scale_invariance(self):
        rng = np.random.default_rng(38)
        deltas = random_delta_set(rng, 3)
        a = ties_merge(deltas, MergeConfig(("TIES",), density=0.5, weights=(1.0, 2.0, 3.0)))
        b = ties_merge(deltas, MergeConfig(("TIES",), density=0.5, weights=(2.5, 5.0, 7.5)))
        for layer in a.layers:
            np.testing.assert_allclose(
                a.layers[layer].values, b.layers[layer].values, atol=1e-6
            )

    def test_empty_input_rejected(self):
        with pytest.raises(ParameterError):
            ties_merge([], MergeConfig(("TIES",)))


class TestMergeDispatch:
    def test_dare_ties_at_zero_drop_equals_ties_bitwise(self):
        rng = np.random.default_rng(39)
        for density in (1.0, 0.5):
            deltas = random_delta_set(rng, 3)
            ties = merge(deltas, MergeConfig(("TIES",), density=density))
            dare = merge(
                deltas, MergeConfig(("DARE", "TIES"), density=density, drop_rate=0.0, seed=5)
            )
            assert deltas_bitwise_equal(ties, dare)

    def test_output_label_is_config_summary(self):
        rng = np.random.default_rng(40)
        deltas = random_delta_set(rng, 2)
        config = MergeConfig(("DARE", "TIES"), density=0.5, seed=42)
        out = merge(deltas, config)
        assert out.label == config.summary()
        assert out.label == "DARE-TIES(density=0.5, drop_rate=0.5, seed=42)"

    def test_permuting_inputs_and_weights_is_stable(self):
        rng = np.random.default_rng(41)
        weights = (0.7, 1.3, 2.1)
        permutation = (2, 0, 1)
        for pipeline in (
            ("TIES",),
            ("DARE", "TIES"),
            ("KNOTS", "TIES"),
            ("DARE", "KNOTS", "TIES"),
        ):
            deltas = random_delta_set(rng, 3)
            config = MergeConfig(pipeline, density=0.5, weights=weights, seed=11)
            base = merge(deltas, config)
            shuffled = merge(
                [deltas[i] for i in permutation],
                MergeConfig(
                    pipeline,
                    density=0.5,
                    weights=tuple(weights[i] for i in permutation),
                    seed=11,
                ),
            )
            for layer in base.layers:
                np.testing.assert_allclose(
                    base.layers[layer].values,
                    shuffled.layers[layer].values,
                    atol=1e-6,
                )

    def test_knots_single_input_rejected(self):
        rng = np.random.default_rng(42)
        deltas = random_delta_set(rng, 1)
        with pytest.raises(ParameterError):
            merge(deltas, MergeConfig(("KNOTS", "TIES")))

    def test_empty_inputs_rejected(self):
        with pytest.raises(ParameterError):
            merge([], MergeConfig(("TIES",)))

    def test_weight_count_mismatch_rejected(self):
        rng = np.random.default_rng(43)
        deltas = random_delta_set(rng, 3)
        with pytest.raises(ParameterError):
            merge(deltas, MergeConfig(("TIES",), weights=(1.0, 2.0)))

    def test_determinism_repeated_runs(self):
        rng = np.random.default_rng(44)
        deltas = random_delta_set(rng, 4)
        config = MergeConfig(("DARE", "KNOTS", "TIES"), density=0.5, seed=123)
        a = merge(deltas, config)
        b = merge(deltas, config)
        assert deltas_bitwise_equal(a, b)
