# Copyright 2026 The slcgan Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Smoke tests for the Python bindings."""

import itertools

import numpy as np
import pytest

import slcgan


def tiny_config(tmp_path, mode="slcgan", **extra):
    return slcgan.with_overrides(
        slcgan.ring_config(mode, seed=3),
        train__num_clusters=3,
        train__batch_size=16,
        train__iterations=10,
        arch__latent_dim=3,
        arch__embed_dim=4,
        arch__hidden=8,
        arch__c_hidden=8,
        arch__penultimate=6,
        data__size=256,
        run__out_dir=tmp_path / mode,
        **extra,
    )


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    return slcgan.train(tiny_config(tmp_path_factory.mktemp("runs")))


def test_ring_config_resolves():
    text = slcgan.ring_config("ugan", seed=4)
    assert "train.mode = ugan" in text
    assert "train.seed = 4" in text
    assert slcgan.resolve_config(text) == text


def test_config_errors_are_value_errors():
    with pytest.raises(slcgan.ConfigError, match="train.modee"):
        slcgan.resolve_config("train.modee = slcgan\n")
    with pytest.raises(ValueError):
        slcgan.ring_config("gan")


def test_overrides_replace_existing_keys():
    text = slcgan.with_overrides(slcgan.ring_config("slcgan"), train__iterations=7, train__mi_updates_c=True)
    assert text.count("train.iterations") == 1
    assert "train.iterations = 7" in text
    assert "train.mi_updates_c = true" in text


def test_train_writes_a_run(run_dir):
    assert (run_dir / "checkpoints" / "final.ck").is_file()
    rows = (run_dir / "metrics.csv").read_text().splitlines()
    assert len(rows) == 11
    assert rows[-1].startswith("10,")


def test_evaluate_reports_cluster_metrics(run_dir):
    report = slcgan.evaluate(run_dir / "checkpoints" / "final.ck", ["purity", "accuracy", "histogram"])
    assert 0.0 <= report["accuracy"] <= report["purity"] <= 1.0
    assert sum(report["cluster_histogram"]) == 256
    with pytest.raises(slcgan.MetricError, match="eval.feature_extractor"):
        slcgan.evaluate(run_dir / "checkpoints" / "final.ck", ["fid"])


def test_generate_and_cluster(run_dir):
    ck = run_dir / "checkpoints" / "final.ck"
    x, ids = slcgan.generate(ck, 50, seed=1)
    assert x.shape == (50, 2)
    assert len(ids) == 50 and set(ids) <= {0, 1, 2}
    again, _ = slcgan.generate(ck, 50, seed=1)
    np.testing.assert_array_equal(x, again)
    fixed, fixed_ids = slcgan.generate(ck, 5, seed=2, cluster=1)
    assert fixed_ids == [1] * 5
    probs = slcgan.cluster_probabilities(ck, x)
    assert probs.shape == (50, 3)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    with pytest.raises(slcgan.ConfigError):
        slcgan.generate(ck, 5, cluster=3)


def test_sample_writes_grid(run_dir, tmp_path):
    path = slcgan.sample(run_dir / "checkpoints" / "final.ck", cols=4, out=tmp_path, seed=5)
    assert str(path).endswith("grid.csv")
    assert len(open(path).read().splitlines()) == 1 + 3 * 4


def test_missing_checkpoint_raises(tmp_path):
    with pytest.raises(slcgan.CheckpointError):
        slcgan.generate(tmp_path / "nope.ck", 1)


def test_clustering_accuracy_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(20):
        clusters = rng.integers(0, 3, 40).tolist()
        labels = rng.integers(0, 4, 40).tolist()
        best = max(
            sum(c == k and y == perm[k] for c, y in zip(clusters, labels) for k in range(3))
            for perm in itertools.permutations(range(4), 3)
        )
        assert slcgan.clustering_accuracy(clusters, labels, 3, 4) == pytest.approx(best / 40, abs=0)


def test_purity_example():
    assert slcgan.purity([0, 0, 0, 1, 1], [0, 0, 1, 1, 2], 2, 3) == pytest.approx(0.6)


def test_frechet_and_inception_endpoints():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(300, 3))
    assert slcgan.frechet_distance(a, a) == pytest.approx(0.0, abs=1e-8)
    assert slcgan.frechet_distance(a, a + np.array([3.0, 4.0, 0.0])) == pytest.approx(25.0, rel=1e-9)
    assert slcgan.inception_style_score(np.full((20, 5), 0.2))[0] == pytest.approx(1.0, abs=1e-9)
    assert slcgan.inception_style_score(np.eye(5).repeat(4, axis=0))[0] == pytest.approx(5.0, abs=1e-9)


def test_kmeans_and_mode_coverage():
    angles = np.repeat(np.arange(8) * np.pi / 4, 50)
    points = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    points += np.random.default_rng(2).normal(scale=0.01, size=points.shape)
    assignments, inertia = slcgan.kmeans(points, 8, seed=3)
    assert len(set(assignments)) == 8
    assert inertia < 0.1
    modes = np.repeat(np.arange(8), 50).tolist()
    cov = slcgan.mode_coverage(points, clusters=modes, num_clusters=8)
    assert cov["covered"] == 8
    assert cov["purity"] == pytest.approx(1.0)
    assert slcgan.mode_coverage(points[:50])["covered"] == 1
