import json
import math
import os
import subprocess

import numpy as np
import pytest

import tio


@pytest.fixture(scope="module")
def bundle():
    spec = tio.SyntheticSpec()
    spec.num_videos = 6
    spec.frames_per_video = 5
    return tio.generate_synthetic_bundle(3, spec)


def test_bundle_round_trip(bundle, tmp_path):
    tio.write_bundle(bundle, tmp_path / "data")
    loaded = tio.load_bundle(tmp_path / "data")
    assert loaded == bundle
    assert loaded.video_ids == bundle.video_ids
    assert bundle.frames(bundle.video_ids[0]).shape == (5, 16)


def test_kernel_pieces():
    assert tio.pairwise_distance(np.array([1.0, 2.0]), np.array([0.0, 0.0])) == 5.0
    assert tio.normalize_distances([2.0, 4.0, 6.0]) == [0.0, 0.5, 1.0]
    w = tio.kernel_weights([0.0, 0.25], 0.25)
    assert w[0] == 1.0 and math.isclose(w[1], math.exp(-1.0))


def test_attention_rows_sum_to_one(bundle):
    rows = tio.frame_attention(bundle, bundle.video_ids[0])
    assert len(rows) == 5
    for row in rows:
        assert len(row) == 2
        assert math.isclose(sum(row), 1.0, abs_tol=1e-12)


def test_temporal_adjacency():
    a, a_tilde = tio.temporal_adjacency(4, 3.0)
    assert np.allclose(a, a.T) and np.all(np.diag(a) == 1.0)
    d = np.diag(1.0 / np.sqrt(a.sum(axis=1)))
    assert np.allclose(a_tilde, d @ a @ d, atol=1e-12)


def test_train_infer_explain(bundle, tmp_path):
    cfg = tio.TrainConfig()
    cfg.epochs = 5
    cfg.seed = 2
    model, history = tio.train(bundle, cfg)
    assert [h["epoch"] for h in history] == [1, 2, 3, 4, 5]
    assert all(h["l_total"] >= 0 for h in history)

    tio.save_checkpoint(model, tmp_path / "m.ckpt")
    again = tio.load_checkpoint(tmp_path / "m.ckpt")
    assert again.to_bytes() == model.to_bytes()

    vid = bundle.video_ids[1]
    out = tio.infer(model, bundle, vid)
    assert out["frame_scores"].shape == (5,)
    assert 0.0 <= out["video_score"] <= 1.0

    lines = [json.loads(l) for l in tio.explain(model, bundle, vid, 2, topk=3).splitlines()]
    assert len(lines) == 3
    alphas = [l["alpha"] for l in lines]
    assert alphas == sorted(alphas, reverse=True)
    assert all(l["head"] == f"{vid}/frame_2" for l in lines)


def test_metrics():
    assert math.isclose(tio.average_precision([.9, .8, .7, .6, .5, .4], [1, 0, 1, 1, 0, 0]), 29 / 36)
    assert tio.auc([.4, .4, .4], [1, 0, 1]) == 0.5
    q = np.zeros(2)
    gallery = [np.array([1.0, 0.0]), np.array([3.0, 0.0])]
    assert tio.recall_at_k(q, gallery, [0, 1], 1) == 0.0
    assert tio.recall_at_k(q, gallery, [0, 1], 2) == 1.0


def test_op_counts():
    assert tio.ops_kernel(2044) <= tio.ops_multihead(2044)
    assert tio.ops_kernel(2045) > tio.ops_multihead(2045)


def test_errors_surface_as_tio_error(bundle):
    with pytest.raises(tio.TioError):
        tio.infer(tio.train(bundle, tio.TrainConfig())[0], bundle, "missing")
    with pytest.raises(tio.TioError):
        tio.auc([0.5, 0.6], [1, 1])


@pytest.mark.skipif("TIO_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_bench_table():
    out = subprocess.run([os.environ["TIO_CLI"], "bench", "--n-list", "4,2045", "--max-timed-n", "0"],
                         check=True, capture_output=True, text=True).stdout
    assert "n,ops_multihead,ops_kernel,time_multihead_s,time_kernel_s" in out
