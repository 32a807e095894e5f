import numpy as np
import pytest

import uiactions


def test_ssim_identity_and_range():
    rng = np.random.default_rng(3)
    a = rng.integers(0, 256, size=(48, 40, 3), dtype=np.uint8)
    b = rng.integers(0, 256, size=(48, 40, 3), dtype=np.uint8)
    assert uiactions.ssim_rgb(a, a) == pytest.approx(1.0, abs=1e-12)
    s = uiactions.ssim_rgb(a, b)
    assert -1.0 <= s < 0.5
    assert s == pytest.approx(uiactions.ssim_rgb(b, a), abs=1e-12)


def test_bad_frame_shape_raises():
    with pytest.raises(uiactions.UiActionsError):
        uiactions.ssim_rgb(np.zeros((4, 4), np.uint8), np.zeros((4, 4), np.uint8))


def test_segment_recovers_scripted_actions():
    frames, fps, truth = uiactions.render_video(seed=5, actions=6)
    trace = uiactions.segment(frames, fps, video_id="demo")
    assert trace["video_id"] == "demo"
    assert trace["frame_count"] == len(frames)
    ours = [s["type"] for s in trace["scenes"]]
    gt = [s["type"] for s in truth["scenes"]]
    assert uiactions.levenshtein_score(ours, gt) == 100.0
    uiactions.validate_trace(trace)


def test_validate_trace_rejects_out_of_order_scenes():
    frames, fps, _ = uiactions.render_video(seed=8, actions=3)
    trace = uiactions.segment(frames, fps)
    if len(trace["scenes"]) < 2:
        pytest.skip("needs two scenes")
    trace["scenes"].reverse()
    with pytest.raises(uiactions.UiActionsError, match="out of order"):
        uiactions.validate_trace(trace)


def test_config_override_rejects_unknown_key():
    frames, fps, _ = uiactions.render_video(seed=1, actions=1)
    with pytest.raises(uiactions.UiActionsError, match="bogus"):
        uiactions.segment(frames, fps, config={"bogus": 1})


def test_metrics():
    assert uiactions.levenshtein_score(["TAP", "SCROLL"], ["TAP", "SCROLL"]) == 100.0
    assert uiactions.levenshtein_score(["TAP"], ["TAP", "SCROLL"]) == pytest.approx(50.0)
    assert uiactions.video_f1([(0.0, 1.0)], [(0.0, 1.0)]) == pytest.approx(1.0)
    assert uiactions.video_f1([(0.0, 1.0)], [(2.0, 3.0)]) == pytest.approx(0.0)


def test_dbscan_chains_within_eps():
    labels = uiactions.dbscan([(0, 0, 0.9), (30, 0, 0.5), (60, 0, 0.4), (500, 500, 0.8)])
    assert labels[0] == labels[1] == labels[2]
    assert labels[3] != labels[0]


def test_tailored_loss_inside_box_has_no_regression_term():
    out = uiactions.tailored_loss(0.5, 0.5, [0.0, 0.0], [0.4, 0.4, 0.6, 0.6], 1)
    assert out["loss_reg_x"] == 0.0 and out["loss_reg_y"] == 0.0
    assert out["loss_cls"] == pytest.approx(np.log(2.0))


def test_tap_model_predict_and_roundtrip(tmp_path):
    (ui1, ui2, sample), = uiactions.render_transitions(1, seed=11)
    assert ui1.shape == ui2.shape and ui1.dtype == np.uint8
    x0, y0, x1, y1 = sample["gt_bounds"]
    assert 0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0
    model = uiactions.TapModel(seed=2)
    preds = model.predict(ui1, ui2, top_k=5)
    assert 1 <= len(preds) <= 5
    confs = [c for _, _, c in preds]
    assert confs == sorted(confs, reverse=True)
    for x, y, _ in preds:
        assert 0.0 <= x <= 1.0 and 0.0 <= y <= 1.0
    path = tmp_path / "m.json"
    model.save(path)
    again = uiactions.TapModel.load(path)
    assert again.parameter_count() == model.parameter_count()
    assert again.predict(ui1, ui2, top_k=5) == preds
