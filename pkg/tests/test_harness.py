import numpy as np
import pytest
from PIL import Image

from hedseg.harness import (
    COHESIVE,
    FAILURE,
    FRAGMENTED,
    DatasetError,
    EvalRecord,
    EvalSettings,
    aggregate,
    classify_regime,
    evaluate_image,
    evaluate_labels,
    load_dataset,
    mean_by_gamma_index,
    read_report_csv,
    run_dataset,
    sweep_gamma,
    write_report_csv,
)
from hedseg.hedonic import ONE_COALITION, SINGLETON
from hedseg.projection import pathological_instance


def two_tone(h=8, w=10):
    arr = np.zeros((h, w, 3), np.uint8)
    arr[:, w // 2:] = (220, 40, 40)
    return arr


def make_entry(root, name, arr, masks):
    d = root / name
    (d / "src_color").mkdir(parents=True)
    (d / "human_seg").mkdir()
    Image.fromarray(arr).save(d / "src_color" / f"{name}.png")
    for i, m in enumerate(masks, 1):
        Image.fromarray(np.asarray(m, np.uint8) * 255).save(d / "human_seg" / f"{name}_{i}.png")
    return d


@pytest.fixture
def small_dataset(tmp_path):
    arr = two_tone()
    fg = np.zeros(arr.shape[:2], bool)
    fg[:, 5:] = True
    make_entry(tmp_path, "b_img", arr, [fg])
    make_entry(tmp_path, "a_img", arr[::-1].copy(), [fg, fg])
    return tmp_path


# -- ingestion --------------------------------------------------------------

def test_load_sorted(small_dataset):
    index = load_dataset(small_dataset)
    assert [e.image_id for e in index] == ["a_img", "b_img"]
    assert len(index.entries[0].gt_paths) == 2 and not index.warnings


def test_entry_without_gt_skipped(small_dataset):
    d = small_dataset / "c_img"
    (d / "src_color").mkdir(parents=True)
    Image.fromarray(two_tone()).save(d / "src_color" / "c_img.png")
    index = load_dataset(small_dataset)
    assert len(index) == 2
    assert any("c_img" in w for w in index.warnings)


def test_mismatched_gt_dropped(tmp_path):
    arr = two_tone()
    good = np.ones(arr.shape[:2], bool)
    d = make_entry(tmp_path, "x", arr, [good])
    Image.fromarray(np.ones((3, 3), np.uint8) * 255).save(d / "human_seg" / "x_2.png")
    index = load_dataset(tmp_path)
    assert len(index.entries[0].gt_paths) == 1
    assert "x_2.png" in index.warnings[0]


def test_empty_root(tmp_path):
    with pytest.raises(DatasetError):
        load_dataset(tmp_path)
    with pytest.raises(DatasetError):
        load_dataset(tmp_path / "missing")


# -- evaluation -------------------------------------------------------------

@pytest.mark.parametrize("m", [1, 3, 9])
def test_injected_pathological_labels(m):
    labels, gt = pathological_instance(m, 6 * m)
    rec = evaluate_labels("p", labels.ravel(), [gt.ravel()])
    assert rec.f1_single == pytest.approx(2 / (m + 1), abs=1e-12)
    assert rec.f1_union == 1.0
    assert rec.gap == pytest.approx(1 - 2 / (m + 1), abs=1e-12)
    assert rec.K == m + 1 and rec.labels == tuple(range(m))


def test_single_and_tied_gts():
    labels, gt = pathological_instance(3, 12)
    assert evaluate_labels("p", labels.ravel(), [gt.ravel()]).gt_id == 0
    assert evaluate_labels("p", labels.ravel(), [gt.ravel(), gt.ravel()]).gt_id == 0
    worse = np.zeros_like(gt.ravel())
    worse[:2] = True
    assert evaluate_labels("p", labels.ravel(), [worse, gt.ravel()]).gt_id == 1


def test_evaluate_image(small_dataset):
    entry = load_dataset(small_dataset).entries[1]
    rec = evaluate_image(entry, gamma=0.01)
    assert rec.ok and rec.converged and rec.c is None
    assert rec.gamma == 0.01
    rec = evaluate_image(entry, c=900)
    assert rec.ok and rec.c == 900


def test_error_record_for_broken_image(small_dataset):
    entry = load_dataset(small_dataset).entries[0]
    entry.image_path.write_bytes(b"garbage")
    rec = evaluate_image(entry)
    assert not rec.ok and rec.error
    assert rec.csv_fields()[9].startswith("error:")


def test_extreme_sweep(small_dataset):
    entry = load_dataset(small_dataset).entries[0]
    recs = sweep_gamma(entry, gamma_values=[1.0, 0.0], inits=(SINGLETON, ONE_COALITION))
    assert [r.gamma for r in recs] == [0.0, 0.0, 1.0, 1.0]
    by = {(r.gamma, r.init): r for r in recs}
    assert by[(0.0, ONE_COALITION)].K == 1
    assert by[(1.0, SINGLETON)].K == 80


def test_sweep_argument_check(small_dataset):
    entry = load_dataset(small_dataset).entries[0]
    with pytest.raises(ValueError):
        sweep_gamma(entry)
    with pytest.raises(ValueError):
        sweep_gamma(entry, c_values=[900], gamma_values=[0.1])


def test_sweep_builds_graph_once(small_dataset, monkeypatch):
    import hedseg.harness as h

    calls = []
    real = h.image_to_graph
    monkeypatch.setattr(h, "image_to_graph", lambda *a, **k: calls.append(1) or real(*a, **k))
    entry = load_dataset(small_dataset).entries[0]
    recs = sweep_gamma(entry, c_values=[900, 90, 9], inits=(SINGLETON, ONE_COALITION))
    assert len(recs) == 6 and len(calls) == 1
    gammas = [r.gamma for r in recs]
    assert gammas == sorted(gammas)


def test_run_dataset_order_and_parallel(small_dataset):
    index = load_dataset(small_dataset)
    serial = run_dataset(index, EvalSettings(), c_values=(900, 9), jobs=1)
    parallel = run_dataset(index, EvalSettings(), c_values=(900, 9), jobs=2)
    assert [r.csv_fields() for r in serial] == [r.csv_fields() for r in parallel]
    assert [r.image_id for r in serial] == ["a_img", "a_img", "b_img", "b_img"]


# -- regimes and aggregates ---------------------------------------------------

@pytest.mark.parametrize("fs,fu,regime", [
    (0.9863, 0.9922, COHESIVE),
    (0.0370, 0.2714, FAILURE),
    (0.3, 0.9, FRAGMENTED),
    (0.7, 0.89, COHESIVE),
    (0.7, 0.9, FRAGMENTED),
])
def test_regimes(fs, fu, regime):
    assert classify_regime(EvalRecord("x", f1_single=fs, f1_union=fu)) == regime


def test_aggregate_single_record():
    s = aggregate([EvalRecord("x", K=3, f1_single=0.4, f1_union=0.9)])
    assert s.mean_f1_single == s.median_f1_single == 0.4
    assert s.mean_f1_union == s.median_f1_union == 0.9
    assert s.k_histogram == {3: 1}
    assert s.regimes[FRAGMENTED] == 1


def test_aggregate_mean_gap_and_errors():
    recs = [
        EvalRecord("a", f1_single=0.5, f1_union=0.7),
        EvalRecord("b", f1_single=0.5, f1_union=0.9),
        EvalRecord("c", error="boom"),
    ]
    s = aggregate(recs)
    assert s.mean_gap == pytest.approx(0.3)
    assert s.count == 2 and s.errors == 1
    assert "mean gap           0.300000" in s.text()
    with pytest.raises(ValueError):
        aggregate([])


def test_mean_by_gamma_index():
    recs = [
        EvalRecord("a", gamma=0.2, K=4, f1_single=0.2, f1_union=0.8),
        EvalRecord("a", gamma=0.1, K=2, f1_single=0.6, f1_union=0.6),
        EvalRecord("b", gamma=0.02, K=6, f1_single=0.4, f1_union=0.6),
        EvalRecord("b", gamma=0.01, K=2, f1_single=0.8, f1_union=0.8),
    ]
    rows = mean_by_gamma_index(recs)
    assert rows[0] == pytest.approx((0.055, 2.0, 0.7, 0.7))
    assert rows[1] == pytest.approx((0.11, 5.0, 0.3, 0.7))


def test_csv_round_trip(tmp_path):
    recs = [
        EvalRecord("a", gt_id=1, gamma=1.5e-6, c=900.0, K=5, f1_single=0.25,
                   f1_union=0.75, labels=(0, 3), sweeps=7, converged=True),
        EvalRecord("b", c=9.0, init=ONE_COALITION, error="cannot decode"),
    ]
    p = tmp_path / "r.csv"
    write_report_csv(recs, p)
    text = p.read_text().splitlines()
    assert text[0].startswith("image_id,gt_id,gamma")
    assert text[1] == "a,1,1.500000e-06,900.000000,singleton,5,0.250000,0.750000,0.500000,0;3,7,1,0"
    back = read_report_csv(p)
    assert back[0].csv_fields() == recs[0].csv_fields()
    assert back[1].error == "cannot decode"


def test_gt_selection_and_gap_integrity(small_dataset):
    index = load_dataset(small_dataset)
    recs = run_dataset(index, EvalSettings(), c_values=(900, 90, 9),
                       inits=(SINGLETON, ONE_COALITION), jobs=1)
    for r in recs:
        assert r.f1_union == max(u for _, u in r.per_gt)
        assert r.per_gt[r.gt_id] == (r.f1_single, r.f1_union)
        assert r.gap >= 0.0


def test_shared_graph_matches_rebuilt(small_dataset):
    entry = load_dataset(small_dataset).entries[0]
    swept = sweep_gamma(entry, gamma_values=[0.001, 0.05, 0.3])
    for rec in swept:
        alone = evaluate_image(entry, gamma=rec.gamma)
        assert alone.csv_fields() == rec.csv_fields()
