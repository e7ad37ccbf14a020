import csv
import json

import pytest

from trunclab.constructions import exact_T
from trunclab.exceptions import TrunclabCheckpointException, TrunclabConfigException
from trunclab.scan import REPORT_HEADER, ScanCheckpoint, polya_scan, turan_scan
from trunclab.sieve import omega_parity_oracle


def test_polya_scan_small_range():
    _, report = polya_scan(1000, segment_size=128, sample_every=100)
    assert report.final_L == sum(omega_parity_oracle(n) for n in range(1, 1001))
    assert report.sign_holds
    assert report.L_max <= 0
    assert report.rows[-1][0] == 1000


def test_turan_scan_encloses_exact_value():
    _, report = turan_scan(2000, segment_size=256, sample_every=500)
    assert report.sign_holds
    exact = exact_T(2000)
    assert abs(report.final_T - float(exact)) <= report.final_T_err + 1e-16
    assert report.final_T_err < 1e-12


def test_records_are_running_extremes():
    anchor, _ = polya_scan(4096, segment_size=512, sample_every=10 ** 6)
    values = [r.value for r in anchor.records]
    assert values == sorted(values)
    assert len(set(r.x for r in anchor.records)) == len(anchor.records)


def test_scan_bound_must_be_at_least_two():
    with pytest.raises(TrunclabConfigException):
        polya_scan(1)


@pytest.mark.parametrize("kind,scan", [("polya", polya_scan), ("turan", turan_scan)])
def test_resume_is_bit_identical(tmp_path, kind, scan):
    options = dict(segment_size=256, sample_every=100, flush_every=1000)
    full_anchor, full_report = scan(6000, **options)

    flushed = []
    scan(3000, on_flush=flushed.append, **options)
    assert flushed
    path = tmp_path / "checkpoint.json"
    flushed[-1].save(path)

    resumed = ScanCheckpoint.load(path, expected_kind=kind)
    anchor, report = scan(6000, checkpoint=resumed, **options)

    assert anchor.to_dict() == full_anchor.to_dict()
    assert report.final_L == full_report.final_L
    assert report.final_T == full_report.final_T
    assert report.final_T_err == full_report.final_T_err
    assert report.rows == [row for row in full_report.rows if row[0] >= resumed.next_n]


def test_thread_count_independence():
    options = dict(segment_size=512, sample_every=1000)
    one_anchor, one = turan_scan(20000, threads=1, **options)
    four_anchor, four = turan_scan(20000, threads=4, **options)
    assert one.rows == four.rows
    assert one.summary() == four.summary()
    assert one_anchor.to_dict() == four_anchor.to_dict()


def test_edited_checkpoint_is_rejected(tmp_path):
    anchor, _ = polya_scan(2048, segment_size=512)
    path = tmp_path / "checkpoint.json"
    anchor.save(path)
    payload = json.loads(path.read_text())
    payload["L"] += 2
    path.write_text(json.dumps(payload))
    with pytest.raises(TrunclabCheckpointException):
        ScanCheckpoint.load(path)


def test_checkpoint_kind_mismatch(tmp_path):
    anchor, _ = polya_scan(2048, segment_size=512)
    path = tmp_path / "checkpoint.json"
    anchor.save(path)
    with pytest.raises(TrunclabCheckpointException):
        ScanCheckpoint.load(path, expected_kind="turan")
    with pytest.raises(TrunclabCheckpointException):
        turan_scan(4096, checkpoint=ScanCheckpoint.load(path), segment_size=512)


def test_checkpoint_with_other_segment_size_is_rejected(tmp_path):
    anchor, _ = polya_scan(2048, segment_size=512)
    with pytest.raises(TrunclabCheckpointException):
        polya_scan(4096, checkpoint=anchor, segment_size=256)


def test_unreadable_checkpoint(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(TrunclabCheckpointException):
        ScanCheckpoint.load(path)


def test_csv_report(tmp_path):
    _, report = turan_scan(1000, segment_size=128, sample_every=250)
    path = tmp_path / "turan.csv"
    report.write_csv(path)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert tuple(rows[0]) == REPORT_HEADER
    assert [int(r[0]) for r in rows[1:]] == [row[0] for row in report.rows]
    for written, (_, L, T, T_err) in zip(rows[1:], report.rows):
        assert int(written[1]) == L
        assert float(written[2]) == T
        assert float(written[3]) == T_err


@pytest.mark.slow
def test_polya_scan_to_one_hundred_million():
    _, report = polya_scan(10 ** 8, threads=4)
    assert report.sign_holds


@pytest.mark.slow
def test_turan_scan_to_one_hundred_million():
    _, report = turan_scan(10 ** 8, threads=4)
    assert report.sign_holds
