import json

from retainkv import __version__
from retainkv.harness import SYNTHETIC_NOTE, read_csv_report, report_header, write_csv_report, write_json_report


def test_header_carries_the_version():
    header = report_header(seed=3, note=SYNTHETIC_NOTE)
    assert header == {"retainkv_version": __version__, "seed": 3, "note": SYNTHETIC_NOTE}


def test_json_report(tmp_path):
    path = write_json_report(tmp_path / "out" / "r.json", report_header(seed=1), {"holds": True})
    doc = json.loads(path.read_text())
    assert doc["data"] == {"holds": True}
    assert doc["header"]["seed"] == 1


def test_csv_report_round_trip(tmp_path):
    path = write_csv_report(tmp_path / "r.csv", {"seed": 2, "grid": [0, 32]}, ("n_s", "accuracy"), [[0, 0.5], [32, 1.0]])
    comments, rows = read_csv_report(path)
    assert comments == ["grid: [0, 32]", "seed: 2"]
    assert rows == [{"n_s": "0", "accuracy": "0.5"}, {"n_s": "32", "accuracy": "1.0"}]
