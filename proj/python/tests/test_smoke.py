import json
import os
from pathlib import Path

import pytest

import kgaudit

FIXTURES = Path(os.environ.get("KGAUDIT_FIXTURES", Path(__file__).resolve().parents[2] / "tests" / "fixtures"))
TINY = FIXTURES / "tiny" / "kgaudit.cfg"
SYNTHETIC = FIXTURES / "synthetic" / "kgaudit.cfg"


def test_tiny_stats(tmp_path):
    kgaudit.preprocess(TINY, tmp_path)
    s = kgaudit.stats(TINY, tmp_path)["stats"]
    assert s["users"] == 4
    assert s["products"] == 6
    assert s["interactions"] == 19


def test_pipeline_report(tmp_path):
    report = kgaudit.run(SYNTHETIC, tmp_path)
    names = [m["name"] for m in report["methods"]]
    assert names == ["mostpop", "pathcount"]
    pathcount = report["methods"][1]
    assert all(point["FID"] == 1.0 for point in pathcount["fidelity_sweep"])
    assert (tmp_path / "report" / "report.json").exists()
    assert json.loads((tmp_path / "report" / "report.json").read_text())["provenance"]["seed"] == 42


def test_workers_do_not_change_results(tmp_path):
    one = kgaudit.run(SYNTHETIC, tmp_path / "one", workers=1)
    four = kgaudit.run(SYNTHETIC, tmp_path / "four", workers=4)
    assert one == four


def test_welch_matches_reference_value():
    t, dof, p = kgaudit.welch_ttest([0.28, 0.26, 0.26], [0.29, 0.26, 0.29])
    assert abs(p - 0.33) <= 0.015
    assert t < 0


def test_kruskal_identical_groups():
    h, dof, p = kgaudit.kruskal_h([[1, 2, 3], [1, 2, 3]])
    assert h == pytest.approx(0.0)
    assert p == pytest.approx(1.0)
    assert dof == 1


def test_errors_map_to_exceptions(tmp_path):
    with pytest.raises(kgaudit.UsageError):
        kgaudit.welch_ttest([0.5], [0.1, 0.2])
    bad = tmp_path / "bad.cfg"
    bad.write_text("cutoffs = 10\nnonsense = 1\n")
    with pytest.raises(kgaudit.ParseError, match="2"):
        kgaudit.preprocess(bad, tmp_path)
    assert issubclass(kgaudit.ParseError, kgaudit.Error)
