import time

from mmotgraph.classifier import NEGATIVE, RegularityProfile, classify
from mmotgraph.gallery import fixtures, run_gallery


def test_all_rows_match():
    t0 = time.perf_counter()
    rows = run_gallery()
    elapsed = time.perf_counter() - t0
    bad = [r.fixture.name for r in rows if not r.match]
    assert not bad, bad
    assert elapsed < 10


def test_rows_cover_all_fixtures():
    names = [f.name for f in fixtures()]
    assert len(names) == len(set(names))
    assert [r.fixture.name for r in run_gallery()] == names


def test_negative_rows_have_no_required_ac():
    for f in fixtures():
        out = classify(f.graph, RegularityProfile(f.graph.m, f.ac, f.dirac))
        if out.verdict == NEGATIVE:
            assert not out.required_ac


def test_row_dict():
    d = run_gallery()[0].to_dict()
    assert {"name", "verdict", "rule", "required_ac", "match", "expected"} <= set(d)
