"""Smoke tests for the timing harness (tiny sizes only)."""

from __future__ import annotations

import io

from coiquery.bench import BenchRow, run_dp_suite, run_trust_suite, write_csv


def test_trust_suite_reports_one_row_per_size():
    rows = run_trust_suite(sizes=(50, 100), seed=3, runs=1)
    assert [row.size for row in rows] == [50, 100]
    assert all(row.millis > 0 for row in rows)


def test_dp_suite_reports_one_row_per_size():
    rows = run_dp_suite(sizes=(8, 16), seed=3, runs=1)
    assert [row.size for row in rows] == [8, 16]
    assert all(row.millis > 0 for row in rows)


def test_csv_layout():
    stream = io.StringIO()
    write_csv([BenchRow(10, 1.5), BenchRow(20, 2.25)], stream)
    assert stream.getvalue().splitlines() == ["m,millis", "10,1.500", "20,2.250"]
