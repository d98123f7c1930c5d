"""Acceptance criteria 1-10, one PASS/FAIL line each.

Lines are written straight to the terminal so they show up without ``-s``.
"""
import subprocess
import sys
import time

import pytest

from delaystab import verify

CRITERIA = [
    (1, "representation identity", verify.criterion_1),
    (2, "hlp bound", verify.criterion_2),
    (3, "ex6.3 oracles and gamma<=0 classification", verify.criterion_3),
    (4, "ex6.4 profile and B^0 sufficiency", verify.criterion_4),
    (5, "ex6.5 UES/US fits", verify.criterion_5),
    (6, "ex6.1 gain traces", verify.criterion_6),
    (7, "kernel identification", verify.criterion_7),
    (8, "subdiagonal equivalence", verify.criterion_8),
    (9, "sec7 decay bound", verify.criterion_9),
]


def report(capsys, line):
    with capsys.disabled():
        print(f"\n{line}", flush=True)


@pytest.mark.parametrize("num,label,check", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(capsys, num, label, check):
    res = verify._timed(f"criterion {num} ({label})", check)
    report(capsys, res.line())
    assert res.passed, res.detail


def test_criterion_10(capsys):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "delaystab.cli", "verify"], capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    ok = proc.returncode == 0 and elapsed < 300
    n_lines = sum(1 for line in proc.stdout.splitlines() if ": PASS" in line)
    report(capsys, f"criterion 10 (verify exits 0 within 300s): {'PASS' if ok else 'FAIL'} "
                   f"(exit {proc.returncode}, {n_lines} passing checks, {elapsed:.1f}s)")
    assert ok, proc.stdout + proc.stderr
