"""Acceptance suite: one PASS/FAIL line per criterion at the target tolerances.

Lines are collected in ``ACCEPTANCE`` and printed in the terminal summary
(see conftest.py), so they appear in ``pytest -v`` output.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from axisdesc import corpus
from axisdesc.corpus import write_pgm
from axisdesc.descriptor import BranchRecord
from axisdesc.evaluate import extract_silhouette, invariance_suite, labelled_pairs, retrieval
from axisdesc.field import count_kinds, find_critical_points, solve_screened
from axisdesc.grid import mask_from_foreground
from axisdesc.matcher import branch_similarity, exhaustive_half, feature_similarity, match_multi, match_shapes
from axisdesc.pipeline import ExtractParams
from axisdesc.shapes import Pose, rasterize
from conftest import ACCEPTANCE
from strategies import random_descriptor


def report(name, ok, detail):
    ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, detail


def test_strip_profile():
    worst_err, worst_t = 0.0, 0.0
    for a in (8, 16):
        for rho in (4.0, 8.0, 32.0):
            fg = np.zeros((2 * a + 1 + 4, 160 + 4), bool)
            fg[2:-2, 2:-2] = True
            m = mask_from_foreground(fg, pad=2)
            t = time.perf_counter()
            v = solve_screened(m, rho).values
            worst_t = max(worst_t, time.perf_counter() - t)
            x = np.arange(-a, a + 1)
            exact = np.cosh(x / rho) / math.cosh(a / rho)
            # columns farther than 2a from either strip end
            prof = v[2 : 2 + 2 * a + 1, 2 + 2 * a + 1 : 2 + 160 - 2 * a - 1]
            worst_err = max(worst_err, float(np.max(np.abs(prof - exact[:, None]) / exact[:, None])))
    report(
        "screened strip vs cosh profile",
        worst_err < 0.02 and worst_t < 5.0,
        f"max rel err {worst_err:.4f} (< 0.02), slowest case {worst_t:.2f}s (< 5s)",
    )


def test_annealing_topology():
    vase, _ = extract_silhouette(corpus.vase())
    nv = count_kinds(find_critical_points(vase.field))
    bone, _ = extract_silhouette(corpus.dog_bone(), params=ExtractParams(target="dumbbell"))
    nb = count_kinds(find_critical_points(bone.field))
    report(
        "annealing topology",
        nv == (1, 0) and nb == (2, 1),
        f"vase elliptic/hyperbolic {nv} (want (1, 0)); dog bone with dumbbell target {nb} (want (2, 1))",
    )


@pytest.mark.slow
def test_invariance():
    rows = invariance_suite()
    good = [r.name for r in rows if r.worst >= 0.95]
    worst = {r.name: round(r.worst, 3) for r in rows if r.worst < 0.95}
    report(
        "scale/rotation/translation invariance",
        len(good) >= 10,
        f"{len(good)}/{len(rows)} shapes >= 0.95 on all 6 copies (need 10); below: {worst}",
    )


def _hand_case(sil):
    ext, placed = extract_silhouette(sil)
    return ext, placed, sil


def _match(a, b):
    return match_multi(a[0].descriptors, b[0].descriptors)


@pytest.fixture(scope="module")
def hands():
    return {
        "base": _hand_case(corpus.hand()),
        "+20": _hand_case(corpus.articulated_hand(2, 20.0)),
        "-20": _hand_case(corpus.articulated_hand(2, -20.0)),
        "missing": _hand_case(corpus.hand(missing=2)),
        "quadruped": _hand_case(corpus.quadruped()),
    }


def test_articulation(hands):
    lines, ok = [], True
    for key in ("+20", "-20"):
        res = _match(hands["base"], hands[key])
        labels = [(a, b) for a, b, _ in labelled_pairs(hands["base"], hands[key], res) if a is not None or b is not None]
        fingers = {a for a, _ in labels}
        correct = all(a == b for a, b in labels) and fingers == set(range(5))
        ok &= res.total >= 0.85 and correct
        lines.append(f"{key}: total {res.total:.3f}, finger pairs {sorted(labels)}")
    report("articulated middle finger", ok, "; ".join(lines) + " (want >= 0.85, each finger to itself)")


def test_missing_part_ordering(hands):
    art = min(_match(hands["base"], hands[k]).total for k in ("+20", "-20"))
    miss = _match(hands["base"], hands["missing"]).total
    other = _match(hands["base"], hands["quadruped"]).total
    report(
        "articulated > missing finger > other category",
        art > miss > other,
        f"{art:.3f} > {miss:.3f} > {other:.3f}",
    )


def test_branch_and_bound_vs_exhaustive():
    rng = np.random.default_rng(20261014)
    mismatches, slowest = 0, 0.0
    for _ in range(200):
        A, B = random_descriptor(rng), random_descriptor(rng)
        t = time.perf_counter()
        fast = match_shapes(A, B)
        slowest = max(slowest, time.perf_counter() - t)
        ref = match_shapes(A, B, solver=exhaustive_half)
        mismatches += fast.total != ref.total
    report(
        "branch and bound equals exhaustive search",
        mismatches == 0 and slowest < 0.1,
        f"{mismatches}/200 totals differ, slowest match {slowest * 1000:.1f} ms (< 100 ms)",
    )


@pytest.mark.slow
def test_retrieval():
    rep = retrieval()
    ok = rep.rank1 >= 0.9 and rep.seconds < 300
    report(
        "14x4 corpus retrieval",
        ok,
        f"rank-1 same category {rep.rank1:.1%} (>= 90%), {len(rep.ids)} queries in {rep.seconds:.0f}s (< 300s); "
        f"misses {rep.misses}",
    )


def test_similarity_formulas():
    r = lambda nl, kind="positive": BranchRecord(kind, 0.4, 1.0, nl)  # noqa: E731
    checks = {
        "0.6 at delta 0.2": feature_similarity(0.1, 0.3, 0.5) == pytest.approx(0.6, abs=1e-15),
        "0 at threshold": feature_similarity(0.0, 0.5, 0.5) == 0.0,
        "0 beyond": feature_similarity(0.0, 0.8, 0.5) == 0.0,
        "1 at equality": feature_similarity(0.25, 0.25, 0.5) == 1.0,
        "zero gate": branch_similarity(r(0.1), r(0.7)) == 0.0,
        "mean of three": branch_similarity(r(0.1), r(0.2)) == pytest.approx((1 + 1 + 0.8) / 3, abs=1e-15),
    }
    bad = [k for k, v in checks.items() if not v]
    report("similarity formula checks", not bad, f"{len(checks) - len(bad)}/{len(checks)} exact ({bad or 'all ok'})")


def test_determinism(tmp_path):
    imgs = {}
    for name, sil in (("hand", corpus.hand()), ("star", corpus.star(5)), ("query", corpus.articulated_hand())):
        p = tmp_path / f"{name}.pgm"
        write_pgm(rasterize(sil, Pose(0.8))[0], p)
        imgs[name] = p
    runs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        out = []
        for argv in (
            ["extract", imgs["hand"], "-o", d / "hand", "--db", d / "db", "--category", "hand"],
            ["extract", imgs["star"], "-o", d / "star", "--db", d / "db", "--category", "star"],
            ["query", d / "db", imgs["query"], "-k", "2"],
        ):
            proc = subprocess.run([sys.executable, "-m", "axisdesc.cli", *map(str, argv)], capture_output=True)
            out.append((proc.returncode, proc.stdout.replace(str(d).encode(), b"<run>")))
        files = {p.relative_to(d).as_posix(): p.read_bytes().replace(str(d).encode(), b"<run>")
                 for p in sorted(d.rglob("*")) if p.is_file()}
        runs.append((out, files))
    same = runs[0] == runs[1]
    report(
        "repeat extract + query",
        same and all(c == 0 for c, _ in runs[0][0]),
        f"{len(runs[0][1])} files and 3 command outputs byte-identical: {same}",
    )
