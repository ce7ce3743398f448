import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from junctionsde import (PathRecord, load_pack, modulus_of_continuity, save_pack,
                         simulate_delta_path, skorokhod_distance_upper, uniform_distance,
                         validate_Ddelta_membership)

from conftest import grid


def const(value, edge=1, n=101):
    return PathRecord.synthetic(grid(n), np.full(n, value), edge)


def test_record_invariants():
    t = grid(5)
    with pytest.raises(ValueError):
        PathRecord.synthetic(t, [0, 1, -1, 0, 0])
    with pytest.raises(ValueError):
        PathRecord.synthetic(t[::-1], np.zeros(5))
    with pytest.raises(ValueError, match="without a vertex jump"):
        PathRecord.synthetic(t, np.ones(5), [1, 1, 2, 2, 2])
    with pytest.raises(ValueError):
        PathRecord.synthetic(t, np.ones(5), 1, jump_counter=[0, 1, 0, 1, 1])
    with pytest.raises(ValueError):
        PathRecord(t, np.ones(5), np.ones(5, int), np.zeros(5, int), np.zeros(5))
    p = PathRecord.synthetic(t, np.ones(5))
    with pytest.raises(ValueError):
        p.positions[0] = 2.0


def test_uniform_distance_examples():
    a = const(1.0)
    assert uniform_distance(a, a) == 0.0
    shifted = PathRecord.synthetic(grid(), np.full(101, 1.2), 1)
    assert uniform_distance(a, shifted) == pytest.approx(0.2)
    assert uniform_distance(a, const(1.0, edge=2)) == 2.0
    with pytest.raises(ValueError):
        uniform_distance(a, const(1.0, n=51))


def test_modulus_examples():
    assert modulus_of_continuity(const(0.7), 0.3) == 0.0
    lin = PathRecord.synthetic(grid(), grid())
    assert modulus_of_continuity(lin, 0.1) == pytest.approx(0.1)
    x = np.zeros(101)
    x[40:] = 0.3
    jump = PathRecord.synthetic(grid(), x, jump_counter=(np.arange(101) >= 40).astype(int), delta=0.3)
    assert modulus_of_continuity(jump, 0.2) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        modulus_of_continuity(lin, 0.0)
    with pytest.raises(ValueError):
        modulus_of_continuity(lin, 1.5)


def test_modulus_cross_edge():
    t = grid(5)
    p = PathRecord.synthetic(t, [1.0, 0.0, 0.5, 0.5, 0.5], [1, 1, 2, 2, 2], jump_counter=[0, 0, 1, 1, 1])
    assert modulus_of_continuity(p, 0.5) == pytest.approx(1.5)
    assert modulus_of_continuity(p, 0.25) == pytest.approx(1.0)


def _brute_modulus(p, theta):
    t, best = p.time_grid, 0.0
    for i in range(len(t)):
        for j in range(i, len(t)):
            if t[j] - t[i] <= theta + 1e-12:
                a, b = (p.positions[i], p.edges[i]), (p.positions[j], p.edges[j])
                d = abs(a[0] - b[0]) if a[1] == b[1] or 0 in (a[0], b[0]) else a[0] + b[0]
                best = max(best, d)
    return best


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 3), st.integers(1, 3)), min_size=2, max_size=25),
       st.floats(0.01, 1.0))
def test_modulus_matches_brute_force_and_monotone(rows, theta):
    x = np.array([r[0] for r in rows])
    e = np.array([r[1] for r in rows])
    n = len(rows)
    N = np.concatenate([[0], np.cumsum(np.diff(e) != 0)])
    p = PathRecord.synthetic(np.linspace(0, 1, n), x, e, jump_counter=N)
    m = modulus_of_continuity(p, theta)
    assert m == pytest.approx(_brute_modulus(p, theta))
    assert modulus_of_continuity(p, min(1.0, theta * 2)) >= m


def test_skorokhod_examples():
    a = const(1.0)
    assert skorokhod_distance_upper(a, a) == 0.0
    with pytest.raises(ValueError):
        skorokhod_distance_upper(a, a, warp_resolution=1)
    t = np.linspace(0, 1, 1001)
    xa = np.where(t < 0.5, 1.0, 2.0)
    xb = np.where(t < 0.55, 1.0, 2.0)
    pa, pb = PathRecord.synthetic(t, xa), PathRecord.synthetic(t, xb)
    assert uniform_distance(pa, pb) == pytest.approx(1.0)
    assert skorokhod_distance_upper(pa, pb, warp_resolution=32) <= 0.05 + 1e-9
    vertex = const(0.0)
    assert skorokhod_distance_upper(vertex, const(0.3)) <= 0.3


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0, 2), min_size=5, max_size=30), st.lists(st.floats(0, 2), min_size=5, max_size=30))
def test_skorokhod_below_uniform(xa, xb):
    n = min(len(xa), len(xb))
    t = np.linspace(0, 1, n)
    a, b = PathRecord.synthetic(t, xa[:n]), PathRecord.synthetic(t, xb[:n])
    s = skorokhod_distance_upper(a, b, warp_resolution=8)
    assert 0.0 <= s <= uniform_distance(a, b) + 1e-12


def test_membership_examples(decay_cfg):
    p = simulate_delta_path(decay_cfg)
    rep = validate_Ddelta_membership(p)
    assert rep.passed and rep.n_jumps == 5 == len(rep.jump_steps)
    bad = PathRecord.synthetic(grid(3), [0.5, 1.0, 1.0], delta=0.5, jump_counter=[0, 1, 1])
    assert not validate_Ddelta_membership(bad).passed
    undeclared = PathRecord.synthetic(grid(), np.where(grid() < 0.5, 0.5, 1.0), delta=0.5)
    assert not validate_Ddelta_membership(undeclared).passed
    smooth = PathRecord.synthetic(grid(), 1 + 0.1 * np.sin(grid()), delta=0.1)
    rep = validate_Ddelta_membership(smooth)
    assert rep.passed and rep.n_jumps == 0
    with pytest.raises(ValueError):
        validate_Ddelta_membership(const(1.0))


def test_exact_vertex_jump_counts_as_exact():
    p = PathRecord.synthetic(grid(4), [0.05, 0.0, 0.1, 0.12], delta=0.1, jump_counter=[0, 0, 1, 1])
    rep = validate_Ddelta_membership(p, jump_tolerance=0.06)
    assert rep.passed and rep.exact_jumps == 1


def test_csv_roundtrip(decay_cfg, tmp_path):
    p = simulate_delta_path(decay_cfg)
    text = p.to_csv()
    assert text.startswith("# junctionsde path-csv v1 delta=0.1\nt,x,edge,N,dW\n")
    q = PathRecord.from_csv(io.StringIO(text))
    for name in ("time_grid", "positions", "edges", "jump_counter", "noise_increments"):
        assert np.array_equal(getattr(p, name), getattr(q, name))
    assert q.delta == p.delta
    with pytest.raises(ValueError):
        PathRecord.from_csv(io.StringIO("t,x\n"))


def test_pack_roundtrip(tmp_path):
    t = grid(11)
    ps = [PathRecord.synthetic(t, np.full(11, v), 2, delta=0.1) for v in (0.5, 1.5)]
    f = tmp_path / "pack.npz"
    save_pack(ps, f, extra={"note": "x"})
    back, header = load_pack(f)
    assert header["extra"] == {"note": "x"} and header["version"] == 1
    assert uniform_distance(ps[1], back[1]) == 0.0
    with pytest.raises(ValueError):
        save_pack([ps[0], PathRecord.synthetic(grid(5), np.ones(5))], tmp_path / "bad.npz")
