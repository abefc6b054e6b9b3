import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uavmpc.reference import sample_reference


def dense_resample(poly, step=1e-4):
    """Walk the polyline in tiny increments, returning (arclength, point) arrays."""
    pts, arcs = [poly[0]], [0.0]
    s = 0.0
    for a, b in zip(poly[:-1], poly[1:]):
        L = np.linalg.norm(b - a)
        n = max(1, int(round(L / step)))
        for k in range(1, n + 1):
            pts.append(a + (b - a) * k / n)
            arcs.append(s + L * k / n)
        s += L
    return np.array(arcs), np.array(pts)


def test_single_point():
    ref = sample_reference([[1.0, 2.0, 3.0]], [0, 0, 0], 1.0, 0.1, 5)
    assert ref.points.shape == (5, 3)
    assert np.all(ref.points == [1.0, 2.0, 3.0])


def test_straight_line_default_setup():
    poly = [[0, 0, 0], [10, 0, 0]]
    ref = sample_reference(poly, [0, 0, 0], v_ref=1.0, tau=0.1, P=20)
    expected = np.column_stack([0.1 * np.arange(1, 21), np.zeros(20), np.zeros(20)])
    np.testing.assert_allclose(ref.points, expected, rtol=0, atol=1e-12)
    assert ref.spacing == pytest.approx(0.1)


def test_l_shape_wraps_corner():
    poly = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0]], dtype=float)
    ref = sample_reference(poly, [0, 0, 0], v_ref=3.0, tau=0.1, P=8)
    arcs, dense = dense_resample(poly)
    for i, p in enumerate(ref.points, start=1):
        s = min(0.3 * i, 2.0)
        expected = dense[np.argmin(np.abs(arcs - s))]
        np.testing.assert_allclose(p, expected, atol=2e-4)
    # 4th sample sits 0.2 m up the second leg
    np.testing.assert_allclose(ref.points[3], [1.0, 0.2, 0.0], atol=1e-12)
    # exhausted samples repeat the last vertex exactly
    assert np.all(ref.points[6:] == poly[-1])


def test_starts_from_projection():
    poly = [[0, 0, 0], [10, 0, 0]]
    ref = sample_reference(poly, [4.0, 0.7, 0.0], 1.0, 0.1, 3)
    np.testing.assert_allclose(ref.points[:, 0], [4.1, 4.2, 4.3], atol=1e-12)


polylines = st.lists(
    st.tuples(*[st.floats(-5, 5, allow_nan=False)] * 3), min_size=2, max_size=6
)


@settings(max_examples=150, deadline=None)
@given(poly=polylines, start=st.tuples(*[st.floats(-5, 5)] * 3),
       v_ref=st.floats(0.2, 3.0), P=st.integers(1, 30))
def test_arclength_properties(poly, start, v_ref, P):
    poly = np.array(poly)
    ref = sample_reference(poly, start, v_ref, 0.1, P)
    total = np.sum(np.linalg.norm(np.diff(poly, axis=0), axis=1))
    s = ref.arclength
    assert len(ref.points) == P
    assert np.all(np.diff(s) >= 0)
    gaps = np.diff(s)
    live = s[1:] < total
    np.testing.assert_allclose(gaps[live], v_ref * 0.1, atol=1e-6)
    done = s >= total
    assert np.all(ref.points[done] == poly[-1])
    steps = np.linalg.norm(np.diff(ref.points, axis=0), axis=1)
    assert np.all(steps <= ref.spacing + 1e-9)
