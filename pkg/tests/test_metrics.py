"""Tests for the four segmentation dissimilarity metrics."""

import math

import numpy as np
import pytest

from segmat.mesh_io import SurfaceMesh
from segmat.metrics import (
    Segmentation,
    consistency_error,
    cut_discrepancy,
    hamming,
    rand_index,
)


# --- fixtures ---------------------------------------------------------------


def strip(n, spacing=None):
    """Ladder of n quads, two triangles each, in the z=0 plane.

    spacing gives the x coordinate of each rung; defaults to unit spacing.
    Face 2k and 2k+1 form quad k.
    """
    xs = list(spacing) if spacing is not None else list(range(n + 1))
    verts = [(x, 0.0, 0.0) for x in xs] + [(x, 1.0, 0.0) for x in xs]
    top = n + 1
    faces = []
    for k in range(n):
        faces.append((k, k + 1, top + k + 1))
        faces.append((k, top + k + 1, top + k))
    return SurfaceMesh(np.array(verts, dtype=float), np.array(faces))


def quad_labels(n, split_at):
    """Per-face labels for an n-quad strip cut at the given quad boundary."""
    return np.array([0 if k // 2 < split_at else 1 for k in range(2 * n)])


def fan():
    """Six equal-area triangles around the center of a regular hexagon."""
    center = (0.0, 0.0, 0.0)
    ring = [
        (math.cos(k * math.pi / 3.0), math.sin(k * math.pi / 3.0), 0.0)
        for k in range(6)
    ]
    faces = [(0, 1 + k, 1 + (k + 1) % 6) for k in range(6)]
    return SurfaceMesh(np.array([center] + ring), np.array(faces))


def seg(mesh, labels):
    return Segmentation.build(mesh, labels)


# --- oracles ----------------------------------------------------------------


def pair_disagreement(la, lb):
    """Fraction of unordered face pairs grouped differently by la and lb."""
    n = len(la)
    disagree = 0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            pairs += 1
            if (la[i] == la[j]) != (lb[i] == lb[j]):
                disagree += 1
    return disagree / pairs


def directed_hamming(lx, ly, areas):
    """Area fraction of each lx segment missed by its best ly match."""
    total = float(areas.sum())
    missed = 0.0
    for s in sorted(set(int(v) for v in lx)):
        in_s = [f for f in range(len(lx)) if lx[f] == s]
        best = 0.0
        for t in sorted(set(int(v) for v in ly)):
            overlap = sum(areas[f] for f in in_s if ly[f] == t)
            if overlap > best:
                best = overlap
        missed += sum(areas[f] for f in in_s) - best
    return missed / total


def consistency_brute(la, lb, areas):
    """Set-arithmetic evaluation of the refinement-error pair (GCE, LCE)."""
    n = len(la)
    total = float(areas.sum())

    def region(labels, f):
        return {g for g in range(n) if labels[g] == labels[f]}

    def area(faces):
        return sum(areas[f] for f in faces)

    e_ab = [0.0] * n
    e_ba = [0.0] * n
    for f in range(n):
        ra, rb = region(la, f), region(lb, f)
        e_ab[f] = area(ra - rb) / area(ra)
        e_ba[f] = area(rb - ra) / area(rb)
    gce = min(
        sum(w * e for w, e in zip(areas, e_ab)),
        sum(w * e for w, e in zip(areas, e_ba)),
    ) / total
    lce = sum(w * min(p, q) for w, p, q in zip(areas, e_ab, e_ba)) / total
    return gce, lce


def random_labels(rng, n, kmax):
    return rng.integers(0, kmax, size=n)


# --- rand index -------------------------------------------------------------


def test_rand_index_identical_is_zero():
    mesh = strip(4)
    rng = np.random.default_rng(1)
    labels = random_labels(rng, 8, 3)
    assert rand_index(seg(mesh, labels), seg(mesh, labels)) == 0.0


def test_rand_index_one_block_vs_all_singletons():
    # every pair is together in a and apart in b, so every pair disagrees
    verts = np.array([(0.0, 0, 0), (1.0, 0, 0), (0.0, 1, 0), (1.0, 1, 0), (2.0, 0, 0)])
    mesh = SurfaceMesh(verts, np.array([(0, 1, 2), (1, 3, 2), (1, 4, 3)]))
    a = seg(mesh, [0, 0, 0])
    b = seg(mesh, [0, 1, 2])
    value = rand_index(a, b)
    assert value == pytest.approx(pair_disagreement([0, 0, 0], [0, 1, 2]))
    assert value == pytest.approx(1.0)


def test_rand_index_matches_pair_enumeration():
    mesh = strip(6)
    rng = np.random.default_rng(42)
    for _ in range(20):
        la = random_labels(rng, 12, 4)
        lb = random_labels(rng, 12, 3)
        want = pair_disagreement(list(la), list(lb))
        got = rand_index(seg(mesh, la), seg(mesh, lb))
        assert got == pytest.approx(want, abs=1e-12)
        assert rand_index(seg(mesh, lb), seg(mesh, la)) == pytest.approx(got)
        assert 0.0 <= got <= 1.0


def test_rand_index_rejects_mismatched_face_counts():
    a = seg(strip(2), [0, 0, 1, 1])
    b = seg(strip(3), [0, 0, 1, 1, 2, 2])
    with pytest.raises(ValueError):
        rand_index(a, b)


# --- cut discrepancy --------------------------------------------------------


def test_cut_discrepancy_identical_is_zero():
    mesh = strip(8)
    labels = quad_labels(8, 4)
    assert cut_discrepancy(seg(mesh, labels), seg(mesh, labels)) == 0.0


def test_cut_discrepancy_no_boundaries_is_zero():
    mesh = strip(4)
    a = seg(mesh, np.zeros(8, dtype=int))
    b = seg(mesh, np.full(8, 7))
    assert cut_discrepancy(a, b) == 0.0


def test_cut_discrepancy_one_sided_is_unit():
    mesh = strip(8)
    whole = seg(mesh, np.zeros(16, dtype=int))
    split = seg(mesh, quad_labels(8, 4))
    assert cut_discrepancy(whole, split) == 1.0
    assert cut_discrepancy(split, whole) == 1.0


def test_cut_discrepancy_offset_strip():
    # cuts one quad apart: every boundary midpoint sits exactly 1 away from
    # the other segmentation's single midpoint
    mesh = strip(8)
    a = seg(mesh, quad_labels(8, 4))
    b = seg(mesh, quad_labels(8, 5))
    centroid = mesh.vertices.mean(axis=0)
    normalizer = float(np.linalg.norm(mesh.vertices - centroid, axis=1).mean())
    assert cut_discrepancy(a, b) == pytest.approx(1.0 / normalizer, rel=1e-12)
    assert cut_discrepancy(b, a) == pytest.approx(1.0 / normalizer, rel=1e-12)


def test_cut_discrepancy_symmetric_on_random_labelings():
    mesh = strip(6)
    rng = np.random.default_rng(8)
    for _ in range(10):
        a = seg(mesh, random_labels(rng, 12, 3))
        b = seg(mesh, random_labels(rng, 12, 3))
        assert cut_discrepancy(a, b) == pytest.approx(cut_discrepancy(b, a))


# --- hamming ----------------------------------------------------------------


def test_hamming_identical_is_zero():
    mesh = fan()
    labels = np.array([0, 0, 1, 1, 2, 2])
    assert hamming(seg(mesh, labels), seg(mesh, labels)) == (0.0, 0.0, 0.0)


def test_hamming_whole_vs_halves():
    # b's halves are fully covered by a's single segment (missing 0); the
    # best match for a's segment covers half its area (false alarm 0.5)
    mesh = fan()
    a = seg(mesh, np.zeros(6, dtype=int))
    b = seg(mesh, np.array([0, 0, 0, 1, 1, 1]))
    hd, rm, rf = hamming(a, b)
    assert rm == pytest.approx(0.0, abs=1e-12)
    assert rf == pytest.approx(0.5, rel=1e-12)
    assert hd == pytest.approx(0.25, rel=1e-12)


def test_hamming_swap_exchanges_rates():
    mesh = strip(5, spacing=[0.0, 1.0, 2.5, 4.5, 7.0, 10.0])
    rng = np.random.default_rng(3)
    a = seg(mesh, random_labels(rng, 10, 3))
    b = seg(mesh, random_labels(rng, 10, 4))
    hd_ab, rm_ab, rf_ab = hamming(a, b)
    hd_ba, rm_ba, rf_ba = hamming(b, a)
    assert hd_ab == pytest.approx(hd_ba)
    assert rm_ab == pytest.approx(rf_ba)
    assert rf_ab == pytest.approx(rm_ba)


def test_hamming_matches_area_matching_oracle():
    # uneven spacing makes the face areas genuinely distinct
    mesh = strip(5, spacing=[0.0, 0.5, 1.7, 2.0, 4.1, 8.0])
    areas = mesh.face_areas()
    rng = np.random.default_rng(19)
    for _ in range(15):
        la = random_labels(rng, 10, 4)
        lb = random_labels(rng, 10, 3)
        hd, rm, rf = hamming(seg(mesh, la), seg(mesh, lb))
        want_rf = directed_hamming(la, lb, areas)
        want_rm = directed_hamming(lb, la, areas)
        assert rf == pytest.approx(want_rf, abs=1e-12)
        assert rm == pytest.approx(want_rm, abs=1e-12)
        assert hd == pytest.approx(0.5 * (want_rf + want_rm), abs=1e-12)
        assert 0.0 <= min(hd, rm, rf) and max(hd, rm, rf) <= 1.0


# --- consistency error ------------------------------------------------------


def test_consistency_identical_is_zero():
    mesh = fan()
    labels = np.array([0, 1, 1, 0, 2, 2])
    assert consistency_error(seg(mesh, labels), seg(mesh, labels)) == (0.0, 0.0)


def test_refinement_makes_gce_zero():
    # b splits each a segment in two, so one direction has no error at all
    mesh = strip(4)
    a = seg(mesh, np.array([0, 0, 0, 0, 1, 1, 1, 1]))
    b = seg(mesh, np.array([0, 0, 1, 1, 2, 2, 3, 3]))
    gce, lce = consistency_error(a, b)
    assert gce == pytest.approx(0.0, abs=1e-12)
    assert lce == pytest.approx(0.0, abs=1e-12)


def test_consistency_matches_set_arithmetic():
    mesh = strip(3, spacing=[0.0, 1.0, 3.0, 6.0])
    areas = mesh.face_areas()
    rng = np.random.default_rng(27)
    for _ in range(20):
        la = random_labels(rng, 6, 3)
        lb = random_labels(rng, 6, 2)
        gce, lce = consistency_error(seg(mesh, la), seg(mesh, lb))
        want_gce, want_lce = consistency_brute(list(la), list(lb), areas)
        assert gce == pytest.approx(want_gce, abs=1e-12)
        assert lce == pytest.approx(want_lce, abs=1e-12)


def test_lce_never_exceeds_gce():
    mesh = strip(6)
    rng = np.random.default_rng(31)
    for _ in range(20):
        a = seg(mesh, random_labels(rng, 12, 4))
        b = seg(mesh, random_labels(rng, 12, 4))
        gce, lce = consistency_error(a, b)
        assert lce <= gce + 1e-12
        assert 0.0 <= lce and gce <= 1.0


# --- segmentation construction ----------------------------------------------


def test_segmentation_rejects_wrong_label_count():
    with pytest.raises(ValueError):
        Segmentation.build(strip(3), [0, 1])


def test_segmentation_rejects_degenerate_faces():
    verts = np.array([(0.0, 0, 0), (1.0, 0, 0), (2.0, 0, 0)])
    mesh = SurfaceMesh(verts, np.array([(0, 1, 2)]))
    with pytest.raises(ValueError):
        Segmentation.build(mesh, [0])


def test_boundary_midpoints_sit_on_cut_edges():
    mesh = strip(4)
    s = seg(mesh, quad_labels(4, 2))
    assert s.boundary_midpoints.shape == (1, 3)
    assert s.boundary_midpoints[0] == pytest.approx([2.0, 0.5, 0.0])
