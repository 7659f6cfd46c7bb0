import math

import numpy as np
import pytest

from segmat.geometry import Sphere
from segmat.mat_graph import build_graph
from segmat.mesh_io import MedialMesh
from segmat.structure import (
    ComponentKind,
    JointKind,
    ZeroRadius,
    assign_base_nodes,
    detect_joints,
    split_components,
    thinness,
)


def medial(points, radii, edges=(), faces=()):
    spheres = [Sphere(tuple(map(float, p)), float(r)) for p, r in zip(points, radii)]
    return MedialMesh.build(spheres, list(edges), list(faces))


def y_shape():
    pts = [(0, 0, 0), (2, 0, 0), (0, 2, 0), (0, 0, 2)]
    return medial(pts, [0.5] * 4, edges=[(0, 1), (0, 2), (0, 3)])


def disk():
    """Hexagon fan: every interior edge has exactly two faces."""
    pts = [(0, 0, 0)]
    for k in range(6):
        a = 2 * math.pi * k / 6
        pts.append((math.cos(a), math.sin(a), 0.0))
    faces = [(0, 1 + k, 1 + (k + 1) % 6) for k in range(6)]
    return medial(pts, [0.3] * 7, faces=faces)


def triangle_plus_edge():
    pts = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (-1, -1, 0)]
    return medial(pts, [0.2] * 4, edges=[(0, 3)], faces=[(0, 1, 2)])


def three_fan():
    """Three triangles sharing one edge: a seam."""
    pts = [(0, 0, 0), (0, 0, 1), (1, 0, 0), (0, 1, 0), (-1, 0, 0)]
    faces = [(0, 1, 2), (0, 1, 3), (0, 1, 4)]
    return medial(pts, [0.2] * 5, faces=faces)


def bowtie():
    pts = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (-1, 0, 0), (-1, -1, 0)]
    return medial(pts, [0.2] * 5, faces=[(0, 1, 2), (0, 3, 4)])


def plate_with_tail():
    pts = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
           (2, 0, 0), (3, 0, 0)]
    return medial(pts, [0.4] * 6,
                  edges=[(1, 4), (4, 5)],
                  faces=[(0, 1, 2), (0, 2, 3)])


def test_y_shape_gives_one_seam_vertex():
    joints = detect_joints(y_shape())
    assert len(joints) == 1
    assert joints[0].kind is JointKind.SEAM_VERTEX
    assert joints[0].element == 0


def test_disk_has_no_joints():
    assert detect_joints(disk()) == []


def test_triangle_plus_edge_gives_edge_triangle_vertex():
    joints = detect_joints(triangle_plus_edge())
    assert len(joints) == 1
    assert joints[0].kind is JointKind.EDGE_TRIANGLE_VERTEX
    assert joints[0].element == 0


def test_three_triangle_fan_gives_one_seam_edge():
    joints = detect_joints(three_fan())
    assert len(joints) == 1
    assert joints[0].kind is JointKind.SEAM_EDGE
    assert joints[0].element == (0, 1)


def test_bowtie_gives_triangle_triangle_vertex():
    joints = detect_joints(bowtie())
    assert len(joints) == 1
    assert joints[0].kind is JointKind.TRIANGLE_TRIANGLE_VERTEX
    assert joints[0].element == 0


def brute_force_joints(mm):
    """Incidence-counter re-derivation of all four joint definitions."""
    edge_faces = {}
    for f in mm.faces:
        a, b, c = f
        for e in ((a, b), (b, c), (a, c)):
            edge_faces.setdefault(e, []).append(f)
    standalone = [mm.edges[i] for i in mm.standalone_edges()]
    vertex_edges = {}
    for e in standalone:
        for v in e:
            vertex_edges.setdefault(v, []).append(e)
    vertex_faces = {}
    for f in mm.faces:
        for v in f:
            vertex_faces.setdefault(v, []).append(f)

    seam_edges = {e for e, fs in edge_faces.items() if len(fs) >= 3}
    seam_vertices = {v for v, es in vertex_edges.items() if len(es) >= 3}
    et_vertices = {v for v in vertex_edges if v in vertex_faces}
    tt_vertices = set()
    for v, fs in vertex_faces.items():
        if len(fs) < 2:
            continue
        # umbrella components: faces linked iff they share an edge through v
        remaining = [tuple(f) for f in fs]
        groups = 0
        while remaining:
            groups += 1
            stack = [remaining.pop()]
            while stack:
                f = stack.pop()
                hooked = []
                for g in remaining:
                    shared = set(f) & set(g)
                    if v in shared and len(shared) >= 2:
                        hooked.append(g)
                for g in hooked:
                    remaining.remove(g)
                    stack.extend([g])
        if groups >= 2:
            tt_vertices.add(v)
    return seam_edges, seam_vertices, et_vertices, tt_vertices


def test_detected_joints_match_incidence_counter_on_random_complexes():
    rng = np.random.default_rng(23)
    for _ in range(60):
        n = int(rng.integers(4, 10))
        pts = rng.uniform(-1, 1, (n, 3))
        radii = rng.uniform(0.1, 0.5, n)
        faces = set()
        for _ in range(int(rng.integers(0, 5))):
            f = tuple(sorted(rng.choice(n, 3, replace=False)))
            faces.add(f)
        edges = set()
        for _ in range(int(rng.integers(0, 6))):
            e = tuple(sorted(rng.choice(n, 2, replace=False)))
            edges.add(e)
        mm = medial(pts, radii, edges=sorted(edges), faces=sorted(faces))
        if not mm.faces and not mm.standalone_edges():
            continue
        got = detect_joints(mm)
        se, sv, et, tt = brute_force_joints(mm)
        assert {j.element for j in got if j.kind is JointKind.SEAM_EDGE} == se
        assert {j.element for j in got if j.kind is JointKind.SEAM_VERTEX} == sv
        assert {j.element for j in got
                if j.kind is JointKind.EDGE_TRIANGLE_VERTEX} == et
        assert {j.element for j in got
                if j.kind is JointKind.TRIANGLE_TRIANGLE_VERTEX} == tt


def split(mm):
    return split_components(mm, detect_joints(mm))


def test_y_shape_splits_into_three_curves():
    comps = split(y_shape())
    assert len(comps) == 3
    assert all(c.kind is ComponentKind.CURVE for c in comps)
    assert all(len(c.elements) == 1 for c in comps)


def test_plate_with_tail_splits_into_sheet_and_curve():
    comps = split(plate_with_tail())
    kinds = [c.kind for c in comps]
    assert kinds == [ComponentKind.SHEET, ComponentKind.CURVE]
    assert len(comps[0].elements) == 2
    assert len(comps[1].elements) == 2  # the joint vertex is not a curve cut


def test_closed_loop_is_one_curve():
    pts = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)]
    mm = medial(pts, [0.1] * 4, edges=[(0, 1), (1, 2), (2, 3), (0, 3)])
    comps = split(mm)
    assert len(comps) == 1
    assert comps[0].kind is ComponentKind.CURVE
    assert comps[0].extent == pytest.approx(4.0)


def test_seam_fan_splits_into_three_sheets():
    comps = split(three_fan())
    assert len(comps) == 3
    assert all(c.kind is ComponentKind.SHEET for c in comps)


def test_thinness_of_curve_and_sheet():
    pts = [(float(i), 0, 0) for i in range(11)]
    mm = medial(pts, [1.0] * 11, edges=[(i, i + 1) for i in range(10)])
    (curve,) = split(mm)
    assert curve.extent == pytest.approx(10.0)
    assert curve.max_radius == 1.0
    assert thinness(curve) == pytest.approx(10.0)

    # two right triangles with legs 3: total area 9
    pts = [(0, 0, 0), (3, 0, 0), (3, 3, 0), (0, 3, 0)]
    mm = medial(pts, [3.0, 1.0, 1.0, 1.0], faces=[(0, 1, 2), (0, 2, 3)])
    (sheet,) = split(mm)
    assert sheet.extent == pytest.approx(3.0)  # sqrt(9)
    assert thinness(sheet) == pytest.approx(1.0)


def test_zero_max_radius_raises():
    pts = [(0, 0, 0), (1, 0, 0)]
    mm = medial(pts, [0.0, 0.0], edges=[(0, 1)])
    (curve,) = split(mm)
    with pytest.raises(ZeroRadius):
        thinness(curve)


def test_thinness_is_scale_invariant():
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, (6, 3))
    radii = rng.uniform(0.2, 0.6, 6)
    edges = [(0, 1), (1, 2), (2, 3)]
    faces = [(3, 4, 5)]
    base = split(medial(pts, radii, edges=edges, faces=faces))
    scaled = split(medial(pts * 7.5, radii * 7.5, edges=edges, faces=faces))
    for c0, c1 in zip(base, scaled):
        assert thinness(c1) == pytest.approx(thinness(c0), rel=1e-12)


def segment_distance(p, a, b):
    d = b - a
    denom = float(d @ d)
    t = 0.0 if denom == 0.0 else float(np.clip((p - a) @ d / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * d)))


def triangle_distance_sampled(p, a, b, c, n=60):
    best = math.inf
    for i in range(n + 1):
        for j in range(n + 1 - i):
            u, v = i / n, j / n
            q = a + u * (b - a) + v * (c - a)
            best = min(best, float(np.linalg.norm(p - q)))
    return best


def test_node_on_a_curve_segment_is_assigned_to_it():
    mm = plate_with_tail()
    g = build_graph(mm)
    comps = split(mm)
    assign_base_nodes(g, comps)
    # node for edge (1,4) sits on the curve component
    tail_node = next(i for i, n in enumerate(g.nodes) if n.element == (1, 4))
    assert g.component_id[tail_node] == 1
    assert tail_node in comps[1].member_nodes


def test_equidistant_node_prefers_lower_component_index():
    smat = medial([(0, 0, 0), (1, 0, 0), (4, 0, 0), (5, 0, 0)], [0.1] * 4,
                  edges=[(0, 1), (2, 3)])
    comps = split(smat)
    assert len(comps) == 2
    base = medial([(2, 0, 0), (3, 0, 0)], [0.1] * 2, edges=[(0, 1)])
    g = build_graph(base)
    assign_base_nodes(g, comps)  # centroid (2.5,0,0) is 1.5 from both
    assert g.component_id[0] == 0


def test_assignment_matches_exhaustive_distance_scan():
    rng = np.random.default_rng(11)
    # structured MAT: one sheet of two triangles plus one curve of two edges
    pts = [(0, 0, 0), (2, 0, 0), (2, 2, 0), (0, 2, 0),
           (4, 1, 1), (6, 1, 1), (8, 1, 1)]
    smat = medial(pts, [0.5] * 7,
                  edges=[(4, 5), (5, 6)],
                  faces=[(0, 1, 2), (0, 2, 3)])
    comps = split(smat)
    assert len(comps) == 2

    base_pts = rng.uniform(-1, 9, (50, 3))
    base = medial(base_pts, rng.uniform(0.1, 0.3, 50),
                  edges=[(i, i + 1) for i in range(49)])
    g = build_graph(base)
    assign_base_nodes(g, comps)

    tri = [np.array(pts[v], dtype=float) for v in (0, 1, 2)]
    tri2 = [np.array(pts[v], dtype=float) for v in (0, 2, 3)]
    segs = [(np.array(pts[4], float), np.array(pts[5], float)),
            (np.array(pts[5], float), np.array(pts[6], float))]
    checked = 0
    for i, node in enumerate(g.nodes):
        p = np.array(node.centroid)
        d_sheet = min(triangle_distance_sampled(p, *tri),
                      triangle_distance_sampled(p, *tri2))
        d_curve = min(segment_distance(p, *s) for s in segs)
        margin = abs(d_sheet - d_curve)
        if margin > 0.05:  # outside the sampling oracle's resolution
            expected = 0 if d_sheet < d_curve else 1
            assert g.component_id[i] == expected
            checked += 1
    assert checked >= 40


def test_member_nodes_partition_all_nodes():
    mm = plate_with_tail()
    g = build_graph(mm)
    comps = split(mm)
    assign_base_nodes(g, comps)
    all_nodes = sorted(n for c in comps for n in c.member_nodes)
    assert all_nodes == list(range(len(g)))
    assert np.all(np.asarray(g.component_id) >= 0)
