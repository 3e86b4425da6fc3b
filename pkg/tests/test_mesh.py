import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhdfem.errors import DegenerateCellError, InvalidArgument
from nhdfem.mesh import (Mesh, cell_affine_map, extract_submesh, generate_box_mesh,
                         generate_sphere_in_sphere, refine_uniform, validate)


def test_box_one_cube():
    m = generate_box_mesh((1, 1, 1))
    assert (m.n_cells, m.n_vertices, m.n_edges) == (6, 8, 19)
    assert abs(m.total_volume() - 1) < 1e-14
    validate(m, expected_volume=1.0)


def test_box_two_and_four():
    m = generate_box_mesh((2, 2, 2))
    assert (m.n_cells, m.n_vertices) == (48, 27)
    assert abs(m.total_volume() - 1) < 1e-14
    m4 = generate_box_mesh((4, 4, 4))
    assert m4.n_vertices - m4.n_edges + m4.n_faces - m4.n_cells == 1
    validate(m4, expected_volume=1.0)


def test_box_anisotropic_bounds():
    m = generate_box_mesh((3, 1, 2), ((0, -1, 2), (3, 1, 2.5)))
    validate(m, expected_volume=3.0)
    assert m.n_cells == 36
    assert set(np.unique(m.boundary_face_marker)) == {1, 2, 3, 4, 5, 6}


@pytest.mark.parametrize("n", [(0, 1, 1), (1, -2, 1)])
def test_box_invalid(n):
    with pytest.raises(InvalidArgument):
        generate_box_mesh(n)


def test_box_side_tags_match_geometry():
    m = generate_box_mesh((2, 2, 2))
    for f, tag in zip(m.boundary_faces, m.boundary_face_marker):
        axis, side = divmod(int(tag) - 1, 2)
        assert np.allclose(m.vertices[m.faces[f], axis], float(side))


def test_topology_invariants():
    m = generate_box_mesh((3, 2, 2))
    assert np.all(m.cell_volumes > 0)
    assert np.all(np.diff(m.edges, axis=1) > 0)
    assert np.all(np.diff(m.faces, axis=1) > 0)
    interior = m.face_cells[:, 1] >= 0
    assert np.all(m.face_cells[:, 0] >= 0)
    assert interior.sum() + len(m.boundary_faces) == m.n_faces


def test_negative_orientation_is_flipped():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float)
    m = Mesh(v, np.array([[0, 2, 1, 3]]))
    assert m.cell_volumes[0] > 0
    assert abs(m.cell_volumes[0] - 1 / 6) < 1e-15


def test_degenerate_cell():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], float)
    with pytest.raises(DegenerateCellError):
        Mesh(v, np.array([[0, 1, 2, 3]]))


def test_affine_map_examples(unit_tet):
    amap = cell_affine_map(unit_tet, 0)
    np.testing.assert_allclose(amap.jacobian, np.eye(3))
    assert amap.det == pytest.approx(1.0)
    scaled = Mesh(2 * unit_tet.vertices, unit_tet.cells)
    assert cell_affine_map(scaled, 0).det == pytest.approx(8.0)


def test_affine_map_round_trip(skew_tet):
    amap = cell_affine_map(skew_tet, 0)
    assert amap.det > 0
    assert amap.det == pytest.approx(6 * skew_tet.cell_volumes[0])
    rng = np.random.default_rng(1)
    x = rng.random((10, 3))
    np.testing.assert_allclose(amap(amap.inverse(x)), x, atol=1e-13)
    xi = rng.random((10, 3)) / 3
    np.testing.assert_allclose(amap.inverse(amap(xi)), xi, atol=1e-14)


def test_refine_counts_and_volume():
    m = generate_box_mesh((1, 1, 1))
    r = refine_uniform(m)
    assert r.n_cells == 48
    validate(r, expected_volume=1.0)
    direct = generate_box_mesh((4, 4, 4))
    r2 = refine_uniform(generate_box_mesh((2, 2, 2)))
    assert r2.n_cells == direct.n_cells
    assert abs(r2.total_volume() - direct.total_volume()) < 1e-12
    assert r2.h == pytest.approx(direct.h)


def test_refine_markers_and_tags():
    m = generate_box_mesh((2, 1, 1))
    left = m.cell_centroids[:, 0] < 1
    m = Mesh(m.vertices, m.cells, np.where(left, 1, 2), m.face_tag_dict())
    r = refine_uniform(m)
    parent_marker = np.repeat(m.cell_markers, 8)
    np.testing.assert_array_equal(r.cell_markers, parent_marker)
    for marker in (1, 2):
        assert r.cell_volumes[r.cell_markers == marker].sum() == pytest.approx(
            m.cell_volumes[m.cell_markers == marker].sum(), rel=1e-12)
    # boundary tags survive
    for tag in range(1, 7):
        a0 = m.face_geometry(m.boundary_faces[m.boundary_face_marker == tag])[1].sum()
        a1 = r.face_geometry(r.boundary_faces[r.boundary_face_marker == tag])[1].sum()
        assert a1 == pytest.approx(a0, rel=1e-12)


def test_refine_distorted_mesh(distorted):
    r = refine_uniform(distorted)
    validate(r, expected_volume=distorted.total_volume())
    assert r.h < distorted.h


def test_submesh_half_box():
    m = generate_box_mesh((2, 2, 2))
    left = m.cell_centroids[:, 0] < 0.5
    m = Mesh(m.vertices, m.cells, np.where(left, 1, 2))
    sub = extract_submesh(m, 1)
    assert sub.total_volume() == pytest.approx(0.5, rel=1e-14)
    np.testing.assert_array_equal(sub.parent_cell, np.flatnonzero(left))
    assert len(set(sub.parent_vertex.tolist())) == len(sub.parent_vertex)
    np.testing.assert_array_equal(sub.vertices, m.vertices[sub.parent_vertex])
    # geometry bit-identical to the parent's
    o, J, _, _ = sub.sorted_geometry
    po, pJ, _, _ = m.sorted_geometry
    np.testing.assert_array_equal(o, po[sub.parent_cell])
    np.testing.assert_array_equal(J, pJ[sub.parent_cell])


def test_submesh_uniform_marker_is_copy():
    m = generate_box_mesh((2, 2, 2))
    sub = extract_submesh(m, 1)
    np.testing.assert_array_equal(np.sort(sub.parent_cell), np.arange(m.n_cells))
    assert sub.n_faces == m.n_faces


def test_submesh_missing_marker():
    with pytest.raises(InvalidArgument):
        extract_submesh(generate_box_mesh((1, 1, 1)), 5)


def test_sphere_submesh_boundary_is_interface():
    m = generate_sphere_in_sphere(n_inner=1, n_outer=1)
    validate(m)
    sub = extract_submesh(m, 1)
    iface = {tuple(m.faces[f]) for f in np.flatnonzero(m.face_marker == 11)}
    sub_bnd = {tuple(sub.parent_vertex[sub.faces[f]]) for f in sub.boundary_faces}
    assert iface == sub_bnd
    assert np.all(m.boundary_face_marker == 10)


def test_sphere_geometry():
    m = generate_sphere_in_sphere(2.0, 20.0, 2, 2)
    validate(m)
    r = np.linalg.norm(m.vertices, axis=1)
    assert r.max() == pytest.approx(20.0)
    bverts = np.unique(m.faces[m.boundary_faces])
    np.testing.assert_allclose(r[bverts], 20.0)
    # polyhedral volumes approach the balls from below
    inner = m.cell_volumes[m.cell_markers == 1].sum()
    assert 0.5 * 4 / 3 * np.pi * 8 < inner < 4 / 3 * np.pi * 8


def test_find_entities():
    m = generate_box_mesh((1, 1, 1))
    e = m.find_edges([[m.edges[3, 1], m.edges[3, 0]], [0, 0]])
    assert e[0] == 3 and e[1] == -1
    f = m.find_faces([m.faces[5][::-1]])
    assert f[0] == 5


def test_validate_detects_wrong_volume():
    with pytest.raises(InvalidArgument):
        validate(generate_box_mesh((1, 1, 1)), expected_volume=2.0)


def test_arrays_are_read_only():
    m = generate_box_mesh((1, 1, 1))
    with pytest.raises(ValueError):
        m.vertices[0, 0] = 5.0


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3),
       st.lists(st.floats(0.5, 2.0), min_size=3, max_size=3))
def test_box_invariants_property(nx, ny, nz, size):
    hi = tuple(size)
    m = generate_box_mesh((nx, ny, nz), ((0, 0, 0), hi))
    validate(m, expected_volume=float(np.prod(size)))
    assert m.n_cells == 6 * nx * ny * nz


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_vertex_renumbering_preserves_geometry(seed):
    m = generate_box_mesh((2, 1, 1))
    perm = np.random.default_rng(seed).permutation(m.n_vertices)
    inv = np.argsort(perm)
    m2 = Mesh(m.vertices[perm], inv[m.cells])
    validate(m2, expected_volume=1.0)
    np.testing.assert_allclose(np.sort(m2.cell_volumes), np.sort(m.cell_volumes), rtol=1e-13)
    assert (m2.n_edges, m2.n_faces) == (m.n_edges, m.n_faces)
