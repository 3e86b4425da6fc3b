import io

import numpy as np
import pytest

from nhdfem.errors import MeshParseError
from nhdfem.gmsh import read_gmsh_msh, write_gmsh_msh
from nhdfem.mesh import extract_submesh, generate_box_mesh, generate_sphere_in_sphere

SINGLE_TET = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 2 0 0
3 0 1 0
4 0 0 3
$EndNodes
$Elements
2
1 4 2 7 1 1 2 3 4
2 2 2 5 1 1 2 3
$EndElements
"""

TWO_REGION = """$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
2
3 1 "metal"
3 2 "air"
$EndPhysicalNames
$Nodes
5
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
5 1 1 1
$EndNodes
$Elements
2
1 4 2 1 1 1 2 3 4
2 4 2 2 2 2 3 4 5
$EndElements
"""


def test_single_tet():
    m = read_gmsh_msh(io.StringIO(SINGLE_TET))
    assert m.n_cells == 1
    assert m.total_volume() == pytest.approx(1.0)  # det = 6
    assert m.cell_markers[0] == 7
    f = m.find_faces([[0, 1, 2]])[0]
    assert m.face_marker[f] == 5


def test_two_regions_and_submesh():
    m = read_gmsh_msh(TWO_REGION)  # also accepts the text itself
    np.testing.assert_array_equal(m.cell_markers, [1, 2])
    sub = extract_submesh(m, 1)
    np.testing.assert_array_equal(sub.parent_cell, [0])


def test_prism_rejected():
    text = SINGLE_TET.replace("2 2 2 5 1 1 2 3", "2 6 2 5 1 1 2 3 4 1 2")
    with pytest.raises(MeshParseError, match="unsupported element type 6") as exc:
        read_gmsh_msh(text)
    assert exc.value.line == 14
    assert "line 14" in str(exc.value)


def test_dangling_node():
    text = SINGLE_TET.replace("1 4 2 7 1 1 2 3 4", "1 4 2 7 1 1 2 3 9")
    with pytest.raises(MeshParseError, match="line 13"):
        read_gmsh_msh(text)


@pytest.mark.parametrize("text", [
    SINGLE_TET.replace("$Nodes", "$Nodez"),
    SINGLE_TET.replace("2.2 0 8", "4.1 0 8"),
    SINGLE_TET.replace("1 0 0 0", "1 0 zero 0"),
    SINGLE_TET.replace("$EndElements\n", ""),
])
def test_malformed(text):
    with pytest.raises(MeshParseError):
        read_gmsh_msh(text)


@pytest.mark.parametrize("mesh", [generate_box_mesh((2, 1, 1)), generate_sphere_in_sphere(n_inner=1, n_outer=1)])
def test_round_trip(mesh):
    buf = io.StringIO()
    write_gmsh_msh(mesh, buf)
    back = read_gmsh_msh(buf.getvalue())
    np.testing.assert_array_equal(back.vertices, mesh.vertices)
    np.testing.assert_array_equal(back.cell_markers, mesh.cell_markers)
    assert back.face_tag_dict() == mesh.face_tag_dict()
    assert back.total_volume() == pytest.approx(mesh.total_volume(), rel=1e-14)
