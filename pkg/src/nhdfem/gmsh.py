"""Gmsh MSH 2.2 ASCII reader and writer (tetrahedra + triangles only)."""
import io

import numpy as np

from .errors import MeshParseError
from .mesh import Mesh

TRIANGLE = 2
TETRAHEDRON = 4
_NODES_PER_TYPE = {TRIANGLE: 3, TETRAHEDRON: 4}


class _Lines:
    def __init__(self, stream):
        self._it = iter(stream)
        self.lineno = 0

    def next(self, what):
        for raw in self._it:
            self.lineno += 1
            line = raw.strip()
            if line:
                return line
        raise MeshParseError(f"unexpected end of file while reading {what}", self.lineno)


def _ints(line, lines, count=None):
    try:
        vals = [int(tok) for tok in line.split()]
    except ValueError:
        raise MeshParseError(f"expected integers, got {line!r}", lines.lineno) from None
    if count is not None and len(vals) != count:
        raise MeshParseError(f"expected {count} integers, got {len(vals)}", lines.lineno)
    return vals


def read_gmsh_msh(stream):
    """Parse an MSH 2.2 ASCII stream into a :class:`Mesh`.

    The first element tag is the physical group: volume tags become cell
    markers and surface tags become face markers.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = _Lines(stream)
    node_ids, coords = None, None
    tets, tet_tags, tri_tags = [], [], {}
    tri_lines = []
    seen_format = False
    while True:
        try:
            header = lines.next("section header")
        except MeshParseError:
            break
        if not header.startswith("$"):
            raise MeshParseError(f"expected a section header, got {header!r}", lines.lineno)
        name = header[1:]
        if name == "MeshFormat":
            fmt = lines.next("format line").split()
            if len(fmt) < 3 or not fmt[0].startswith("2."):
                raise MeshParseError(f"unsupported MSH version {fmt[:1]}", lines.lineno)
            if fmt[1] != "0":
                raise MeshParseError("binary MSH files are not supported", lines.lineno)
            seen_format = True
        elif name == "Nodes":
            (n,) = _ints(lines.next("node count"), lines, 1)
            node_ids = np.empty(n, dtype=np.int64)
            coords = np.empty((n, 3))
            for i in range(n):
                tok = lines.next("node").split()
                if len(tok) != 4:
                    raise MeshParseError("node line needs id x y z", lines.lineno)
                try:
                    node_ids[i] = int(tok[0])
                    coords[i] = [float(t) for t in tok[1:]]
                except ValueError:
                    raise MeshParseError(f"bad node line {tok!r}", lines.lineno) from None
        elif name == "Elements":
            if node_ids is None:
                raise MeshParseError("$Elements before $Nodes", lines.lineno)
            index = {int(k): i for i, k in enumerate(node_ids)}
            (n,) = _ints(lines.next("element count"), lines, 1)
            for _ in range(n):
                vals = _ints(lines.next("element"), lines)
                if len(vals) < 3:
                    raise MeshParseError("truncated element line", lines.lineno)
                etype, ntags = vals[1], vals[2]
                if etype not in _NODES_PER_TYPE:
                    raise MeshParseError(f"unsupported element type {etype}", lines.lineno)
                nn = _NODES_PER_TYPE[etype]
                if len(vals) != 3 + ntags + nn:
                    raise MeshParseError("element line has wrong length", lines.lineno)
                tag = vals[3] if ntags > 0 else 0
                try:
                    verts = [index[v] for v in vals[3 + ntags:]]
                except KeyError as exc:
                    raise MeshParseError(f"element references unknown node {exc.args[0]}", lines.lineno) from None
                if etype == TETRAHEDRON:
                    tets.append(verts)
                    tet_tags.append(tag)
                else:
                    tri_tags[tuple(sorted(verts))] = tag
                    tri_lines.append(lines.lineno)
        else:
            # skip unknown sections such as $PhysicalNames
            pass
        end = lines.next(f"$End{name}")
        while end != f"$End{name}":
            if name in ("MeshFormat", "Nodes", "Elements"):
                raise MeshParseError(f"expected $End{name}, got {end!r}", lines.lineno)
            end = lines.next(f"$End{name}")
    if not seen_format:
        raise MeshParseError("missing $MeshFormat section", lines.lineno)
    if not tets:
        raise MeshParseError("no tetrahedra in file", lines.lineno)
    mesh = Mesh(coords, np.array(tets), np.array(tet_tags), tri_tags)
    if tri_tags:
        missing = mesh.find_faces(np.array(list(tri_tags.keys())))
        if np.any(missing < 0):
            bad = int(np.flatnonzero(missing < 0)[0])
            raise MeshParseError("triangle is not a face of any tetrahedron", tri_lines[bad])
    return mesh


def write_gmsh_msh(mesh, stream):
    """Write ``mesh`` as MSH 2.2 ASCII; tagged faces are emitted as triangles."""
    w = stream.write
    w("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
    w(f"$Nodes\n{mesh.n_vertices}\n")
    for i, (x, y, z) in enumerate(mesh.vertices.tolist(), start=1):
        w(f"{i} {x!r} {y!r} {z!r}\n")
    w("$EndNodes\n")
    tagged = np.flatnonzero(mesh.face_marker)
    w(f"$Elements\n{len(tagged) + mesh.n_cells}\n")
    eid = 1
    for f in tagged:
        a, b, c = mesh.faces[f] + 1
        t = mesh.face_marker[f]
        w(f"{eid} {TRIANGLE} 2 {t} {t} {a} {b} {c}\n")
        eid += 1
    for cell, t in zip(mesh.cells + 1, mesh.cell_markers):
        w(f"{eid} {TETRAHEDRON} 2 {t} {t} {cell[0]} {cell[1]} {cell[2]} {cell[3]}\n")
        eid += 1
    w("$EndElements\n")
