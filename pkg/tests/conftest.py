import numpy as np
import pytest

from nhdfem.mesh import Mesh, generate_box_mesh


def duffy_tet_rule(n):
    """Collapsed Gauss-Legendre rule on the reference tetrahedron (exact to degree 2n-3)."""
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = 0.5 * (x + 1), 0.5 * w
    pts, wts = [], []
    for a, wa in zip(x, w):
        for b, wb in zip(x, w):
            for c, wc in zip(x, w):
                pts.append((a, b * (1 - a), c * (1 - a) * (1 - b)))
                wts.append(wa * wb * wc * (1 - a) ** 2 * (1 - b))
    return np.array(pts), np.array(wts)


def duffy_tri_rule(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x, w = 0.5 * (x + 1), 0.5 * w
    pts, wts = [], []
    for a, wa in zip(x, w):
        for b, wb in zip(x, w):
            pts.append((a, b * (1 - a)))
            wts.append(wa * wb * (1 - a))
    return np.array(pts), np.array(wts)


def whitney_edge(lam_grad, a, b):
    """lambda_a grad lambda_b - lambda_b grad lambda_a as a function of barycentrics."""
    ga, gb = lam_grad[a], lam_grad[b]
    return lambda lam: lam[:, a, None] * gb - lam[:, b, None] * ga


def barycentric(vertices, points):
    """Barycentric coordinates (npts, 4) and their constant gradients (4, 3)."""
    T = np.column_stack([vertices[1] - vertices[0], vertices[2] - vertices[0], vertices[3] - vertices[0]])
    Tinv = np.linalg.inv(T)
    xi = (points - vertices[0]) @ Tinv.T
    lam = np.column_stack([1 - xi.sum(axis=1), xi])
    grads = np.vstack([-Tinv.sum(axis=0), Tinv])
    return lam, grads


def read_vtk(path):
    """Minimal legacy-VTK reader for the files written by export_vtk."""
    tokens = open(path).read().split("\n")
    out = {"cell_data": {}}
    i = 0
    while i < len(tokens):
        line = tokens[i].split()
        if not line:
            i += 1
            continue
        if line[0] == "POINTS":
            n = int(line[1])
            out["points"] = np.array([list(map(float, t.split())) for t in tokens[i + 1:i + 1 + n]])
            i += n + 1
        elif line[0] == "CELLS":
            n = int(line[1])
            out["cells"] = np.array([list(map(int, t.split()))[1:] for t in tokens[i + 1:i + 1 + n]])
            i += n + 1
        elif line[0] == "CELL_TYPES":
            n = int(line[1])
            out["types"] = [int(t) for t in tokens[i + 1:i + 1 + n]]
            i += n + 1
        elif line[0] == "CELL_DATA":
            out["n_cells"] = int(line[1])
            i += 1
        elif line[0] == "VECTORS":
            n = out["n_cells"]
            out["cell_data"][line[1]] = np.array([list(map(float, t.split())) for t in tokens[i + 1:i + 1 + n]])
            i += n + 1
        elif line[0] == "SCALARS":
            n = out["n_cells"]
            out["cell_data"][line[1]] = np.array([float(t) for t in tokens[i + 2:i + 2 + n]])
            i += n + 2
        else:
            i += 1
    return out


@pytest.fixture
def unit_tet():
    return Mesh(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], float), np.array([[0, 1, 2, 3]]))


@pytest.fixture
def skew_tet():
    v = np.array([[0.1, -0.2, 0.05], [1.3, 0.1, 0.2], [0.2, 0.9, -0.1], [0.3, 0.4, 1.1]])
    return Mesh(v, np.array([[2, 0, 3, 1]]))


@pytest.fixture
def cube6():
    return generate_box_mesh((1, 1, 1))


def distorted_box(n=3, amount=0.12, seed=7):
    m = generate_box_mesh((n, n, n))
    rng = np.random.default_rng(seed)
    v = m.vertices.copy()
    interior = np.all((v > 1e-12) & (v < 1 - 1e-12), axis=1)
    v[interior] += rng.uniform(-amount, amount, size=(interior.sum(), 3)) / n
    A = np.array([[1.0, 0.2, -0.1], [0.1, 0.9, 0.15], [-0.05, 0.1, 1.1]])
    return Mesh(v @ A.T + np.array([0.3, -0.2, 0.1]), m.cells)


@pytest.fixture
def distorted():
    return distorted_box()


# ---------------------------------------------------------------- acceptance report
ACCEPTANCE_RESULTS = {}


def record_criterion(number, title, passed, detail=""):
    ACCEPTANCE_RESULTS[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, passed, detail = ACCEPTANCE_RESULTS[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} [{status}] {title}: {detail}")
