"""Drivers behind the command line: convergence study, scattering sweep, dispersion scan."""
import csv
import logging
import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .assembly import build_coupled_system
from .errors import ConfigError, ConvergenceError, PoleError, SingularMatrixError
from .fespaces import FEField, FESpace
from .gmsh import read_gmsh_msh
from .linsolve import solve
from .mesh import extract_submesh, generate_box_mesh, generate_sphere_in_sphere
from .model import (SPEED_OF_LIGHT, IncidentWave, ManufacturedCase, nonlocal_permittivity,
                    plane_wave_source)
from .postprocess import (ConvergenceTable, error_hcurl, error_hdiv, export_vtk,
                          extinction_cross_section, galerkin_residual, interface_surface)

log = logging.getLogger(__name__)

LENGTH_UNIT_NM = 1e-9


class SolverFailure(RuntimeError):
    """A linear solve failed inside a driver; the message names the step."""


@dataclass
class CoupledSolution:
    E: FEField
    J: FEField
    x: np.ndarray
    matrix: object
    rhs: np.ndarray
    blocks: object
    report: object


def _threads(serial):
    return 1 if serial else kernels.thread_count()


def solve_coupled(params, E_space, J_space, f1=None, f2=None, g=None, boundary_marker=None,
                  solver=None, serial=False):
    """Assemble and solve; ``solver`` is a dict of :func:`linsolve.solve` options."""
    A, b, blocks = build_coupled_system(params, E_space, J_space, f1, f2, g, boundary_marker,
                                        threads=_threads(serial))
    x, report = solve(A, b, **(solver or {}))
    return CoupledSolution(FEField(E_space, x[:E_space.n_dofs]), FEField(J_space, x[E_space.n_dofs:]),
                           x, A, b, blocks, report)


def solve_manufactured(n, order, solver=None, serial=False, params=None):
    """Manufactured problem on the n x n x n unit-cube box mesh."""
    case = ManufacturedCase(params)
    mesh = generate_box_mesh((n, n, n))
    E = FESpace("nedelec", mesh, order)
    J = FESpace("rt", mesh, order, zero_normal_bc=True)
    sol = solve_coupled(case.params, E, J, case.f1, case.f2, case.g, solver=solver, serial=serial)
    err_E = error_hcurl(sol.E, case.E, case.curl_E)
    err_J = error_hdiv(sol.J, case.J, case.div_J)
    return sol, err_E, err_J


def _solver_options(cfg):
    s = cfg.solver
    opts = {"method": s.method, "tol": s.tol}
    if s.method == "gmres":
        opts.update(restart=s.restart, max_iter=s.max_iter, precond=s.precond)
    else:
        opts["ordering"] = s.ordering
    return opts


def _out_dir(cfg, out):
    path = out or cfg.output.directory
    if not os.path.isabs(path) and out is None:
        path = os.path.join(cfg.base_dir, path)
    os.makedirs(path, exist_ok=True)
    return path


def run_convergence_study(cfg, out=None, serial=False):
    """Solve the manufactured problem on n * 2**level boxes; write convergence.csv."""
    if cfg.problem.kind != "manufactured":
        raise ConfigError("convergence study requires [problem] kind = 'manufactured'")
    if cfg.mesh.source != "box":
        raise ConfigError("convergence study requires [mesh] source = 'box'")
    params = cfg.params()
    out_dir = _out_dir(cfg, out)
    table = ConvergenceTable()
    opts = _solver_options(cfg)
    for level in range(cfg.problem.levels):
        n = cfg.mesh.n * 2 ** level
        try:
            sol, eE, eJ = solve_manufactured(n, cfg.problem.order, opts, serial, params)
        except (SingularMatrixError, ConvergenceError) as exc:
            raise SolverFailure(f"level {level} (n={n}): {exc}") from exc
        h = sol.E.space.mesh.h
        row = table.add(level, h, sol.E.space.n_dofs, sol.J.space.n_free_dofs, eE.combined, eJ.combined)
        res = galerkin_residual(sol.blocks, sol.x)
        log.info("level %d n=%d err_E=%.4e err_J=%.4e residual=%.2e/%.2e", level, n, row.err_E,
                 row.err_J, res.rel_E, res.rel_J)
        if cfg.output.vtk:
            export_vtk(os.path.join(out_dir, f"manufactured_level{level}.vtk"), sol.E.space.mesh,
                       {"E": sol.E, "J": sol.J})
    table.write_csv(os.path.join(out_dir, "convergence.csv"))
    return table


def load_mesh(cfg):
    m = cfg.mesh
    if m.source == "box":
        return generate_box_mesh((m.n, m.n, m.n))
    if m.source == "sphere":
        return generate_sphere_in_sphere(m.inner_radius, m.outer_radius, m.n_inner, m.n_outer,
                                         inner_marker=m.metal_marker,
                                         outer_boundary_tag=m.outer_boundary_tag)
    with open(cfg.mesh_path()) as fh:
        return read_gmsh_msh(fh)


def scattering_params(cfg, ratio, omega_p=None):
    """Parameters at omega = ratio * omega_p.

    With ``units = "silver_nm"`` the [physics] frequencies are in rad/s and
    beta in m/s; they are rescaled to lengths in nm and c = 1.
    """
    base = cfg.params()
    wp, gamma, beta = base.omega_p, base.gamma, base.beta
    if cfg.problem.units == "silver_nm":
        k = LENGTH_UNIT_NM / SPEED_OF_LIGHT
        wp, gamma, beta = wp * k, gamma * k, beta / SPEED_OF_LIGHT
    omega = ratio * wp
    return base.replace(omega=omega, omega_p=wp if omega_p is None else omega_p, gamma=gamma,
                        beta=beta)


def run_scattering(cfg, out=None, serial=False):
    """Frequency sweep of the extinction cross section; writes spectrum.csv."""
    if cfg.problem.kind != "scattering":
        raise ConfigError("scattering run requires [problem] kind = 'scattering'")
    mesh = load_mesh(cfg)
    marker = cfg.mesh.metal_marker
    if marker not in set(np.unique(mesh.cell_markers).tolist()):
        raise ConfigError(f"mesh has no cells with metal marker {marker}")
    if not np.any(mesh.boundary_face_marker == cfg.mesh.outer_boundary_tag):
        raise ConfigError(f"mesh has no boundary faces tagged {cfg.mesh.outer_boundary_tag}")
    sub = extract_submesh(mesh, marker)
    E = FESpace("nedelec", mesh, cfg.problem.order)
    J = FESpace("rt", sub, cfg.problem.order, zero_normal_bc=True)
    surface = interface_surface(mesh, marker)
    out_dir = _out_dir(cfg, out)
    opts = _solver_options(cfg)
    rows = []
    for i, ratio in enumerate(cfg.problem.frequencies):
        variants = [("metal", None)] + ([("control", 0.0)] if cfg.problem.control else [])
        row = [ratio]
        for label, wp in variants:
            params = scattering_params(cfg, ratio, wp)
            wave = IncidentWave(omega=params.omega, mu=params.mu2, eps=params.eps2)
            g = plane_wave_source(wave, params)
            try:
                sol = solve_coupled(params, E, J, g=g, boundary_marker=cfg.mesh.outer_boundary_tag,
                                    solver=opts, serial=serial)
            except (SingularMatrixError, ConvergenceError) as exc:
                raise SolverFailure(f"frequency {ratio} ({label}): {exc}") from exc
            sigma = extinction_cross_section(sol.E, wave, surface, cfg.problem.diameter, mu=params.mu2)
            row.append(sigma)
            log.info("omega/omega_p=%g %s sigma_ext=%.6e", ratio, label, sigma)
            if cfg.output.vtk and label == "metal":
                export_vtk(os.path.join(out_dir, f"scatter_{i:03d}.vtk"), mesh, {"E": sol.E, "J": sol.J})
        rows.append(row)
    header = ["omega_over_omega_p", "sigma_ext"] + (["sigma_ext_control"] if cfg.problem.control else [])
    with open(os.path.join(out_dir, "spectrum.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows([[repr(float(v)) for v in r] for r in rows])
    return rows


def run_dispersion(cfg, out=None, serial=False):
    """eps(omega, k) on the configured grids; rows at the pole are flagged."""
    if cfg.problem.kind != "dispersion":
        raise ConfigError("dispersion scan requires [problem] kind = 'dispersion'")
    base = cfg.params()
    out_dir = _out_dir(cfg, out)
    rows = []
    for w in cfg.problem.omega_grid:
        params = base.replace(omega=w)
        for k in cfg.problem.k_grid:
            try:
                eps = complex(nonlocal_permittivity(params, k))
                rows.append([repr(float(w)), repr(float(k)), repr(eps.real), repr(eps.imag), 0])
            except PoleError:
                rows.append([repr(float(w)), repr(float(k)), "", "", 1])
    with open(os.path.join(out_dir, "dispersion.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega", "k", "re_eps", "im_eps", "pole"])
        writer.writerows(rows)
    return rows


def mesh_info(cfg):
    mesh = load_mesh(cfg)
    return mesh.summary()


__all__ = ["SolverFailure", "run_convergence_study", "run_scattering", "run_dispersion",
           "mesh_info", "solve_manufactured", "solve_coupled", "scattering_params", "load_mesh"]
