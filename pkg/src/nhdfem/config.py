"""Run configuration: TOML sections [problem], [mesh], [physics], [solver], [output]."""
import os
import sys
from dataclasses import asdict, dataclass, field, fields

import tomli_w

from .errors import ConfigError, InvalidArgument
from .model import PhysicalParams

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PROBLEM_KINDS = ("manufactured", "scattering", "dispersion")
MESH_SOURCES = ("box", "sphere", "msh")
UNIT_SYSTEMS = ("nondimensional", "silver_nm")


@dataclass
class ProblemSection:
    kind: str = "manufactured"
    order: int = 1
    levels: int = 1
    frequencies: list = field(default_factory=list)  # omega / omega_p (scattering)
    control: bool = False  # also solve each frequency with omega_p = 0
    diameter: float = 4.0
    units: str = "nondimensional"
    omega_grid: list = field(default_factory=list)  # dispersion
    k_grid: list = field(default_factory=list)


@dataclass
class MeshSection:
    source: str = "box"
    n: int = 2
    path: str = ""
    inner_radius: float = 2.0
    outer_radius: float = 20.0
    n_inner: int = 2
    n_outer: int = 2
    metal_marker: int = 1
    outer_boundary_tag: int = 10


@dataclass
class PhysicsSection:
    omega: float = 1.0
    omega_p: float = 1.0
    gamma: float = 1.0
    beta: float = 1.0
    eps0: float = 1.0
    mu1: float = 1.0
    mu2: float = 1.0
    eps1: float = 1.0
    eps2: float = 1.0
    eps_inf: float = 1.0


@dataclass
class SolverSection:
    method: str = "direct"
    tol: float = 1e-10
    restart: int = 50
    max_iter: int = 2000
    precond: str = "ilu0"
    ordering: str = "nested_dissection"


@dataclass
class OutputSection:
    directory: str = "out"
    vtk: bool = False


_SECTIONS = {
    "problem": ProblemSection,
    "mesh": MeshSection,
    "physics": PhysicsSection,
    "solver": SolverSection,
    "output": OutputSection,
}


@dataclass
class RunConfig:
    problem: ProblemSection = field(default_factory=ProblemSection)
    mesh: MeshSection = field(default_factory=MeshSection)
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    solver: SolverSection = field(default_factory=SolverSection)
    output: OutputSection = field(default_factory=OutputSection)
    base_dir: str = field(default=".", compare=False, repr=False)

    def to_dict(self):
        return {name: asdict(getattr(self, name)) for name in _SECTIONS}

    def params(self, **overrides):
        data = asdict(self.physics)
        data.update(overrides)
        try:
            return PhysicalParams(**data)
        except InvalidArgument as exc:
            raise ConfigError(f"[physics] {exc}") from None

    def mesh_path(self):
        p = self.mesh.path
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)


def _coerce(section, key, value, default):
    where = f"[{section}] {key}"
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string")
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, (int, float))
                                              for v in value):
            raise ConfigError(f"{where} must be a list of numbers")
        return [float(v) for v in value]
    raise ConfigError(f"{where}: unsupported type")


def from_dict(data, base_dir="."):
    """Build a RunConfig, rejecting unknown sections and keys."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a table")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
    sections = {}
    for name, cls in _SECTIONS.items():
        raw = data.get(name, {})
        if not isinstance(raw, dict):
            raise ConfigError(f"[{name}] must be a table")
        defaults = cls()
        known = {f.name for f in fields(cls)}
        bad = set(raw) - known
        if bad:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(bad))}")
        values = {k: _coerce(name, k, v, getattr(defaults, k)) for k, v in raw.items()}
        sections[name] = cls(**values)
    cfg = RunConfig(**sections, base_dir=base_dir)
    _validate(cfg)
    return cfg


def _validate(cfg):
    p, m, s = cfg.problem, cfg.mesh, cfg.solver
    if p.kind not in PROBLEM_KINDS:
        raise ConfigError(f"[problem] kind must be one of {PROBLEM_KINDS}")
    if p.order not in (1, 2):
        raise ConfigError("[problem] order must be 1 or 2")
    if p.levels < 1:
        raise ConfigError("[problem] levels must be >= 1")
    if p.units not in UNIT_SYSTEMS:
        raise ConfigError(f"[problem] units must be one of {UNIT_SYSTEMS}")
    if p.diameter <= 0:
        raise ConfigError("[problem] diameter must be positive")
    if m.source not in MESH_SOURCES:
        raise ConfigError(f"[mesh] source must be one of {MESH_SOURCES}")
    if m.n < 1 or m.n_inner < 1 or m.n_outer < 1:
        raise ConfigError("[mesh] subdivision counts must be >= 1")
    if m.source == "msh" and not m.path:
        raise ConfigError("[mesh] path is required when source = 'msh'")
    if s.method not in ("direct", "gmres"):
        raise ConfigError("[solver] method must be 'direct' or 'gmres'")
    if s.precond not in ("ilu0", "none"):
        raise ConfigError("[solver] precond must be 'ilu0' or 'none'")
    if s.ordering not in ("nested_dissection", "colamd"):
        raise ConfigError("[solver] ordering must be 'nested_dissection' or 'colamd'")
    if not s.tol > 0 or s.restart < 1 or s.max_iter < 1:
        raise ConfigError("[solver] tol, restart and max_iter must be positive")
    if p.kind == "scattering" and not p.frequencies:
        raise ConfigError("[problem] frequencies must be non-empty for scattering")
    if p.kind == "dispersion" and (not p.omega_grid or not p.k_grid):
        raise ConfigError("[problem] omega_grid and k_grid must be non-empty for dispersion")
    cfg.params()


def loads(text, base_dir="."):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    return from_dict(data, base_dir)


def load(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise ConfigError(f"{path}: not UTF-8 text") from None
    return loads(text, base_dir=os.path.dirname(os.path.abspath(path)))


def dumps(cfg):
    return tomli_w.dumps(cfg.to_dict())
