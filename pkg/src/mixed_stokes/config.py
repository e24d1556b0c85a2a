"""Run configuration: flat ``key = value`` files with ``[section]`` headers.

Boundary data are chosen from presets::

    f = zero | constant(fx, fy)
    g = zero | normal_stress(p_in, p_out) | poiseuille_traction(p_in, p_out)
        | constant(gx, gy) | pressure(c)
    h = zero | poiseuille(p_in, p_out) | constant(hx, hy) | rotation | dilation(c)
"""
import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError

_PRESET = re.compile(r"^\s*([a-z_]+)\s*(?:\(([^)]*)\))?\s*$")


def parse_preset(text):
    m = _PRESET.match(text or "zero")
    if not m:
        raise InvalidArgumentError(f"cannot parse preset {text!r}")
    name, args = m.group(1), m.group(2)
    values = tuple(float(a) for a in args.split(",")) if args and args.strip() else ()
    return name, values


def _floats(text):
    return tuple(float(t) for t in re.split(r"[,\s]+", text.strip()) if t)


def _ints(text):
    return tuple(int(t) for t in re.split(r"[,\s]+", text.strip()) if t)


@dataclass
class Geometry:
    L: float = 2.0
    H: float = 1.0
    nx: int = 64
    ny: int = 32
    mesh_file: str = ""


@dataclass
class Physics:
    mu: float = 1.0
    f: str = "zero"
    g: str = "normal_stress(1, 0)"
    h: str = "zero"


@dataclass
class SolverOptions:
    tol: float = 1e-10
    method: str = "auto"


@dataclass
class Output:
    directory: str = "out"
    formats: tuple = ("vtk", "csv", "report")


@dataclass
class AnalysisOptions:
    quantities: tuple = ("korn3", "infsup", "lambda1")
    levels: tuple = (0, 1, 2)
    nx0: int = 8
    ny0: int = 4


@dataclass
class AsymptoticOptions:
    H_list: tuple = (0.5, 0.25, 0.125)
    ny: int = 16
    p_in: float = 1.0
    p_out: float = 0.0


@dataclass
class RunConfig:
    geometry: Geometry = field(default_factory=Geometry)
    dirichlet_tags: tuple = (3, 4)
    physics: Physics = field(default_factory=Physics)
    solver: SolverOptions = field(default_factory=SolverOptions)
    output: Output = field(default_factory=Output)
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)
    asymptotics: AsymptoticOptions = field(default_factory=AsymptoticOptions)

    # ------------------------------------------------------------ build
    def build_mesh(self):
        from .io import read_mesh_file
        from .mesh import build_rect_mesh
        g = self.geometry
        if g.mesh_file:
            return read_mesh_file(g.mesh_file)
        return build_rect_mesh(g.L, g.H, g.nx, g.ny)

    def channel(self, p_in, p_out):
        from .validation import ChannelParams
        return ChannelParams(self.geometry.L, self.geometry.H, p_in, p_out, self.physics.mu)

    def body_force(self):
        name, a = parse_preset(self.physics.f)
        if name == "zero":
            return None
        if name == "constant" and len(a) == 2:
            return lambda x: np.tile(np.array(a), (len(x), 1))
        raise InvalidArgumentError(f"unknown body-force preset {self.physics.f!r}")

    def traction(self):
        from .validation import normal_stress_bc, poiseuille_traction
        name, a = parse_preset(self.physics.g)
        if name == "zero":
            return None
        if name == "normal_stress" and len(a) == 2:
            params = self.channel(*a)
            return lambda x, n: normal_stress_bc(x, params, n)
        if name == "poiseuille_traction" and len(a) == 2:
            params = self.channel(*a)
            return lambda x, n: poiseuille_traction(x, n, params)
        if name == "pressure" and len(a) == 1:
            return lambda x, n: -a[0] * np.asarray(n)
        if name == "constant" and len(a) == 2:
            return lambda x, n: np.tile(np.array(a), (len(x), 1))
        raise InvalidArgumentError(f"unknown traction preset {self.physics.g!r}")

    def boundary_velocity(self):
        from .validation import poiseuille
        name, a = parse_preset(self.physics.h)
        if name == "zero":
            return None
        if name == "poiseuille" and len(a) == 2:
            params = self.channel(*a)
            return lambda x: poiseuille(x, params)[0]
        if name == "constant" and len(a) == 2:
            return lambda x: np.tile(np.array(a), (len(x), 1))
        if name == "rotation" and not a:
            return lambda x: np.column_stack([-x[:, 1], x[:, 0]])
        if name == "dilation" and len(a) == 1:
            return lambda x: a[0] * np.asarray(x, dtype=float)
        raise InvalidArgumentError(f"unknown boundary-velocity preset {self.physics.h!r}")

    def problem(self):
        from .mesh import partition_boundary
        from .solver import StokesProblem
        mesh = self.build_mesh()
        part = partition_boundary(mesh, self.dirichlet_tags)
        return StokesProblem(mesh, part, self.physics.mu, self.body_force(), self.traction(),
                             self.boundary_velocity())

    def validate(self):
        """Check that presets parse and a regime can be inferred."""
        self.body_force()
        self.traction()
        self.boundary_velocity()
        if self.physics.mu <= 0:
            raise InvalidArgumentError("mu must be positive")
        return self


def load_config(path=None, text=None):
    """Parse a config file (or string); missing keys keep their defaults."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path is not None:
        if not Path(path).is_file():
            raise InvalidArgumentError(f"config file {path} not found")
        cp.read(path)
    elif text is not None:
        cp.read_string(text)
    cfg = RunConfig()
    known = {"geometry", "partition", "physics", "solver", "output", "analysis", "asymptotics"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise InvalidArgumentError(f"unknown config sections: {sorted(unknown)}")
    try:
        if cp.has_section("geometry"):
            s = cp["geometry"]
            g = cfg.geometry
            cfg.geometry = Geometry(s.getfloat("L", g.L), s.getfloat("H", g.H),
                                    s.getint("nx", g.nx), s.getint("ny", g.ny),
                                    s.get("mesh", g.mesh_file))
        if cp.has_section("partition"):
            cfg.dirichlet_tags = _ints(cp["partition"].get("dirichlet", ""))
        if cp.has_section("physics"):
            s = cp["physics"]
            p = cfg.physics
            cfg.physics = Physics(s.getfloat("mu", p.mu), s.get("f", p.f), s.get("g", p.g),
                                  s.get("h", p.h))
        if cp.has_section("solver"):
            s = cp["solver"]
            cfg.solver = SolverOptions(s.getfloat("tol", cfg.solver.tol),
                                       s.get("method", cfg.solver.method))
        if cp.has_section("output"):
            s = cp["output"]
            fmts = s.get("formats")
            cfg.output = Output(s.get("directory", cfg.output.directory),
                                tuple(re.split(r"[,\s]+", fmts.strip())) if fmts else cfg.output.formats)
        if cp.has_section("analysis"):
            s = cp["analysis"]
            a = cfg.analysis
            q = s.get("quantities")
            lv = s.get("levels")
            cfg.analysis = AnalysisOptions(
                tuple(re.split(r"[,\s]+", q.strip())) if q else a.quantities,
                _ints(lv) if lv else a.levels, s.getint("nx0", a.nx0), s.getint("ny0", a.ny0))
        if cp.has_section("asymptotics"):
            s = cp["asymptotics"]
            a = cfg.asymptotics
            hl = s.get("H_list")
            cfg.asymptotics = AsymptoticOptions(_floats(hl) if hl else a.H_list,
                                                s.getint("ny", a.ny), s.getfloat("p_in", a.p_in),
                                                s.getfloat("p_out", a.p_out))
    except ValueError as exc:
        raise InvalidArgumentError(f"bad config value: {exc}") from exc
    return cfg.validate()
