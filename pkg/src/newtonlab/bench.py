"""Scenes, run orchestration, and run-log serialization.

A Scene bundles a box mesh recipe, material, time stepping, and a
boundary condition family (static clamp, twist + stretch, multi-face
compression). run() steps a configured scene from t = 0 to T and
records one row per time step; logs serialize to a CSV of per-step rows
plus a JSON file with the header and summary.

The catalog contains the full-scale experiment scenes and "-desk"
variants with reduced resolution and duration that finish in seconds to
minutes; the physics parameters are shared between the two.
"""

import csv
import json
import math
import time
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from . import assembly, geometry, linesearch, materials, potential, solvers

STATIC_CLAMP = "static-clamp"
TWIST_STRETCH = "twist-stretch"
COMPRESSION = "compression"

CSV_COLUMNS = ["step", "time_s", "iterations", "alpha_min", "alpha_mean",
               "beta_final", "projected_iters", "chol_failures",
               "criterion_value", "energy", "wall_ms"]

GRAVITY = (0.0, 0.0, -9.81)


@dataclass(frozen=True)
class Scene:
    name: str
    extent: tuple
    subdivisions: tuple
    element_kind: str
    material_variant: str
    youngs_modulus: float
    poisson_ratio: float
    density: float
    dt: float
    duration: float
    boundary_kind: str
    default_bc_mode: str
    penalty: float = 0.0
    gravity: tuple = (0.0, 0.0, 0.0)
    damping: float = 0.0
    # Fraction of the box height removed by the compression trajectory
    # at t = duration (compression scenes only).
    squash: float = 0.85
    # Angular velocity [rad/s] and axial pull speed [m/s] of the moving
    # face (twist scenes only).
    twist_rate: float = 2.0 * np.pi / 3.0
    stretch_rate: float = 0.25

    @property
    def num_steps(self):
        return int(math.ceil(self.duration / self.dt - 1e-9))

    def build_mesh(self, subdivisions=None):
        return geometry.generate_box_mesh(
            self.extent, subdivisions or self.subdivisions, self.element_kind)

    def material(self):
        params = materials.MaterialParams(
            self.youngs_modulus, self.poisson_ratio, self.density)
        return materials.MaterialModel(self.material_variant, params)

    def boundary(self, mesh, bc_mode=None):
        mode = bc_mode or self.default_bc_mode
        eps = 1e-9
        lx, ly, lz = self.extent
        if self.boundary_kind == STATIC_CLAMP:
            constrained = geometry.select_in_box(
                mesh, (-eps, -eps, -eps), (eps, ly + eps, lz + eps))
            trajectory = None
        elif self.boundary_kind == TWIST_STRETCH:
            left = geometry.select_in_box(
                mesh, (-eps, -eps, -eps), (eps, ly + eps, lz + eps))
            right = geometry.select_in_box(
                mesh, (lx - eps, -eps, -eps), (lx + eps, ly + eps, lz + eps))
            constrained = geometry.VertexSet(
                np.concatenate([left.indices, right.indices]))
            rest = mesh.vertices[constrained.indices]
            moving = rest[:, 0] > 0.5 * lx
            center = np.array([0.0, 0.5 * ly, 0.5 * lz])
            rel = rest - center
            rate, stretch = self.twist_rate, self.stretch_rate

            def trajectory(t, rest=rest, moving=moving, rel=rel):
                # Right face spins about the beam axis while pulling away.
                theta = rate * t
                c, s = np.cos(theta), np.sin(theta)
                d = np.zeros_like(rest)
                d[moving, 0] = stretch * t
                d[moving, 1] = c * rel[moving, 1] - s * rel[moving, 2] - rel[moving, 1]
                d[moving, 2] = s * rel[moving, 1] + c * rel[moving, 2] - rel[moving, 2]
                return d
        elif self.boundary_kind == COMPRESSION:
            surface = geometry.VertexSet(np.concatenate([
                geometry.select_in_box(mesh, (-eps, -eps, -eps),
                                       (eps, ly + eps, lz + eps)).indices,
                geometry.select_in_box(mesh, (lx - eps, -eps, -eps),
                                       (lx + eps, ly + eps, lz + eps)).indices,
                geometry.select_in_box(mesh, (-eps, -eps, -eps),
                                       (lx + eps, eps, lz + eps)).indices,
                geometry.select_in_box(mesh, (-eps, ly - eps, -eps),
                                       (lx + eps, ly + eps, lz + eps)).indices,
                geometry.select_in_box(mesh, (-eps, -eps, -eps),
                                       (lx + eps, ly + eps, eps)).indices,
                geometry.select_in_box(mesh, (-eps, -eps, lz - eps),
                                       (lx + eps, ly + eps, lz + eps)).indices,
            ]))
            constrained = surface
            rest = mesh.vertices[constrained.indices]
            # All boundary vertices squash vertically toward the static
            # bottom face, with the amount varying linearly along x so
            # the top displacement is non-uniform.
            weight = (self.squash / self.duration) * (
                0.8 + 0.2 * rest[:, 0] / lx)

            def trajectory(t, rest=rest, weight=weight):
                d = np.zeros_like(rest)
                d[:, 2] = -np.minimum(weight * t, 0.985) * rest[:, 2]
                return d
        else:
            raise ValueError(f"unknown boundary kind {self.boundary_kind!r}")
        return potential.BoundarySpec(mode=mode, constrained=constrained,
                                      trajectory=trajectory,
                                      penalty=self.penalty)

    def build_potential(self, bc_mode=None, subdivisions=None, dt=None):
        mesh = self.build_mesh(subdivisions)
        return potential.IncrementalPotential(
            mesh, self.material(), dt or self.dt, gravity=self.gravity,
            boundary=self.boundary(mesh, bc_mode), damping=self.damping)


def scene_catalog():
    """All named scenes: the full-scale experiments plus desk variants."""
    swinging = Scene(
        name="swinging-beam", extent=(2.0, 1.0, 1.0), subdivisions=(60, 30, 30),
        element_kind=geometry.P1, material_variant=materials.STABLE_NEO_HOOKEAN,
        youngs_modulus=4e5, poisson_ratio=0.40, density=1000.0,
        dt=0.0167, duration=6.0, boundary_kind=STATIC_CLAMP,
        default_bc_mode=potential.DIRECT, gravity=GRAVITY)
    twisting = Scene(
        name="twisting-beam", extent=(2.0, 1.0, 1.0), subdivisions=(48, 24, 24),
        element_kind=geometry.P1, material_variant=materials.STABLE_NEO_HOOKEAN,
        youngs_modulus=1e7, poisson_ratio=0.49, density=1000.0,
        dt=0.0333, duration=3.0, boundary_kind=TWIST_STRETCH,
        default_bc_mode=potential.PENALTY, penalty=1e8)
    compressing = Scene(
        name="compressing-box", extent=(1.0, 1.0, 1.0), subdivisions=(30, 30, 30),
        element_kind=geometry.P1, material_variant=materials.STABLE_NEO_HOOKEAN,
        youngs_modulus=1e5, poisson_ratio=0.40, density=1000.0,
        dt=0.010, duration=6.0, boundary_kind=COMPRESSION,
        default_bc_mode=potential.PENALTY, penalty=1e10)
    scenes = [
        swinging,
        replace(swinging, name="swinging-beam-desk",
                subdivisions=(8, 4, 4), duration=2.0),
        replace(swinging, name="swinging-beam-desk-p2",
                subdivisions=(4, 2, 2), duration=1.0,
                element_kind=geometry.P2),
        twisting,
        replace(twisting, name="twisting-beam-large-dt", dt=0.333),
        replace(twisting, name="twisting-beam-desk",
                subdivisions=(8, 4, 4), duration=1.0,
                twist_rate=2.0 * np.pi),
        compressing,
        replace(compressing, name="compressing-box-desk",
                subdivisions=(6, 6, 6), duration=1.0),
    ]
    return scenes


def find_scene(name):
    for scene in scene_catalog():
        if scene.name == name:
            return scene
    raise KeyError(f"unknown scene {name!r}")


@dataclass(frozen=True)
class RunConfig:
    scene: str
    solver: str = solvers.NEWTON
    line_search: str = linesearch.ROBUST
    criterion: str = solvers.ACCELERATION_BALANCE
    tolerance: float = 1.0
    projection: str = assembly.PER_QUADRATURE_ANALYTIC
    bc_mode: Optional[str] = None
    mass_inverse: str = potential.EXACT_MASS_INVERSE
    max_iterations: int = 1000
    subdivisions: Optional[tuple] = None
    out_dir: Optional[str] = None

    def run_name(self):
        parts = [self.scene, self.solver, self.line_search,
                 f"{self.criterion}{self.tolerance:g}"]
        if self.bc_mode:
            parts.append(self.bc_mode)
        if self.subdivisions:
            parts.append("x".join(str(s) for s in self.subdivisions))
        return "_".join(parts)


@dataclass
class RunLog:
    header: dict
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([row[name] for row in self.rows])

    def write(self, directory, name):
        import pathlib
        directory = pathlib.Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{name}.csv"
        with open(csv_path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: repr(row[k]) if isinstance(row[k], float)
                                 else row[k] for k in CSV_COLUMNS})
        json_path = directory / f"{name}.json"
        with open(json_path, "w") as f:
            json.dump({"header": self.header, "summary": self.summary},
                      f, indent=2, sort_keys=True)
        return csv_path, json_path

    @classmethod
    def load(cls, csv_path, json_path):
        with open(json_path) as f:
            meta = json.load(f)
        rows = []
        with open(csv_path, newline="") as f:
            for raw in csv.DictReader(f):
                rows.append({
                    "step": int(raw["step"]),
                    "iterations": int(raw["iterations"]),
                    "projected_iters": int(raw["projected_iters"]),
                    "chol_failures": int(raw["chol_failures"]),
                    **{k: float(raw[k]) for k in CSV_COLUMNS
                       if k not in ("step", "iterations", "projected_iters",
                                    "chol_failures")},
                })
        return cls(header=meta["header"], rows=rows, summary=meta["summary"])


def _reference_force(ip):
    """Reference for the scaled-residual criterion: nodal gravity force,
    or the self-weight-equivalent force when the scene has no gravity."""
    f = ip.restrict(ip.gravity_force)
    if np.linalg.norm(f) > 0:
        return f
    return ip.restrict(ip.mass.full().diagonal() * 9.81)


def build_criterion(config, ip):
    if config.criterion == solvers.SCALED_RESIDUAL:
        return solvers.ConvergenceCriterion(
            config.criterion, config.tolerance, f_ref=_reference_force(ip))
    return solvers.ConvergenceCriterion(
        config.criterion, config.tolerance, mass_inverse=config.mass_inverse)


def run(config):
    """Execute one configured run and return its RunLog (written to
    config.out_dir when set)."""
    scene = find_scene(config.scene)
    ip = scene.build_potential(bc_mode=config.bc_mode,
                               subdivisions=config.subdivisions)
    variant = solvers.SolverVariant(config.solver,
                                    projection_mode=config.projection)
    crit = build_criterion(config, ip)
    num_steps = scene.num_steps

    header = {
        "config": {f.name: getattr(config, f.name) for f in fields(config)},
        "num_vertices": ip.mesh.num_vertices,
        "num_elements": ip.mesh.num_tets,
        "num_dofs": ip.num_dofs,
        "num_steps": num_steps,
        "dt": ip.dt,
    }
    log = RunLog(header=header)
    failure = solvers.FAIL_NONE
    for step in range(num_steps):
        t0 = time.perf_counter()
        u, report = solvers.solve_step(ip, variant, config.line_search, crit,
                                       config.max_iterations)
        wall_ms = 1000.0 * (time.perf_counter() - t0)
        alphas = [r.alpha for r in report.records]
        if report.records:
            value = report.records[-1].criterion_value
        else:
            _, value = solvers.check_convergence(crit, ip, u)
        log.rows.append({
            "step": step,
            "time_s": (step + 1) * ip.dt,
            "iterations": report.iterations,
            "alpha_min": min(alphas) if alphas else 1.0,
            "alpha_mean": float(np.mean(alphas)) if alphas else 1.0,
            "beta_final": report.records[-1].beta if report.records else 1.0,
            "projected_iters": report.projected_iterations,
            "chol_failures": report.chol_failures,
            "criterion_value": value,
            "energy": ip.energy(u),
            "wall_ms": wall_ms,
        })
        if report.failure_reason != solvers.FAIL_NONE:
            failure = report.failure_reason
            break
        ip.advance(u)
    iters = log.column("iterations")
    log.summary = {
        "steps_completed": len(log.rows) if failure == solvers.FAIL_NONE
        else len(log.rows) - 1,
        "steps_planned": num_steps,
        "total_iterations": int(iters.sum()),
        "mean_iterations_per_step": float(iters.mean()) if len(iters) else 0.0,
        "total_projected_iters": int(log.column("projected_iters").sum()),
        "total_chol_failures": int(log.column("chol_failures").sum()),
        "failure_reason": failure,
        "completed": failure == solvers.FAIL_NONE,
    }
    if config.out_dir:
        log.write(config.out_dir, config.run_name())
    return log


SWEEP_AXES = ("solver", "resolution", "tolerance", "projection", "boundary-mode")


def sweep(base, axis, values):
    """One run per axis value; failures are recorded, not raised."""
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}")
    logs = []
    for value in values:
        if axis == "solver":
            config = replace(base, solver=value)
        elif axis == "resolution":
            subs = tuple(int(s) for s in str(value).split("x"))
            config = replace(base, subdivisions=subs)
        elif axis == "tolerance":
            config = replace(base, tolerance=float(value))
        elif axis == "projection":
            config = replace(base, projection=value)
        else:
            config = replace(base, bc_mode=value)
        try:
            logs.append((value, run(config)))
        except Exception as exc:  # noqa: BLE001 - sweep isolation
            logs.append((value, exc))
    if base.out_dir:
        import pathlib
        path = pathlib.Path(base.out_dir)
        path.mkdir(parents=True, exist_ok=True)
        with open(path / f"sweep_{axis}.csv", "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow([axis, "total_iterations", "mean_iterations_per_step",
                             "completed", "failure_reason"])
            for value, log in logs:
                if isinstance(log, RunLog):
                    writer.writerow([value, log.summary["total_iterations"],
                                     log.summary["mean_iterations_per_step"],
                                     log.summary["completed"],
                                     log.summary["failure_reason"]])
                else:
                    writer.writerow([value, "", "", False, f"error: {log}"])
    return logs
