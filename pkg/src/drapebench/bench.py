"""Benchmark matrix orchestration: configuration, execution, reporting.

A run sweeps (motion x build x drape class x method) cells. Every cell is
pure given the global seed: per-cell seeds derive from the cell coordinates,
so any subset of cells, in any order or process layout, reproduces the rows
of the full sweep bit for bit.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .body import SkinnedBody, body_capsules, build_parametric_body
from .bvh import parse_bvh, write_bvh
from . import rotations as rot
from .cloth import ClothParams, simulate_sequence
from .estimates import ingest_estimates, normalize_estimate, surrogate_estimator
from .garment import DrapeClassTable, Garment, GarmentSpec, generate_garment, merge_garments
from .kinematics import (
    MotionSequence,
    Pose,
    forward_kinematics,
    procedural_motion,
    rescale_to_height,
    sequence_transforms,
)
from .markers import (
    add_marker_noise,
    marker_pair_midpoints,
    place_markers,
    reconstruct_pose_from_markers,
    track_markers,
)
from .metrics import angles_from_positions, crmse, mpjpe

CRMSE_CONVENTION = "swing_only"

_AUTO_PROFILE = {"basic": "basic_err", "fast": "fast_err", "extreme": "extreme_err"}


@dataclass(frozen=True)
class MotionSpec:
    motion_class: str
    source: str = "procedural"  # "procedural" or a BVH file path
    duration_s: float = 10.0
    fps: float = 30.0


@dataclass(frozen=True)
class MethodSpec:
    kind: str                    # marker_based | markerless_surrogate | markerless_ingest
    noise: bool = True           # marker_based: add the 5 mm gaussian noise
    profile: str = "auto"        # markerless_surrogate: error profile name
    path: str = ""               # markerless_ingest: estimate file

    def __post_init__(self):
        if self.kind not in ("marker_based", "markerless_surrogate", "markerless_ingest"):
            raise ValueError(f"unknown method kind {self.kind!r}")


@dataclass(frozen=True)
class BenchConfig:
    seed: int = 0
    motions: tuple[MotionSpec, ...] = (MotionSpec("basic"),)
    builds: tuple[str, ...] = ("female_average",)
    drape_classes: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    methods: tuple[MethodSpec, ...] = (MethodSpec("marker_based"),)
    garment_categories: tuple[str, ...] = ("tshirt", "trousers")
    cloth: dict = field(default_factory=dict)
    drape_thresholds: tuple[float, ...] | None = None
    resolution_scale: float = 1.0
    warmup_s: float = 2.0
    noise_rms_m: float = 0.005
    workers: int = 1
    output_dir: str = "bench_out"
    export_bvh: bool = False

    def __post_init__(self):
        if not (self.motions and self.builds and self.drape_classes and self.methods):
            raise ValueError("motions, builds, drape_classes and methods must be non-empty")
        object.__setattr__(self, "motions", tuple(
            m if isinstance(m, MotionSpec) else MotionSpec(**m) for m in self.motions
        ))
        object.__setattr__(self, "methods", tuple(
            m if isinstance(m, MethodSpec) else MethodSpec(**m) for m in self.methods
        ))
        object.__setattr__(self, "builds", tuple(self.builds))
        object.__setattr__(self, "drape_classes", tuple(int(c) for c in self.drape_classes))
        object.__setattr__(self, "garment_categories", tuple(self.garment_categories))
        if self.drape_thresholds is not None:
            object.__setattr__(self, "drape_thresholds", tuple(self.drape_thresholds))

    def cloth_params(self) -> ClothParams:
        return ClothParams(**self.cloth)

    def drape_table(self) -> DrapeClassTable:
        if self.drape_thresholds is None:
            return DrapeClassTable()
        return DrapeClassTable(self.drape_thresholds)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "BenchConfig":
        return BenchConfig(**json.loads(text))

    @staticmethod
    def load(path: str) -> "BenchConfig":
        with open(path) as fh:
            return BenchConfig.from_json(fh.read())

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def cell_coordinates(config: BenchConfig) -> list[tuple[MotionSpec, str, int, MethodSpec]]:
    return [
        (motion, build, drape, method)
        for motion in config.motions
        for build in config.builds
        for drape in config.drape_classes
        for method in config.methods
    ]


def cell_id(motion: MotionSpec, build: str, drape: int, method: MethodSpec) -> str:
    return f"{motion.motion_class}/{build}/{drape}/{method.kind}"


def _derive_seed(*parts) -> int:
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)


@dataclass
class CellResult:
    motion_class: str
    build: str
    drape_class: int
    method: str
    status: str = "ok"
    error: str = ""
    frames: int = 0
    drape_ratio: float = 0.0
    source_label: str = ""
    variants: dict = field(default_factory=dict)  # variant -> {mpjpe_m, crmse, crmse_deg}

    def key(self) -> tuple:
        return (self.motion_class, self.build, self.drape_class, self.method)

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "CellResult":
        return CellResult(**d)


@dataclass
class BenchmarkReport:
    cells: list[CellResult]
    metadata: dict

    @property
    def failed_cells(self) -> list[CellResult]:
        return [c for c in self.cells if c.status != "ok"]

    def body_json(self) -> str:
        """The deterministic portion of the report (no timings, no timestamps)."""
        return json.dumps([c.to_dict() for c in self.cells], sort_keys=True)


def _load_motion(config: BenchConfig, spec: MotionSpec, skeleton, build: str) -> MotionSequence:
    if spec.source == "procedural":
        seed = _derive_seed(config.seed, "motion", spec.motion_class, spec.duration_s, spec.fps)
        return procedural_motion(spec.motion_class, spec.duration_s, spec.fps, seed, skeleton)
    with open(spec.source) as fh:
        seq = parse_bvh(fh.read(), spec.motion_class)
    return rescale_to_height(seq, skeleton.rest_height())


def _build_garment(config: BenchConfig, body: SkinnedBody, drape: int) -> Garment:
    table = config.drape_table()
    pieces = [
        generate_garment(body, GarmentSpec(cat, drape, body.build_label), table, config.resolution_scale)
        for cat in config.garment_categories
    ]
    return pieces[0] if len(pieces) == 1 else merge_garments(pieces)


def _simulate_garment(config, body, garment: Garment, seq, joint_pos, joint_orient):
    sk = body.skeleton
    rest_pos, _ = forward_kinematics(sk, Pose.rest(sk))
    t_count = len(seq.frames)
    collider_frames = [
        body_capsules(sk, body.build_label, joint_positions=joint_pos[t]) for t in range(t_count)
    ]
    # Rigid pose targets: pinned vertices follow their binding joint's frame.
    pin_idx = np.nonzero(garment.pinned)[0]
    pin_joints = garment.binding_joint[pin_idx]
    v_rest = garment.mesh.vertices[pin_idx]
    local = v_rest - rest_pos[pin_joints]
    pin_frames = np.empty((t_count, len(pin_idx), 3))
    for t in range(t_count):
        q = joint_orient[t, pin_joints]
        pin_frames[t] = joint_pos[t, pin_joints] + rot.rotate(q, local)
    # Initial guess: every vertex rides its binding joint into frame 0.
    all_local = garment.mesh.vertices - rest_pos[garment.binding_joint]
    q0 = joint_orient[0, garment.binding_joint]
    initial = joint_pos[0, garment.binding_joint] + rot.rotate(q0, all_local)
    return simulate_sequence(
        garment.mesh, garment.pinned, pin_frames, collider_frames,
        config.cloth_params(), seq.fps, config.warmup_s, initial_positions=initial,
    )


def _metric_row(gt_pos, est_pos, pos_valid, gt_ang, est_ang, ang_valid) -> dict:
    value, degrees = crmse(gt_ang, est_ang, ang_valid)
    return {
        "mpjpe_m": mpjpe(gt_pos, est_pos, pos_valid),
        "crmse": value,
        "crmse_deg": degrees,
    }


def run_cell(
    config: BenchConfig, motion: MotionSpec, build: str, drape: int, method: MethodSpec,
    artifacts_dir: str | None = None,
) -> CellResult:
    """Execute one benchmark cell; deterministic given config.seed."""
    result = CellResult(motion.motion_class, build, drape, method.kind)
    cell_seed = _derive_seed(config.seed, motion.motion_class, build, drape, method.kind)
    body = build_parametric_body(build)
    sk = body.skeleton
    seq = _load_motion(config, motion, sk, build)
    joint_pos, joint_orient = sequence_transforms(seq)
    result.frames = seq.num_frames
    gt_ang, gt_ang_mask = angles_from_positions(sk, joint_pos)

    if method.kind == "marker_based":
        if config.garment_categories:
            garment = _build_garment(config, body, drape)
            result.drape_ratio = garment.drape_ratio
            cloth_states = _simulate_garment(config, body, garment, seq, joint_pos, joint_orient)
            specs = place_markers(body, garment.mesh)
            traj = track_markers(
                specs, joint_pos, joint_orient, seq.fps, cloth_states, garment.mesh.faces
            )
        else:
            # Unclothed baseline: every marker lands on skin.
            specs = place_markers(body, None)
            traj = track_markers(specs, joint_pos, joint_orient, seq.fps)
        if method.noise and config.noise_rms_m > 0:
            traj = add_marker_noise(traj, cell_seed, config.noise_rms_m)
        # Joint position estimates are the pair midpoints; the hierarchical
        # swing fit (bone lengths constrained) provides angles and BVH export.
        est_pos = marker_pair_midpoints(traj)
        est_ang, est_ang_mask = angles_from_positions(sk, est_pos)
        ang_mask = gt_ang_mask & est_ang_mask
        cloth_joints = np.zeros(sk.num_joints, dtype=bool)
        for s in specs:
            if s.target == "cloth":
                cloth_joints[s.joint] = True
        result.variants["all_markers"] = _metric_row(
            joint_pos, est_pos, None, gt_ang, est_ang, ang_mask
        )
        if cloth_joints.any():
            result.variants["cloth_only"] = _metric_row(
                joint_pos, est_pos, cloth_joints[None, :], gt_ang, est_ang,
                ang_mask & cloth_joints[None, :],
            )
        result.source_label = "virtual_markers"
        if config.export_bvh and artifacts_dir:
            est_seq = reconstruct_pose_from_markers(traj, sk, seq.motion_class)
            name = cell_id(motion, build, drape, method).replace("/", "_") + ".bvh"
            with open(os.path.join(artifacts_dir, name), "w") as fh:
                fh.write(write_bvh(est_seq))
    else:
        if method.kind == "markerless_surrogate":
            profile = method.profile
            if profile == "auto":
                profile = _AUTO_PROFILE[motion.motion_class]
            est = surrogate_estimator(seq, profile, cell_seed)
        else:
            est = ingest_estimates(method.path)
            if abs(est.fps - seq.fps) > 1e-9:
                raise ValueError(
                    f"estimate fps {est.fps} does not match motion fps {seq.fps}"
                )
        norm = normalize_estimate(est, target_height=body.height)
        t = min(len(norm.absolute), len(joint_pos))
        gt_p = joint_pos[:t]
        est_ang, est_ang_mask = angles_from_positions(sk, norm.absolute[:t], norm.valid)
        ang_mask = gt_ang_mask[:t] & est_ang_mask
        pos_valid = np.broadcast_to(norm.valid, (t, sk.num_joints))
        result.frames = t
        result.variants["absolute"] = _metric_row(
            gt_p, norm.absolute[:t], pos_valid, gt_ang[:t], est_ang, ang_mask
        )
        result.variants["root_aligned"] = _metric_row(
            gt_p - gt_p[:, :1], norm.root_aligned[:t], pos_valid, gt_ang[:t], est_ang, ang_mask
        )
        result.source_label = est.source_label
    return result


def _cell_worker(args) -> tuple[str, dict, float]:
    config, motion, build, drape, method, artifacts_dir = args
    tic = time.perf_counter()
    try:
        cell = run_cell(config, motion, build, drape, method, artifacts_dir)
    except Exception as exc:  # cell isolation: a blow-up must not kill the sweep
        cell = CellResult(
            motion.motion_class, build, drape, method.kind, status="error", error=f"{exc}"
        )
    return cell_id(motion, build, drape, method), cell.to_dict(), time.perf_counter() - tic


def run_benchmark(config: BenchConfig, artifacts_dir: str | None = None) -> BenchmarkReport:
    """Run every cell of the configured matrix.

    Cells are independent; failures are recorded per cell and the sweep
    continues. Rows are assembled in coordinate order regardless of worker
    scheduling.
    """
    coords = cell_coordinates(config)
    if config.export_bvh and artifacts_dir is None:
        artifacts_dir = config.output_dir
    if artifacts_dir:
        os.makedirs(artifacts_dir, exist_ok=True)
    jobs = [(config, m, b, d, meth, artifacts_dir) for (m, b, d, meth) in coords]
    tic = time.perf_counter()
    results: dict[str, tuple[dict, float]] = {}
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for cid, cell_dict, wall in pool.map(_cell_worker, jobs):
                results[cid] = (cell_dict, wall)
    else:
        for job in jobs:
            cid, cell_dict, wall = _cell_worker(job)
            results[cid] = (cell_dict, wall)
    cells = []
    wall_times = {}
    for m, b, d, meth in coords:
        cid = cell_id(m, b, d, meth)
        cell_dict, wall = results[cid]
        cells.append(CellResult.from_dict(cell_dict))
        wall_times[cid] = round(wall, 3)
    metadata = {
        "engine_version": __version__,
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "crmse_convention": CRMSE_CONVENTION,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "total_wall_time_s": round(time.perf_counter() - tic, 3),
        "cell_wall_times_s": wall_times,
    }
    return BenchmarkReport(cells, metadata)


# --- persistence -----------------------------------------------------------

CSV_HEADER = "motion_class,build,drape_class,method,variant,mpjpe_m,crmse,crmse_deg,frames"


def report_to_csv(report: BenchmarkReport) -> str:
    lines = [CSV_HEADER]
    for c in report.cells:
        if c.status != "ok":
            continue
        for variant in sorted(c.variants):
            row = c.variants[variant]
            lines.append(
                f"{c.motion_class},{c.build},{c.drape_class},{c.method},{variant},"
                f"{row['mpjpe_m']!r},{row['crmse']!r},{row['crmse_deg']!r},{c.frames}"
            )
    return "\n".join(lines) + "\n"


def write_report(report: BenchmarkReport, out_dir: str) -> dict[str, str]:
    """Write report.json and report.csv; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    doc = {"metadata": report.metadata, "cells": [c.to_dict() for c in report.cells]}
    paths["json"] = os.path.join(out_dir, "report.json")
    with open(paths["json"], "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
    paths["csv"] = os.path.join(out_dir, "report.csv")
    with open(paths["csv"], "w") as fh:
        fh.write(report_to_csv(report))
    return paths


def read_report(path: str) -> BenchmarkReport:
    with open(path) as fh:
        doc = json.load(fh)
    return BenchmarkReport([CellResult.from_dict(d) for d in doc["cells"]], doc["metadata"])


def emit_plot_data(report: BenchmarkReport, out_dir: str) -> list[str]:
    """One plot-ready CSV per (motion class, metric): drape class vs series.

    Columns are method:variant series; a missing cell leaves an empty field
    rather than a zero.
    """
    if not report.cells:
        raise ValueError("report has no cells to plot")
    os.makedirs(out_dir, exist_ok=True)
    motions = sorted({c.motion_class for c in report.cells})
    classes = sorted({c.drape_class for c in report.cells})
    series = sorted(
        {
            (c.method, v)
            for c in report.cells
            if c.status == "ok"
            for v in c.variants
        }
    )
    by_key = {(c.motion_class, c.drape_class, c.method): c for c in report.cells if c.status == "ok"}
    written = []
    for metric in ("mpjpe_m", "crmse_deg"):
        for motion in motions:
            lines = ["drape_class," + ",".join(f"{m}:{v}" for m, v in series)]
            for drape in classes:
                fields = [str(drape)]
                for m, v in series:
                    cell = by_key.get((motion, drape, m))
                    if cell is not None and v in cell.variants:
                        fields.append(repr(cell.variants[v][metric]))
                    else:
                        fields.append("")
                lines.append(",".join(fields))
            path = os.path.join(out_dir, f"plot_{motion}_{metric}.csv")
            with open(path, "w") as fh:
                fh.write("\n".join(lines) + "\n")
            written.append(path)
    return written
