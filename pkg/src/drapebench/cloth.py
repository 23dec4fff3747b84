"""Mass-spring cloth with capsule collision.

Integrator: semi-implicit Euler with fixed substeps of at most 1 ms.
Stiffness and damping constants are the dimensionless Blender-style numbers;
they map to spring constants as

    k = stiffness * vertex_mass * g0 / (strain_ref * rest_length)
    c = damping  * vertex_mass * sqrt(g0 / rest_length)

with g0 = 9.81 m/s^2 and strain_ref = 0.08, i.e. a spring of stiffness S
stretches by (strain_ref / S) of its rest length under one vertex weight.
The mapping is an engine constant; only relative comparisons are meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .body import Capsule
from .mesh import TriMesh

STANDARD_GRAVITY = 9.81
STRAIN_REF = 0.08
MAX_SUBSTEP = 1e-3
COLLISION_OFFSET = 0.003  # cloth thickness folded into the collision radius
# Linear air drag (1/s). Spring damping only acts along spring axes, so
# without drag a hanging garment swings as an undamped pendulum and a static
# scene never settles. Fabric motion in air is drag-dominated anyway.
AIR_DRAG = 4.0


class ClothSimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ClothParams:
    """Cloth material constants; defaults model woven cotton."""

    vertex_mass: float = 0.05
    stiffness_tension: float = 15.0
    stiffness_compression: float = 15.0
    stiffness_shear: float = 10.0
    stiffness_bending: float = 0.5
    damping_tension: float = 5.0
    damping_compression: float = 5.0
    damping_shear: float = 5.0
    damping_bending: float = 0.5
    gravity: float = 9.81

    def __post_init__(self):
        if self.vertex_mass <= 0:
            raise ValueError("vertex_mass must be positive")
        for name in (
            "stiffness_tension", "stiffness_compression", "stiffness_shear",
            "stiffness_bending", "damping_tension", "damping_compression",
            "damping_shear", "damping_bending", "gravity",
        ):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class SpringNetwork:
    """Structural, shear and bend spring pairs with rest lengths."""

    structural: np.ndarray       # (Es, 2) int
    structural_rest: np.ndarray  # (Es,)
    shear: np.ndarray            # (Eh, 2)
    shear_rest: np.ndarray
    bend: np.ndarray             # (Eb, 2)
    bend_rest: np.ndarray

    def __post_init__(self):
        for name in ("structural_rest", "shear_rest", "bend_rest"):
            rest = getattr(self, name)
            if len(rest) and rest.min() <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def num_springs(self) -> int:
        return len(self.structural) + len(self.shear) + len(self.bend)


@dataclass
class ClothState:
    positions: np.ndarray   # (N, 3)
    velocities: np.ndarray  # (N, 3)
    pinned: np.ndarray      # (N,) bool
    time: float = 0.0

    def copy(self) -> "ClothState":
        return ClothState(
            self.positions.copy(), self.velocities.copy(), self.pinned.copy(), self.time
        )

    @staticmethod
    def resting(mesh: TriMesh, pinned: np.ndarray | None = None) -> "ClothState":
        n = mesh.num_vertices
        return ClothState(
            mesh.vertices.copy(),
            np.zeros((n, 3)),
            np.zeros(n, dtype=bool) if pinned is None else np.asarray(pinned, dtype=bool).copy(),
        )


def build_spring_network(mesh: TriMesh, straight_threshold_deg: float = 150.0) -> SpringNetwork:
    """Derive springs from mesh topology.

    structural: unique mesh edges. shear: the opposite-vertex pair of each
    interior edge (two triangles sharing it). bend: second structural
    neighbors whose two hops are within straight_threshold_deg of collinear.
    """
    faces = mesh.faces
    edges = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    opposite = np.concatenate([faces[:, 2], faces[:, 0], faces[:, 1]])
    key = np.sort(edges, axis=1)
    uniq, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    if counts.max(initial=0) > 2:
        raise ValueError("non-manifold edge (more than two incident faces)")
    structural = uniq

    shear_pairs = []
    by_edge: dict[int, list[int]] = {}
    for row, e in enumerate(inverse):
        by_edge.setdefault(int(e), []).append(int(opposite[row]))
    for e, opp in by_edge.items():
        if len(opp) == 2 and opp[0] != opp[1]:
            shear_pairs.append(sorted(opp))
    shear = np.array(sorted(map(tuple, shear_pairs)), dtype=np.int64) if shear_pairs else np.zeros((0, 2), dtype=np.int64)

    neighbors: dict[int, set[int]] = {}
    for a, b in structural:
        neighbors.setdefault(int(a), set()).add(int(b))
        neighbors.setdefault(int(b), set()).add(int(a))
    cos_thresh = np.cos(np.deg2rad(straight_threshold_deg))
    bend_set = set()
    verts = mesh.vertices
    for v, nbrs in neighbors.items():
        nbrs = sorted(nbrs)
        for ii in range(len(nbrs)):
            for jj in range(ii + 1, len(nbrs)):
                a, b = nbrs[ii], nbrs[jj]
                da = verts[a] - verts[v]
                db = verts[b] - verts[v]
                cos_ab = float(da @ db / (np.linalg.norm(da) * np.linalg.norm(db)))
                if cos_ab < cos_thresh:  # nearly opposite directions: straight path
                    bend_set.add((a, b) if a < b else (b, a))
    bend = np.array(sorted(bend_set), dtype=np.int64) if bend_set else np.zeros((0, 2), dtype=np.int64)

    def rest(pairs):
        if len(pairs) == 0:
            return np.zeros(0)
        return np.linalg.norm(verts[pairs[:, 1]] - verts[pairs[:, 0]], axis=-1)

    return SpringNetwork(structural, rest(structural), shear, rest(shear), bend, rest(bend))


class _Solver:
    """Spring arrays and collision buffers compiled from (network, params)."""

    def __init__(self, net: SpringNetwork, params: ClothParams, num_particles: int):
        m = params.vertex_mass
        groups = []
        for pairs, rest, ks, kc, d in (
            (net.structural, net.structural_rest, params.stiffness_tension,
             params.stiffness_compression, 0.5 * (params.damping_tension + params.damping_compression)),
            (net.shear, net.shear_rest, params.stiffness_shear, params.stiffness_shear, params.damping_shear),
            (net.bend, net.bend_rest, params.stiffness_bending, params.stiffness_bending, params.damping_bending),
        ):
            if len(pairs) == 0:
                continue
            k_unit = m * STANDARD_GRAVITY / (STRAIN_REF * rest)
            c_unit = m * np.sqrt(STANDARD_GRAVITY / rest)
            groups.append((pairs, rest, ks * k_unit, kc * k_unit, d * c_unit))
        if groups:
            self.ei = np.concatenate([g[0][:, 0] for g in groups])
            self.ej = np.concatenate([g[0][:, 1] for g in groups])
            self.rest = np.concatenate([g[1] for g in groups])
            self.k_stretch = np.concatenate([np.broadcast_to(g[2], len(g[0])) for g in groups])
            self.k_compress = np.concatenate([np.broadcast_to(g[3], len(g[0])) for g in groups])
            self.damp = np.concatenate([np.broadcast_to(g[4], len(g[0])) for g in groups])
        else:
            self.ei = np.zeros(0, dtype=np.int64)
            self.ej = np.zeros(0, dtype=np.int64)
            self.rest = self.k_stretch = self.k_compress = self.damp = np.zeros(0)
        self.mass = m
        self.n = num_particles

    def forces(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        if len(self.ei) == 0:
            return np.zeros((self.n, 3))
        d = x[self.ej]
        d -= x[self.ei]
        dv = v[self.ej]
        dv -= v[self.ei]
        length = np.sqrt(np.einsum("ij,ij->i", d, d))
        np.maximum(length, 1e-12, out=length)
        stretch = length - self.rest
        k = np.where(stretch > 0.0, self.k_stretch, self.k_compress)
        v_along = np.einsum("ij,ij->i", dv, d) / length
        scalar = (k * stretch + self.damp * v_along) / length
        fvec = d
        fvec *= scalar[:, None]
        out = np.empty((self.n, 3))
        for axis in range(3):
            out[:, axis] = np.bincount(self.ei, weights=fvec[:, axis], minlength=self.n)
            out[:, axis] -= np.bincount(self.ej, weights=fvec[:, axis], minlength=self.n)
        return out


def _collision_candidates(
    x: np.ndarray,
    v: np.ndarray,
    cap_from: tuple,
    cap_to: tuple,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Flat (particle, capsule) candidate pairs valid for one frame.

    A pair is kept when the start-of-frame distance (at either capsule end
    configuration) is within reach of the frame's worst-case relative motion.
    Returns (particle_index, capsule_index) arrays.
    """
    speeds = np.sqrt(np.einsum("ij,ij->i", v, v))
    # Worst-case particle travel this frame: current velocity plus gravity,
    # plus a base allowance for spring-driven acceleration.
    margin = 0.02 + dt * speeds + STANDARD_GRAVITY * dt * dt
    part_idx = []
    cap_idx = []
    for c in range(len(cap_from[0])):
        near = None
        for cap in (cap_from, cap_to):
            p0, seg, r = cap[0][c], cap[1][c], cap[2][c]
            denom = max(float(seg @ seg), 1e-18)
            t = np.clip(((x - p0) @ seg) / denom, 0.0, 1.0)
            closest = p0 + t[:, None] * seg
            d = np.linalg.norm(x - closest, axis=-1)
            mask = d < r + margin
            near = mask if near is None else (near | mask)
            if cap_to is cap_from:
                break
        hits = np.nonzero(near)[0]
        part_idx.append(hits)
        cap_idx.append(np.full(len(hits), c, dtype=np.int64))
    if not part_idx:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(part_idx), np.concatenate(cap_idx)


def _collide_pairs(
    x: np.ndarray,
    v: np.ndarray,
    pidx: np.ndarray,
    p0: np.ndarray,
    seg: np.ndarray,
    radius: np.ndarray,
) -> None:
    """Resolve candidate pairs in one vectorized pass, in place.

    p0/seg/radius are already gathered per pair. Where a particle penetrates
    several capsules the deepest projection wins (written last, sorted by
    depth, so the result is deterministic).
    """
    pts = x[pidx]
    rel = pts - p0
    denom = np.maximum(np.einsum("ij,ij->i", seg, seg), 1e-18)
    t = np.clip(np.einsum("ij,ij->i", rel, seg) / denom, 0.0, 1.0)
    closest = p0 + t[:, None] * seg
    delta = pts - closest
    dist = np.sqrt(np.einsum("ij,ij->i", delta, delta))
    depth = radius - dist
    hit = depth > 0.0
    if not hit.any():
        return
    order = np.argsort(depth[hit], kind="stable")
    sub = pidx[hit][order]
    d = np.maximum(dist[hit][order], 1e-12)[:, None]
    n = delta[hit][order] / d
    x[sub] = closest[hit][order] + n * radius[hit][order][:, None]
    vn = np.einsum("ij,ij->i", v[sub], n)
    v[sub] = v[sub] - np.minimum(vn, 0.0)[:, None] * n


def _capsule_arrays(colliders: list[Capsule], extra: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    p0 = np.stack([c.p0 for c in colliders])
    p1 = np.stack([c.p1 for c in colliders])
    r = np.array([c.radius for c in colliders]) + extra
    return p0, p1, r


def _substep_count(dt: float) -> int:
    return max(1, int(np.ceil(dt / MAX_SUBSTEP - 1e-12)))


def _advance(
    state: ClothState,
    solver: _Solver,
    params: ClothParams,
    dt: float,
    cap_from: tuple | None,
    cap_to: tuple | None,
    pin_to: np.ndarray | None,
    frame_label: str = "",
) -> ClothState:
    """Substep the cloth by dt, lerping capsules and pin targets across substeps."""
    if cap_from is None:
        cap_from = cap_to
    if cap_to is None:
        cap_to = cap_from
    x = state.positions.copy()
    v = state.velocities.copy()
    pinned = state.pinned
    free = ~pinned
    n_sub = _substep_count(dt)
    h = dt / n_sub
    g_vec = np.array([0.0, -params.gravity, 0.0])
    pin_from = x[pinned].copy()
    pairs = None
    if cap_from is not None:
        pidx, cidx = _collision_candidates(x, v, cap_from, cap_to, dt)
        if len(pidx):
            pairs = (pidx, cidx)
    moving_caps = cap_from is not None and (cap_from is not cap_to) and (
        np.any(cap_from[0] != cap_to[0]) or np.any(cap_from[1] != cap_to[1])
    )
    if pairs is not None:
        pidx, cidx = pairs
        r_pair = cap_from[2][cidx]
        p0_a = cap_from[0][cidx]
        seg_a = cap_from[1][cidx]
        if moving_caps:
            p0_b = cap_to[0][cidx]
            seg_b = cap_to[1][cidx]
    drag = max(0.0, 1.0 - AIR_DRAG * h)
    for s in range(n_sub):
        f = solver.forces(x, v)
        v[free] += (f[free] / params.vertex_mass + g_vec) * h
        v[free] *= drag
        x[free] += v[free] * h
        alpha = (s + 1) / n_sub
        if pin_to is not None and pinned.any():
            x[pinned] = pin_from + alpha * (pin_to - pin_from)
        if pairs is not None:
            if moving_caps:
                p0 = p0_a + alpha * (p0_b - p0_a)
                seg = seg_a + alpha * (seg_b - seg_a)
            else:
                p0, seg = p0_a, seg_a
            _collide_pairs(x, v, pidx, p0, seg, r_pair)
        if not np.isfinite(x).all():
            bad = int(np.nonzero(~np.isfinite(x).all(axis=1))[0][0])
            raise ClothSimulationError(
                f"{frame_label}non-finite position for particle {bad} at substep {s}"
            )
    if pinned.any():
        v[pinned] = 0.0
    return ClothState(x, v, pinned.copy(), state.time + dt)


def step(
    state: ClothState,
    net: SpringNetwork,
    params: ClothParams,
    colliders: list[Capsule] | None = None,
    dt: float = 1.0 / 60.0,
    pin_targets: np.ndarray | None = None,
) -> ClothState:
    """Advance the cloth by dt (at most 1/60 s) using substeps of at most 1 ms.

    Colliders are held fixed for the step; pinned particles stay put unless
    pin_targets gives them destinations. Raises ClothSimulationError naming
    the first non-finite particle and the substep where it appeared.
    """
    if not 0.0 < dt <= 1.0 / 60.0 + 1e-12:
        raise ValueError("dt must be in (0, 1/60]")
    solver = _Solver(net, params, len(state.positions))
    caps = None
    if colliders:
        p0, p1, r = _capsule_arrays(colliders, COLLISION_OFFSET)
        caps = (p0, p1 - p0, r)
    return _advance(state, solver, params, dt, caps, caps, pin_targets)


def simulate_sequence(
    garment: TriMesh,
    pinned: np.ndarray,
    pin_frames: np.ndarray | None,
    collider_frames: list[list[Capsule]],
    params: ClothParams,
    fps: float,
    warmup: float = 2.0,
    initial_positions: np.ndarray | None = None,
    net: SpringNetwork | None = None,
    debug_obj_dir: str | None = None,
) -> list[ClothState]:
    """Simulate the garment over a motion and record one state per frame.

    pin_frames holds per-frame world targets for the pinned vertices, shape
    (T, n_pinned, 3); collider_frames the per-frame body capsules. The state
    is settled for `warmup` seconds of simulated time at frame 0 before
    recording begins. Deterministic for identical inputs. debug_obj_dir, when
    set, dumps every recorded frame as frame_NNNN.obj there.
    """
    pinned = np.asarray(pinned, dtype=bool)
    n_frames = len(collider_frames)
    if pin_frames is not None and len(pin_frames) != n_frames:
        raise ValueError("pin_frames and collider_frames disagree on frame count")
    if net is None:
        net = build_spring_network(garment)
    solver = _Solver(net, params, garment.num_vertices)
    state = ClothState.resting(garment, pinned)
    if initial_positions is not None:
        state.positions = np.asarray(initial_positions, dtype=float).copy()
    if pin_frames is not None:
        state.positions[pinned] = pin_frames[0]

    def caps_of(fidx):
        if not collider_frames[fidx]:
            return None
        p0, p1, r = _capsule_arrays(collider_frames[fidx], COLLISION_OFFSET)
        return (p0, p1 - p0, r)

    dt = 1.0 / fps
    warm_steps = int(np.ceil(warmup / dt))
    caps0 = caps_of(0)
    pin0 = pin_frames[0] if pin_frames is not None else None
    for _ in range(warm_steps):
        state = _advance(state, solver, params, dt, caps0, caps0, pin0, "warmup: ")
    recorded = [state.copy()]
    caps_prev = caps0
    for fidx in range(1, n_frames):
        caps_next = caps_of(fidx)
        state = _advance(
            state, solver, params, dt, caps_prev, caps_next,
            pin_frames[fidx] if pin_frames is not None else None,
            f"frame {fidx}: ",
        )
        recorded.append(state.copy())
        caps_prev = caps_next
    if debug_obj_dir is not None:
        import os

        from .mesh import dump_obj

        os.makedirs(debug_obj_dir, exist_ok=True)
        for fidx, st in enumerate(recorded):
            with open(os.path.join(debug_obj_dir, f"frame_{fidx:04d}.obj"), "w") as fh:
                fh.write(dump_obj(garment.with_vertices(st.positions)))
    return recorded


def kinetic_energy(state: ClothState, params: ClothParams) -> float:
    return float(0.5 * params.vertex_mass * np.einsum("ij,ij->", state.velocities, state.velocities))


def max_capsule_penetration(positions: np.ndarray, colliders: list[Capsule]) -> float:
    """Deepest penetration (m) of any particle into any capsule surface."""
    worst = 0.0
    for c in colliders:
        d = c.p1 - c.p0
        denom = max(float(d @ d), 1e-18)
        t = np.clip(((positions - c.p0) @ d) / denom, 0.0, 1.0)
        closest = c.p0 + t[:, None] * d[None, :]
        dist = np.linalg.norm(positions - closest, axis=-1)
        worst = max(worst, float((c.radius - dist).max()))
    return worst
