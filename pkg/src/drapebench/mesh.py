"""Triangle mesh geometry: volume, boundary capping, surface points, OBJ I/O."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TriMesh:
    """Immutable triangle mesh. Faces are counter-clockwise seen from outside."""

    vertices: np.ndarray  # (V, 3) float
    faces: np.ndarray     # (F, 3) int

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vertices must be (V, 3)")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError("faces must be (F, 3)")
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        areas = face_areas(v, f)
        if np.any(areas <= 0.0):
            bad = int(np.argmin(areas))
            raise ValueError(f"degenerate (zero-area) face {bad}")

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    @property
    def is_watertight(self) -> bool:
        return len(boundary_edges(self.faces)) == 0 and _max_edge_multiplicity(self.faces) <= 2

    def translated(self, offset) -> "TriMesh":
        return TriMesh(self.vertices + np.asarray(offset, dtype=float), self.faces)

    def with_vertices(self, vertices: np.ndarray) -> "TriMesh":
        return TriMesh(vertices, self.faces)


@dataclass(frozen=True)
class SurfacePoint:
    """Barycentric location on a mesh face; rides the mesh as it deforms."""

    face: int
    barycentric: np.ndarray  # (3,) non-negative, sums to 1

    def __post_init__(self):
        b = np.asarray(self.barycentric, dtype=float)
        object.__setattr__(self, "barycentric", b)
        if b.shape != (3,) or np.any(b < -1e-12) or abs(b.sum() - 1.0) > 1e-9:
            raise ValueError("barycentric weights must be non-negative and sum to 1")


def face_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    if len(faces) == 0:
        return np.zeros(0)
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=-1)


def _sorted_edges(faces: np.ndarray) -> np.ndarray:
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    return np.sort(e, axis=1)


def _max_edge_multiplicity(faces: np.ndarray) -> int:
    if len(faces) == 0:
        return 0
    _, counts = np.unique(_sorted_edges(faces), axis=0, return_counts=True)
    return int(counts.max())


def boundary_edges(faces: np.ndarray) -> np.ndarray:
    """Directed edges that appear in exactly one face, in face winding order."""
    if len(faces) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    directed = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    key = np.sort(directed, axis=1)
    _, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    return directed[counts[inverse] == 1]


def enclosed_volume(mesh: TriMesh) -> float:
    """Signed volume of a watertight mesh via the divergence theorem.

    Positive for outward-oriented surfaces. Vertices are re-centered on their
    mean first so translated copies of a mesh report identical volumes.
    """
    if not mesh.is_watertight:
        raise ValueError(
            "mesh is not watertight; close its boundary loops with cap_boundaries first"
        )
    v = mesh.vertices - mesh.vertices.mean(axis=0)
    a = v[mesh.faces[:, 0]]
    b = v[mesh.faces[:, 1]]
    c = v[mesh.faces[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def _boundary_loops(faces: np.ndarray) -> list[list[int]]:
    edges = boundary_edges(faces)
    if len(edges) == 0:
        return []
    nxt: dict[int, int] = {}
    for a, b in edges:
        if int(a) in nxt:
            raise ValueError("boundary is not a set of simple loops (vertex reused)")
        nxt[int(a)] = int(b)
    loops = []
    remaining = set(nxt)
    while remaining:
        start = min(remaining)
        loop = [start]
        remaining.discard(start)
        cur = nxt[start]
        while cur != start:
            if cur not in remaining:
                raise ValueError("boundary loop does not close")
            loop.append(cur)
            remaining.discard(cur)
            cur = nxt[cur]
        loops.append(loop)
    return loops


def cap_boundaries(mesh: TriMesh) -> TriMesh:
    """Close every boundary loop with a triangle fan to the loop centroid.

    Already-watertight meshes are returned unchanged. Fan triangles run
    opposite to the boundary's winding so the caps face outward.
    """
    if _max_edge_multiplicity(mesh.faces) > 2:
        raise ValueError("non-manifold edge (shared by more than two faces); cannot cap")
    loops = _boundary_loops(mesh.faces)
    if not loops:
        return mesh
    verts = [mesh.vertices]
    new_faces = []
    next_index = mesh.num_vertices
    for loop in loops:
        centroid = mesh.vertices[loop].mean(axis=0)
        verts.append(centroid[None, :])
        for a, b in zip(loop, loop[1:] + loop[:1]):
            new_faces.append([b, a, next_index])
        next_index += 1
    return TriMesh(np.concatenate(verts), np.concatenate([mesh.faces, np.array(new_faces)]))


def surface_point_position(mesh_or_vertices, sp: SurfacePoint, faces: np.ndarray | None = None) -> np.ndarray:
    """World position of a surface point on the current vertex positions.

    Accepts a TriMesh, or a raw (V, 3) vertex array plus the face array (used
    when tracking points on simulated cloth states).
    """
    if isinstance(mesh_or_vertices, TriMesh):
        vertices = mesh_or_vertices.vertices
        faces = mesh_or_vertices.faces
    else:
        vertices = np.asarray(mesh_or_vertices)
        if faces is None:
            raise ValueError("faces required when passing raw vertices")
    if not 0 <= sp.face < len(faces):
        raise ValueError(f"face index {sp.face} out of range")
    tri = vertices[faces[sp.face]]
    return sp.barycentric @ tri


def ray_hits(
    origin: np.ndarray, direction: np.ndarray, mesh: TriMesh, eps: float = 1e-12
) -> np.ndarray:
    """All ray/triangle hits as rows (t, face, u, v), unsorted.

    Moeller-Trumbore over every face, vectorized. u, v are barycentric
    coordinates of the 2nd and 3rd face vertices.
    """
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    v0 = mesh.vertices[mesh.faces[:, 0]]
    e1 = mesh.vertices[mesh.faces[:, 1]] - v0
    e2 = mesh.vertices[mesh.faces[:, 2]] - v0
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) > eps
    inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origin - v0
    u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1)
    v = (qvec @ direction) * inv_det
    t = np.einsum("ij,ij->i", e2, qvec) * inv_det
    mask = ok & (u >= -1e-9) & (v >= -1e-9) & (u + v <= 1.0 + 1e-9) & (t > eps)
    idx = np.nonzero(mask)[0]
    return np.stack([t[idx], idx.astype(float), u[idx], v[idx]], axis=-1) if len(idx) else np.zeros((0, 4))


def ray_surface_point(origin, direction, mesh: TriMesh, farthest: bool = True) -> SurfacePoint | None:
    """SurfacePoint at the nearest (or farthest) ray crossing, or None."""
    hits = ray_hits(origin, direction, mesh)
    if len(hits) == 0:
        return None
    row = hits[np.argmax(hits[:, 0])] if farthest else hits[np.argmin(hits[:, 0])]
    return _hit_to_surface_point(row)


def _hit_to_surface_point(row: np.ndarray) -> SurfacePoint:
    _, face, u, v = row
    u = min(max(u, 0.0), 1.0)
    v = min(max(v, 0.0), 1.0 - u)
    return SurfacePoint(int(face), np.array([1.0 - u - v, u, v]))


def face_components(mesh: TriMesh) -> np.ndarray:
    """Connected-component label per face (faces joined by shared vertices)."""
    parent = np.arange(mesh.num_vertices)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for f in mesh.faces:
        r0 = find(int(f[0]))
        for v in (int(f[1]), int(f[2])):
            r = find(v)
            if r != r0:
                parent[r] = r0
    labels = np.array([find(int(f[0])) for f in mesh.faces])
    _, compact = np.unique(labels, return_inverse=True)
    return compact


def ray_union_exit(
    origin, direction, mesh: TriMesh, components: np.ndarray | None = None
) -> SurfacePoint | None:
    """Where the ray leaves the union of mesh components enclosing its origin.

    Crossing parity per component decides which components contain the origin;
    the exit is the first crossing after which none of them does. Returns None
    when the origin is outside every component (the point is not covered).
    """
    hits = ray_hits(origin, direction, mesh)
    if len(hits) == 0:
        return None
    if components is None:
        components = face_components(mesh)
    comp_of_hit = components[hits[:, 1].astype(int)]
    order = np.argsort(hits[:, 0])
    # A ray through a shared triangle edge registers on both triangles; those
    # duplicates land at the same parameter on the same component and must
    # count as one crossing or the parity logic breaks.
    kept = []
    last_t: dict[int, float] = {}
    for idx in order:
        comp = int(comp_of_hit[idx])
        t = float(hits[idx, 0])
        if comp in last_t and t - last_t[comp] < 1e-9 * (1.0 + abs(t)):
            continue
        last_t[comp] = t
        kept.append(idx)
    inside: set[int] = set()
    for idx in kept:
        inside.symmetric_difference_update({int(comp_of_hit[idx])})
    if not inside:
        return None
    # `inside` now holds components with odd crossing counts = those enclosing
    # the origin. Walk forward until the ray has left all of them.
    for idx in kept:
        inside.symmetric_difference_update({int(comp_of_hit[idx])})
        if not inside:
            return _hit_to_surface_point(hits[idx])
    return _hit_to_surface_point(hits[kept[-1]])


def merge_meshes(meshes: list[TriMesh]) -> TriMesh:
    """Concatenate meshes into one (components stay topologically separate)."""
    if not meshes:
        raise ValueError("nothing to merge")
    verts = []
    faces = []
    base = 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + base)
        base += m.num_vertices
    return TriMesh(np.concatenate(verts), np.concatenate(faces))


def load_obj(text: str) -> TriMesh:
    """Parse Wavefront OBJ text (v/f records, triangles only, 1-based)."""
    verts = []
    faces = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise ValueError(f"line {lineno}: vertex needs 3 coordinates")
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            ids = [int(p.split("/")[0]) for p in parts[1:]]
            if len(ids) != 3:
                raise ValueError(f"line {lineno}: only triangular faces are supported")
            faces.append([i - 1 if i > 0 else len(verts) + i for i in ids])
    if not verts or not faces:
        raise ValueError("OBJ contains no usable geometry")
    return TriMesh(np.array(verts), np.array(faces))


def dump_obj(mesh: TriMesh) -> str:
    lines = [f"v {v[0]:.8f} {v[1]:.8f} {v[2]:.8f}" for v in mesh.vertices]
    lines += [f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}" for f in mesh.faces]
    return "\n".join(lines) + "\n"
