import numpy as np
import pytest

from drapebench.mesh import (
    SurfacePoint,
    TriMesh,
    boundary_edges,
    cap_boundaries,
    dump_obj,
    enclosed_volume,
    face_components,
    load_obj,
    merge_meshes,
    ray_union_exit,
    surface_point_position,
)
from drapebench.primitives import capsule_mesh, icosphere, open_cylinder, unit_cube


def test_unit_cube_volume_exact():
    assert enclosed_volume(unit_cube()) == 1.0


def test_translation_invariance():
    cube = unit_cube()
    moved = cube.translated((5.0, 5.0, 5.0))
    assert abs(enclosed_volume(moved) - 1.0) < 1e-9


def test_rotation_invariance(rng):
    from drapebench import rotations as rot

    sphere = icosphere(0.5, 2)
    v0 = enclosed_volume(sphere)
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    rotated = sphere.with_vertices(rot.rotate(q, sphere.vertices))
    assert abs(enclosed_volume(rotated) - v0) / v0 < 1e-9


def test_icosphere_volume():
    v = enclosed_volume(icosphere(1.0, 4))
    exact = 4.0 * np.pi / 3.0
    assert abs(v - exact) / exact < 0.01


def test_open_mesh_volume_rejected():
    cyl = open_cylinder(0.1, 0.5)
    assert not cyl.is_watertight
    with pytest.raises(ValueError, match="cap_boundaries"):
        enclosed_volume(cyl)


def test_capped_cylinder_volume():
    cyl = open_cylinder(0.1, 0.5, 64, 6)
    capped = cap_boundaries(cyl)
    assert capped.is_watertight
    exact = np.pi * 0.1**2 * 0.5
    assert abs(enclosed_volume(capped) - exact) / exact < 0.02


def test_cap_watertight_returns_unchanged():
    cube = unit_cube()
    assert cap_boundaries(cube) is cube


def test_cap_two_holes_adds_two_fans():
    tube_a = open_cylinder(0.05, 0.2, 12, 3)
    tube_b = open_cylinder(0.07, 0.3, 12, 3).translated((1.0, 0, 0))
    two = merge_meshes([tube_a, cap_boundaries(tube_b)])
    capped = cap_boundaries(two)
    assert capped.is_watertight
    # one centroid vertex per open ring of tube_a
    assert capped.num_vertices == two.num_vertices + 2


def test_cap_rejects_non_manifold():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [0, -1, 0.2]], dtype=float)
    f = np.array([[0, 1, 2], [0, 1, 3], [0, 1, 4]])
    with pytest.raises(ValueError, match="non-manifold"):
        cap_boundaries(TriMesh(v, f))


def test_degenerate_face_rejected():
    v = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
    with pytest.raises(ValueError, match="degenerate"):
        TriMesh(v, np.array([[0, 1, 2]]))


def test_face_index_range_checked():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    with pytest.raises(ValueError):
        TriMesh(v, np.array([[0, 1, 3]]))


def test_surface_point_basics():
    cube = unit_cube()
    sp = SurfacePoint(0, np.array([1.0, 0.0, 0.0]))
    assert np.allclose(surface_point_position(cube, sp), cube.vertices[cube.faces[0, 0]])
    centroid = SurfacePoint(0, np.array([1 / 3, 1 / 3, 1 / 3]))
    expected = cube.vertices[cube.faces[0]].mean(axis=0)
    assert np.allclose(surface_point_position(cube, centroid), expected)


def test_surface_point_translation_equivariance():
    cube = unit_cube()
    sp = SurfacePoint(3, np.array([0.2, 0.5, 0.3]))
    p0 = surface_point_position(cube, sp)
    p1 = surface_point_position(cube.translated((1, 2, 3)), sp)
    assert np.allclose(p1 - p0, [1, 2, 3], atol=1e-12)


def test_surface_point_validation():
    with pytest.raises(ValueError):
        SurfacePoint(0, np.array([0.5, 0.5, 0.5]))
    with pytest.raises(ValueError):
        surface_point_position(unit_cube(), SurfacePoint(99, np.array([1.0, 0, 0])))


def test_ray_union_exit_picks_enclosing_surface():
    # Two spheres side by side; a ray from inside the first must exit the
    # first, not the far side of the second.
    a = icosphere(0.5, 2)
    b = icosphere(0.5, 2).translated((2.0, 0.0, 0.0))
    mesh = merge_meshes([a, b])
    comps = face_components(mesh)
    assert comps.max() == 1
    sp = ray_union_exit(np.zeros(3), np.array([1.0, 0.0, 0.0]), mesh, comps)
    hit = surface_point_position(mesh, sp)
    assert abs(np.linalg.norm(hit) - 0.5) < 0.02
    # From outside both: no enclosing component.
    assert ray_union_exit(np.array([-5.0, 0, 0]), np.array([1.0, 0, 0]), mesh, comps) is None


def test_ray_union_exit_overlapping_components():
    a = icosphere(0.5, 2)
    b = icosphere(0.5, 2).translated((0.4, 0.0, 0.0))
    mesh = merge_meshes([a, b])
    sp = ray_union_exit(np.zeros(3), np.array([1.0, 0.0, 0.0]), mesh)
    hit = surface_point_position(mesh, sp)
    assert abs(hit[0] - 0.9) < 0.02  # far surface of the union


def test_capsule_mesh_volume():
    cap = capsule_mesh(np.zeros(3), np.array([0.0, 0.4, 0.0]), 0.07, 24, 4, 6)
    assert cap.is_watertight
    exact = np.pi * 0.07**2 * 0.4 + 4.0 / 3.0 * np.pi * 0.07**3
    assert abs(enclosed_volume(cap) - exact) / exact < 0.02


def test_obj_round_trip():
    cube = unit_cube()
    back = load_obj(dump_obj(cube))
    assert np.abs(back.vertices - cube.vertices).max() < 1e-7
    assert np.array_equal(back.faces, cube.faces)


def test_obj_rejects_quads():
    with pytest.raises(ValueError, match="triangular"):
        load_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")


def test_boundary_edges_of_cylinder():
    cyl = open_cylinder(0.1, 0.3, 16, 4)
    edges = boundary_edges(cyl.faces)
    assert len(edges) == 32  # two rings of 16
