import numpy as np
import pytest

from galbrun2d.mesh import (Mesh, MeshError, barycentric_refine,
                            generate_square_mesh, locate_point, locate_points,
                            make_mesh, read_mesh, validate, write_mesh,
                            _min_angles_deg, _signed_areas)


@pytest.fixture(scope="module")
def mesh05():
    return generate_square_mesh(0.5, seed=0)


def test_area_sums_to_domain(mesh05):
    areas = _signed_areas(mesh05.vertices, mesh05.triangles)
    assert areas.sum() == pytest.approx(64.0, rel=1e-12)
    assert np.all(areas > 0)


def test_generation_is_deterministic():
    a = generate_square_mesh(0.5, seed=0)
    b = generate_square_mesh(0.5, seed=0)
    assert np.array_equal(a.vertices, b.vertices)
    assert np.array_equal(a.triangles, b.triangles)
    assert a.h_max == b.h_max


def test_periodic_boundary_traces_congruent():
    m = generate_square_mesh(0.25, seed=1, periodic_matching=True)
    v = m.vertices
    left = np.sort(v[np.abs(v[:, 0] + 4) < 1e-12][:, 1])
    right = np.sort(v[np.abs(v[:, 0] - 4) < 1e-12][:, 1])
    bottom = np.sort(v[np.abs(v[:, 1] + 4) < 1e-12][:, 0])
    top = np.sort(v[np.abs(v[:, 1] - 4) < 1e-12][:, 0])
    assert np.abs(left - right).max() < 1e-12
    assert np.abs(bottom - top).max() < 1e-12
    assert m.periodic_pairs is not None and len(m.periodic_pairs) > 0


@pytest.mark.parametrize("h,seed", [(1.0, 0), (0.5, 0), (0.5, 3), (0.25, 1),
                                    (0.3, 2), (0.125, 0)])
def test_generation_contract(h, seed):
    m = generate_square_mesh(h, seed=seed)
    assert m.h_max <= 1.5 * h
    assert _min_angles_deg(m.vertices, m.triangles).min() >= 15.0
    assert validate(m).ok


def test_rejects_bad_h():
    with pytest.raises(MeshError):
        generate_square_mesh(0.0)
    with pytest.raises(MeshError):
        generate_square_mesh(4.5)


# ---------------------------------------------------------------------------
# barycentric refinement
# ---------------------------------------------------------------------------

def test_barycentric_counts(mesh05):
    r = barycentric_refine(mesh05)
    assert r.n_triangles == 3 * mesh05.n_triangles
    assert r.n_vertices == mesh05.n_vertices + mesh05.n_triangles
    assert _signed_areas(r.vertices, r.triangles).sum() == pytest.approx(
        64.0, rel=1e-12)
    # input vertices are a prefix of the output vertex set
    assert np.array_equal(r.vertices[:mesh05.n_vertices], mesh05.vertices)
    assert validate(r).ok


def test_barycentric_single_triangle():
    verts = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 3.0]])
    m = make_mesh(verts, np.array([[0, 1, 2]]))
    r = barycentric_refine(m)
    assert r.n_triangles == 3
    areas = _signed_areas(r.vertices, r.triangles)
    assert np.allclose(areas, 1.0)  # each one third of area 3
    assert areas.sum() == pytest.approx(3.0, abs=1e-12)


# ---------------------------------------------------------------------------
# point location
# ---------------------------------------------------------------------------

def test_locate_centroid(mesh05):
    c = mesh05.vertices[mesh05.triangles[7]].mean(axis=0)
    t, lam = locate_point(mesh05, c)
    assert t == 7
    assert np.abs(lam - 1 / 3).max() < 1e-12


def test_locate_vertex(mesh05):
    v = mesh05.vertices[10]
    t, lam = locate_point(mesh05, v)
    assert lam.max() == pytest.approx(1.0, abs=1e-10)
    assert 10 in mesh05.triangles[t]


def test_locate_matches_bruteforce(mesh05):
    rng = np.random.default_rng(42)
    pts = rng.uniform(-4, 4, (1000, 2))
    tris, barys = locate_points(mesh05, pts)
    verts = mesh05.vertices[mesh05.triangles]
    for p, t, lam in zip(pts, tris, barys):
        # brute-force containment oracle over all triangles
        v = verts
        d = p[None, :] - v[:, 0]
        J = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        xi = (J[:, 1, 1] * d[:, 0] - J[:, 0, 1] * d[:, 1]) / det
        eta = (-J[:, 1, 0] * d[:, 0] + J[:, 0, 0] * d[:, 1]) / det
        inside = np.nonzero((xi >= -1e-10) & (eta >= -1e-10)
                            & (xi + eta <= 1 + 1e-10))[0]
        assert t in inside
        # barycentric reproduction of the point
        rec = (lam[0] * v[t, 0] + lam[1] * v[t, 1] + lam[2] * v[t, 2])
        assert np.abs(rec - p).max() < 1e-10
        assert lam.min() >= -1e-10 and lam.max() <= 1 + 1e-10


def test_locate_rejects_outside(mesh05):
    with pytest.raises(MeshError):
        locate_point(mesh05, (5.0, 0.0))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def test_validate_clean_mesh(mesh05):
    assert validate(mesh05).violations == []


def test_validate_flags_flipped_triangle(mesh05):
    bad = Mesh(vertices=mesh05.vertices.copy(),
               triangles=mesh05.triangles.copy(),
               boundary_edges=mesh05.boundary_edges.copy(),
               boundary_tags=list(mesh05.boundary_tags),
               h_max=mesh05.h_max)
    bad.triangles[4] = bad.triangles[4][[0, 2, 1]]
    rep = validate(bad)
    assert any("orientation" in v for v in rep.violations)


def test_validate_flags_dangling_edge(mesh05):
    tris = np.vstack([mesh05.triangles, mesh05.triangles[-1:]])
    bad = Mesh(vertices=mesh05.vertices.copy(), triangles=tris,
               boundary_edges=mesh05.boundary_edges.copy(),
               boundary_tags=list(mesh05.boundary_tags),
               h_max=mesh05.h_max)
    rep = validate(bad)
    assert any("conformity" in v or "area" in v for v in rep.violations)


# ---------------------------------------------------------------------------
# I/O round trip
# ---------------------------------------------------------------------------

def test_mesh_io_roundtrip(tmp_path, mesh05):
    path = tmp_path / "mesh.txt"
    write_mesh(mesh05, path)
    back = read_mesh(path)
    assert np.array_equal(back.vertices, mesh05.vertices)
    assert np.array_equal(back.triangles, mesh05.triangles)
    assert np.array_equal(back.boundary_edges, mesh05.boundary_edges)
    assert back.boundary_tags == mesh05.boundary_tags
    write_mesh(back, tmp_path / "mesh2.txt")
    assert (tmp_path / "mesh.txt").read_bytes() == (tmp_path / "mesh2.txt").read_bytes()
