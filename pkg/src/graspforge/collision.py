"""Intersection and proximity kernels on triangle meshes.

Everything is vectorized numpy. Triangle-triangle intersection uses
mutual edge-versus-triangle crossing tests plus a coplanar branch; mesh
pair queries prefilter with world-space AABBs. Inside tests use signed
ray crossings and require closed, outward-oriented surfaces.
"""

import numpy as np

from .meshio import TriMesh

# Oblique fixed direction for inside tests: avoids rays running parallel to
# the axis-aligned faces that dominate this package's geometry.
_INSIDE_DIR = np.array([0.2395795, 0.3696072, 0.8981294])
_INSIDE_DIR = _INSIDE_DIR / np.linalg.norm(_INSIDE_DIR)

_PLANE_EPS = 1e-9      # meters; coplanarity threshold against unit normals
_DET_EPS = 1e-14


def aabb_overlap(lo_a, hi_a, lo_b, hi_b, margin: float = 0.0) -> bool:
    return bool(np.all(lo_a - margin <= hi_b) and np.all(lo_b - margin <= hi_a))


def ray_triangle(origins, dirs, v0, e1, e2, t_min=1e-12, t_max=np.inf,
                 boundary: float = 1e-12):
    """Moller-Trumbore for paired rays/triangles, all shaped (..., 3).

    Returns (hit, t). boundary > 0 accepts edge hits (rendering, no holes
    between adjacent triangles); boundary < 0 demands strictly interior
    hits (crossing-parity tests).
    """
    p = np.cross(dirs, e2)
    det = np.einsum("...k,...k->...", e1, p)
    ok = np.abs(det) > _DET_EPS
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origins - v0
    u = np.einsum("...k,...k->...", tvec, p) * inv
    q = np.cross(tvec, e1)
    v = np.einsum("...k,...k->...", dirs, q) * inv
    t = np.einsum("...k,...k->...", e2, q) * inv
    hit = (
        ok
        & (u >= -boundary)
        & (v >= -boundary)
        & (u + v <= 1.0 + boundary)
        & (t >= t_min)
        & (t <= t_max)
    )
    return hit, t


def _segments_cross_triangles(p0, p1, tris, boundary=-1e-10) -> np.ndarray:
    """For paired segments (K,3)-(K,3) and triangles (K,3,3): interior crossing."""
    dirs = p1 - p0
    v0 = tris[:, 0]
    e1 = tris[:, 1] - v0
    e2 = tris[:, 2] - v0
    hit, t = ray_triangle(p0, dirs, v0, e1, e2, t_min=-np.inf, t_max=np.inf,
                          boundary=boundary)
    return hit & (t > 1e-10) & (t < 1.0 - 1e-10)


def _tri_pairs_intersect(tris_a: np.ndarray, tris_b: np.ndarray) -> np.ndarray:
    """Exact-ish intersection for paired triangles (K,3,3) each."""
    k = len(tris_a)
    if k == 0:
        return np.zeros(0, dtype=bool)
    out = np.zeros(k, dtype=bool)
    # Edges of a against b and vice versa.
    for src, dst in ((tris_a, tris_b), (tris_b, tris_a)):
        for i in range(3):
            j = (i + 1) % 3
            out |= _segments_cross_triangles(src[:, i], src[:, j], dst)
    # Coplanar contact is invisible to edge crossings: detect and test in 2D.
    n_b = np.cross(tris_b[:, 1] - tris_b[:, 0], tris_b[:, 2] - tris_b[:, 0])
    norm = np.linalg.norm(n_b, axis=1, keepdims=True)
    n_b = n_b / np.where(norm > 0, norm, 1.0)
    dist = np.einsum("kij,kj->ki", tris_a - tris_b[:, :1], n_b)
    coplanar = np.all(np.abs(dist) < _PLANE_EPS, axis=1) & ~out
    for idx in np.nonzero(coplanar)[0]:
        out[idx] = _coplanar_overlap(tris_a[idx], tris_b[idx], n_b[idx])
    return out


def _coplanar_overlap(ta, tb, normal) -> bool:
    axis = int(np.argmax(np.abs(normal)))
    keep = [i for i in range(3) if i != axis]
    a2, b2 = ta[:, keep], tb[:, keep]

    def inside(pts, tri):
        d = tri[1] - tri[0], tri[2] - tri[1], tri[0] - tri[2]
        s = []
        for k in range(3):
            edge = d[k]
            rel = pts - tri[k]
            s.append(edge[0] * rel[:, 1] - edge[1] * rel[:, 0])
        s = np.stack(s)
        return np.any(np.all(s >= -1e-15, axis=0) | np.all(s <= 1e-15, axis=0))

    if inside(a2, b2) or inside(b2, a2):
        return True

    def seg_cross(p, q, r, s):
        d1, d2 = q - p, s - r
        denom = d1[0] * d2[1] - d1[1] * d2[0]
        if abs(denom) < 1e-18:
            return False
        rel = r - p
        t = (rel[0] * d2[1] - rel[1] * d2[0]) / denom
        u = (rel[0] * d1[1] - rel[1] * d1[0]) / denom
        return 0.0 < t < 1.0 and 0.0 < u < 1.0

    for i in range(3):
        for j in range(3):
            if seg_cross(a2[i], a2[(i + 1) % 3], b2[j], b2[(j + 1) % 3]):
                return True
    return False


def _candidate_pairs(tris_a, tris_b, margin=1e-9):
    lo_a, hi_a = tris_a.min(axis=1), tris_a.max(axis=1)
    lo_b, hi_b = tris_b.min(axis=1), tris_b.max(axis=1)
    overlap = (
        np.all(lo_a[:, None] - margin <= hi_b[None, :], axis=2)
        & np.all(lo_b[None, :] - margin <= hi_a[:, None], axis=2)
    )
    return np.nonzero(overlap)


def check_mesh_collision(mesh_a: TriMesh, mesh_b: TriMesh) -> bool:
    """True iff any triangle of mesh_a intersects any triangle of mesh_b.

    Symmetric; uses a world-space AABB prefilter at mesh and triangle level.
    Surface test only: containment without surface contact is not reported
    (see meshes_collide_or_contain).
    """
    lo_a, hi_a = mesh_a.aabb()
    lo_b, hi_b = mesh_b.aabb()
    if not aabb_overlap(lo_a, hi_a, lo_b, hi_b, margin=1e-9):
        return False
    tris_a, tris_b = mesh_a.triangles, mesh_b.triangles
    ia, ib = _candidate_pairs(tris_a, tris_b)
    if len(ia) == 0:
        return False
    return bool(np.any(_tri_pairs_intersect(tris_a[ia], tris_b[ib])))


def points_in_mesh(points: np.ndarray, mesh: TriMesh) -> np.ndarray:
    """Inside test by signed ray crossings; mesh must be closed and
    outward-oriented (unions of such components count containment depth)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(points)
    if n == 0:
        return np.zeros(0, dtype=bool)
    tris = mesh.triangles
    lo, hi = mesh.aabb()
    near = np.all(points >= lo - 1e-12, axis=1) & np.all(points <= hi + 1e-12, axis=1)
    winding = np.zeros(n)
    if near.any():
        pts = points[near]
        v0 = tris[:, 0]
        e1 = tris[:, 1] - v0
        e2 = tris[:, 2] - v0
        normal_sign = np.sign(np.cross(e1, e2) @ _INSIDE_DIR)
        dirs = np.broadcast_to(_INSIDE_DIR, (len(pts), 3))
        hit, _ = ray_triangle(
            pts[:, None, :], dirs[:, None, :], v0[None], e1[None], e2[None],
            t_min=1e-10, boundary=-1e-12,
        )
        # Exiting a component crosses a triangle whose outward normal has
        # positive dot with the ray; entries pair with exits, so the signed
        # sum equals the containment depth.
        winding[near] = (hit * normal_sign[None, :]).sum(axis=1)
    return winding > 0.5


def meshes_collide_or_contain(mesh_a: TriMesh, mesh_b: TriMesh) -> bool:
    """Volume-level collision: surface intersection or containment either way.

    Containment tests every vertex so multi-component meshes (e.g. a body
    plus a handle) are handled even when only one component is swallowed.
    """
    lo_a, hi_a = mesh_a.aabb()
    lo_b, hi_b = mesh_b.aabb()
    if not aabb_overlap(lo_a, hi_a, lo_b, hi_b, margin=1e-9):
        return False
    if check_mesh_collision(mesh_a, mesh_b):
        return True
    return bool(points_in_mesh(mesh_a.vertices, mesh_b).any()
                or points_in_mesh(mesh_b.vertices, mesh_a).any())


# ---------------------------------------------------------------------------
# Segment-to-mesh closest point (grasp point extraction)
# ---------------------------------------------------------------------------

def _closest_on_segments(p0, p1, q0, q1):
    """Closest points between paired segments; returns (points_p, points_q)."""
    d1 = p1 - p0
    d2 = q1 - q0
    r = p0 - q0
    a = np.einsum("...k,...k->...", d1, d1)
    e = np.einsum("...k,...k->...", d2, d2)
    f = np.einsum("...k,...k->...", d2, r)
    c = np.einsum("...k,...k->...", d1, r)
    b = np.einsum("...k,...k->...", d1, d2)
    denom = a * e - b * b
    s = np.where(np.abs(denom) > 1e-18, (b * f - c * e) / np.where(denom == 0, 1, denom), 0.0)
    s = np.clip(s, 0.0, 1.0)
    t = np.where(e > 1e-18, (b * s + f) / np.where(e == 0, 1, e), 0.0)
    t_clipped = np.clip(t, 0.0, 1.0)
    redo = t_clipped != t
    s = np.where(redo & (a > 1e-18), np.clip((b * t_clipped - c) / np.where(a == 0, 1, a), 0.0, 1.0), s)
    t = t_clipped
    return p0 + s[..., None] * d1, q0 + t[..., None] * d2


def _project_points_on_triangles(points, tris):
    """Per-pair orthogonal projection of points onto triangle planes with an
    inside-triangle mask."""
    v0, v1, v2 = tris[:, 0], tris[:, 1], tris[:, 2]
    n = np.cross(v1 - v0, v2 - v0)
    nn = np.einsum("ij,ij->i", n, n)
    rel = points - v0
    dist = np.einsum("ij,ij->i", rel, n) / np.where(nn == 0, 1, nn)
    proj = points - dist[:, None] * n
    # Barycentric inside test
    d00 = np.einsum("ij,ij->i", v1 - v0, v1 - v0)
    d01 = np.einsum("ij,ij->i", v1 - v0, v2 - v0)
    d11 = np.einsum("ij,ij->i", v2 - v0, v2 - v0)
    pr = proj - v0
    d20 = np.einsum("ij,ij->i", pr, v1 - v0)
    d21 = np.einsum("ij,ij->i", pr, v2 - v0)
    denom = d00 * d11 - d01 * d01
    denom = np.where(np.abs(denom) < 1e-30, 1.0, denom)
    v = (d11 * d20 - d01 * d21) / denom
    w = (d00 * d21 - d01 * d20) / denom
    inside = (v >= -1e-12) & (w >= -1e-12) & (v + w <= 1.0 + 1e-12)
    return proj, inside


def closest_point_on_mesh_to_segment(mesh: TriMesh, seg_a, seg_b):
    """(surface point, distance) of the mesh point nearest to segment [a, b].

    Candidates: segment endpoints projected into triangle interiors,
    segment/plane crossings inside triangles (distance 0), and closest
    points between the segment and each triangle edge. Ties resolve
    deterministically (first candidate in a fixed enumeration).
    """
    seg_a = np.asarray(seg_a, dtype=float).reshape(3)
    seg_b = np.asarray(seg_b, dtype=float).reshape(3)
    tris = mesh.triangles
    f = len(tris)
    best_pts = np.empty((0, 3))
    best_d = np.empty(0)

    # Segment vs the three triangle edges
    for i in range(3):
        j = (i + 1) % 3
        p_on_seg, p_on_edge = _closest_on_segments(
            np.broadcast_to(seg_a, (f, 3)), np.broadcast_to(seg_b, (f, 3)),
            tris[:, i], tris[:, j])
        d = np.linalg.norm(p_on_seg - p_on_edge, axis=1)
        best_pts = np.vstack([best_pts, p_on_edge])
        best_d = np.concatenate([best_d, d])

    # Segment endpoints against triangle interiors
    for endpoint in (seg_a, seg_b):
        proj, inside = _project_points_on_triangles(np.broadcast_to(endpoint, (f, 3)), tris)
        d = np.where(inside, np.linalg.norm(proj - endpoint, axis=1), np.inf)
        best_pts = np.vstack([best_pts, proj])
        best_d = np.concatenate([best_d, d])

    # Segment crossing a triangle interior: distance zero at the crossing
    dirs = seg_b - seg_a
    v0 = tris[:, 0]
    hit, t = ray_triangle(
        np.broadcast_to(seg_a, (f, 3)), np.broadcast_to(dirs, (f, 3)),
        v0, tris[:, 1] - v0, tris[:, 2] - v0,
        t_min=0.0, t_max=1.0, boundary=1e-12)
    cross_pts = seg_a + np.clip(t, 0.0, 1.0)[:, None] * dirs
    d = np.where(hit, 0.0, np.inf)
    best_pts = np.vstack([best_pts, cross_pts])
    best_d = np.concatenate([best_d, d])

    k = int(np.argmin(best_d))
    return best_pts[k], float(best_d[k])
