"""Vectorized point/segment/triangle primitives shared by the mesh and BVH code.

All functions broadcast over leading dimensions; the last axis holds coordinates.
"""
import numpy as np

RAY_EPSILON = 1e-14


def dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", a, b)


def norm(v: np.ndarray) -> np.ndarray:
    return np.sqrt(dot(v, v))


def closest_point_on_segments(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    length2 = dot(ab, ab)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(length2 > 0, dot(p - a, ab) / length2, 0.0)
    t = np.clip(t, 0.0, 1.0)
    return a + t[..., None] * ab


def closest_point_on_triangles(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Closest point on triangle abc by Voronoi region classification."""
    ab = b - a
    ac = c - a
    ap = p - a
    bp = p - b
    cp = p - c
    d1, d2 = dot(ab, ap), dot(ac, ap)
    d3, d4 = dot(ab, bp), dot(ac, bp)
    d5, d6 = dot(ab, cp), dot(ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = d1 / (d1 - d3)
        w_ac = d2 / (d2 - d6)
        w_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        denom = 1.0 / (va + vb + vc)
        v_in = vb * denom
        w_in = vc * denom

        conditions = [
            (d1 <= 0) & (d2 <= 0),
            (d3 >= 0) & (d4 <= d3),
            (vc <= 0) & (d1 >= 0) & (d3 <= 0),
            (d6 >= 0) & (d5 <= d6),
            (vb <= 0) & (d2 >= 0) & (d6 <= 0),
            (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0),
        ]
        choices = [
            a,
            b,
            a + v_ab[..., None] * ab,
            c,
            a + w_ac[..., None] * ac,
            b + w_bc[..., None] * (c - b),
        ]
        interior = a + v_in[..., None] * ab + w_in[..., None] * ac
        shape = np.broadcast_shapes(p.shape, a.shape)
        return np.select([np.broadcast_to(cond[..., None], shape) for cond in conditions],
                         [np.broadcast_to(choice, shape) for choice in choices],
                         default=np.broadcast_to(interior, shape))


def ray_triangles(origin: np.ndarray, direction: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray,
                  t_min: float = 0.0) -> np.ndarray:
    """Ray parameter of the hit with triangle abc, or +inf (Moller-Trumbore)."""
    e1 = b - a
    e2 = c - a
    h = np.cross(direction, e2)
    det = dot(e1, h)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = 1.0 / det
        s = origin - a
        u = f * dot(s, h)
        q = np.cross(s, e1)
        v = f * dot(direction, q)
        t = f * dot(e2, q)
    hit = (np.abs(det) > RAY_EPSILON) & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > t_min)
    return np.where(hit, t, np.inf)


def solid_angles(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Signed solid angle subtended by triangle abc at p."""
    qa, qb, qc = a - p, b - p, c - p
    la, lb, lc = norm(qa), norm(qb), norm(qc)
    numer = dot(qa, np.cross(qb, qc))
    denom = la * lb * lc + dot(qa, qb) * lc + dot(qb, qc) * la + dot(qc, qa) * lb
    return 2.0 * np.arctan2(numer, denom)


def box_distance(p: np.ndarray, p_min: np.ndarray, p_max: np.ndarray) -> np.ndarray:
    u = p_min - p
    v = p - p_max
    return norm(np.maximum(np.maximum(u, v), 0.0))


def box_intersect(x: np.ndarray, v: np.ndarray, p_min: np.ndarray, p_max: np.ndarray, r_max: np.ndarray):
    """Slab test; returns (hit, t_near) for rays clipped to [0, r_max]."""
    safe = np.where(v == 0, np.copysign(1e-300, v + 0.0), v)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t0 = (p_min - x) / safe
        t1 = (p_max - x) / safe
    t_near = np.max(np.minimum(t0, t1), axis=-1)
    t_far = np.min(np.maximum(t0, t1), axis=-1)
    t_near = np.maximum(t_near, 0.0)
    t_far = np.minimum(t_far, r_max)
    return t_near <= t_far, t_near
