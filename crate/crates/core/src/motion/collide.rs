//! Exact-geometry predicates on triangle meshes and polygon sets.

use nalgebra::{Point2, Point3, Vector2, Vector3};

use crate::solids::{Aabb, PolygonSet, TriMesh};

/// Closest point of triangle `abc` to `p`.
pub fn closest_point_triangle(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

pub fn segment_point_distance(a: &Point2<f64>, b: &Point2<f64>, p: &Point2<f64>) -> f64 {
    let d = b - a;
    let len2 = d.norm_squared();
    let s = if len2 > 0.0 { ((p - a).dot(&d) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (a + d * s - p).norm()
}

fn tri_aabb(t: &[Point3<f64>; 3]) -> Aabb {
    Aabb::from_points(t.iter())
}

/// Cut of triangle `t` by the plane with signed vertex distances `d`:
/// the extreme points along `dir`.
fn plane_cut(t: &[Point3<f64>; 3], d: &[f64; 3], eps: f64, dir: &Vector3<f64>) -> Option<(Point3<f64>, Point3<f64>)> {
    let mut pts: Vec<Point3<f64>> = Vec::with_capacity(3);
    for i in 0..3 {
        if d[i].abs() <= eps {
            pts.push(t[i]);
        }
    }
    for i in 0..3 {
        let j = (i + 1) % 3;
        if (d[i] > eps && d[j] < -eps) || (d[i] < -eps && d[j] > eps) {
            let s = d[i] / (d[i] - d[j]);
            pts.push(t[i] + (t[j] - t[i]) * s);
        }
    }
    let first = *pts.first()?;
    let (mut lo, mut hi) = (first, first);
    for p in &pts {
        if dir.dot(&p.coords) < dir.dot(&lo.coords) {
            lo = *p;
        }
        if dir.dot(&p.coords) > dir.dot(&hi.coords) {
            hi = *p;
        }
    }
    Some((lo, hi))
}

/// Points spanning the intersection of two triangles (segment endpoints, or
/// polygon vertices when coplanar); empty when disjoint.
pub fn triangle_intersection(a: &[Point3<f64>; 3], b: &[Point3<f64>; 3]) -> Vec<Point3<f64>> {
    if !tri_aabb(a).intersects(&tri_aabb(b)) {
        return Vec::new();
    }
    let size = tri_aabb(a).union(&tri_aabb(b)).diagonal().max(f64::MIN_POSITIVE);
    let nb = (b[1] - b[0]).cross(&(b[2] - b[0]));
    let na = (a[1] - a[0]).cross(&(a[2] - a[0]));
    let eps_b = 1e-12 * nb.norm() * size;
    let eps_a = 1e-12 * na.norm() * size;
    let da = a.map(|p| nb.dot(&(p - b[0])));
    if da.iter().all(|&d| d > eps_b) || da.iter().all(|&d| d < -eps_b) {
        return Vec::new();
    }
    let db = b.map(|p| na.dot(&(p - a[0])));
    if db.iter().all(|&d| d > eps_a) || db.iter().all(|&d| d < -eps_a) {
        return Vec::new();
    }
    if da.iter().all(|&d| d.abs() <= eps_b) {
        return coplanar_intersection(a, b, &na);
    }
    let dir = na.cross(&nb);
    let (Some((a0, a1)), Some((b0, b1))) = (plane_cut(a, &da, eps_b, &dir), plane_cut(b, &db, eps_a, &dir)) else {
        return Vec::new();
    };
    let s = |p: &Point3<f64>| dir.dot(&p.coords);
    let lo = if s(&a0) >= s(&b0) { a0 } else { b0 };
    let hi = if s(&a1) <= s(&b1) { a1 } else { b1 };
    let tol = 1e-12 * size * dir.norm();
    if s(&lo) > s(&hi) + tol {
        return Vec::new();
    }
    vec![lo, hi]
}

fn coplanar_intersection(a: &[Point3<f64>; 3], b: &[Point3<f64>; 3], n: &Vector3<f64>) -> Vec<Point3<f64>> {
    let drop = n.iamax();
    let (u, v) = match drop {
        0 => (1, 2),
        1 => (2, 0),
        _ => (0, 1),
    };
    let to2 = |p: &Point3<f64>| Point2::new(p[u], p[v]);
    let a2 = a.map(|p| to2(&p));
    let b2 = b.map(|p| to2(&p));
    let mut out = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            let (p, q) = (a2[i], a2[(i + 1) % 3]);
            let (r, s) = (b2[j], b2[(j + 1) % 3]);
            for x in segment_intersection(&p, &q, &r, &s) {
                // Lift back along the edge of `a`.
                let d = q - p;
                let t = if d.norm_squared() > 0.0 { (x - p).dot(&d) / d.norm_squared() } else { 0.0 };
                out.push(a[i] + (a[(i + 1) % 3] - a[i]) * t);
            }
        }
    }
    let inside = |p: &Point2<f64>, t: &[Point2<f64>; 3]| {
        let s = |u: &Point2<f64>, v: &Point2<f64>| cross2(&(v - u), &(p - u));
        let (s0, s1, s2) = (s(&t[0], &t[1]), s(&t[1], &t[2]), s(&t[2], &t[0]));
        (s0 >= 0.0 && s1 >= 0.0 && s2 >= 0.0) || (s0 <= 0.0 && s1 <= 0.0 && s2 <= 0.0)
    };
    for i in 0..3 {
        if inside(&a2[i], &b2) {
            out.push(a[i]);
        }
        if inside(&b2[i], &a2) {
            out.push(b[i]);
        }
    }
    out
}

fn cross2(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Intersection of two closed segments: a point, the endpoints of a shared
/// collinear piece, or nothing.
pub fn segment_intersection(p: &Point2<f64>, q: &Point2<f64>, r: &Point2<f64>, s: &Point2<f64>) -> Vec<Point2<f64>> {
    let d1 = q - p;
    let d2 = s - r;
    let denom = cross2(&d1, &d2);
    let scale = d1.norm().max(d2.norm()).max(f64::MIN_POSITIVE);
    let eps = 1e-12 * scale * scale;
    let w = r - p;
    if denom.abs() <= eps {
        if cross2(&w, &d1).abs() > eps {
            return Vec::new();
        }
        // Collinear: project onto d1.
        let len2 = d1.norm_squared();
        if len2 == 0.0 {
            return if (r - p).norm() <= 1e-12 * scale { vec![*p] } else { Vec::new() };
        }
        let t0 = w.dot(&d1) / len2;
        let t1 = (s - p).dot(&d1) / len2;
        let (lo, hi) = (t0.min(t1).max(0.0), t0.max(t1).min(1.0));
        if lo > hi {
            return Vec::new();
        }
        return vec![p + d1 * lo, p + d1 * hi];
    }
    let t = cross2(&w, &d2) / denom;
    let u = cross2(&w, &d1) / denom;
    let tol = 1e-12;
    if (-tol..=1.0 + tol).contains(&t) && (-tol..=1.0 + tol).contains(&u) {
        vec![p + d1 * t.clamp(0.0, 1.0)]
    } else {
        Vec::new()
    }
}

/// Generalised winding number of a closed mesh around `p`.
pub fn mesh_winding(mesh: &TriMesh, p: &Point3<f64>) -> f64 {
    let mut total = 0.0;
    for t in &mesh.triangles {
        let a = mesh.vertices[t[0] as usize] - p;
        let b = mesh.vertices[t[1] as usize] - p;
        let c = mesh.vertices[t[2] as usize] - p;
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
        total += 2.0 * num.atan2(den);
    }
    total / (4.0 * std::f64::consts::PI)
}

/// Winding number of a polygon set around `p`.
pub fn polygon_winding(poly: &PolygonSet, p: &Point2<f64>) -> i32 {
    let mut w = 0;
    for (a, b) in poly.edges() {
        if a.y <= p.y {
            if b.y > p.y && cross2(&(b - a), &(p - a)) > 0.0 {
                w += 1;
            }
        } else if b.y <= p.y && cross2(&(b - a), &(p - a)) < 0.0 {
            w -= 1;
        }
    }
    w
}
