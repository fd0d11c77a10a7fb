//! Curve families for the leaky wire: a broken line (wedge), a wedge whose
//! corner is replaced by a tangent circular arc, and a straight line used for
//! threshold controls.
//!
//! All curves are unit-speed in the arclength `s`, symmetric under `y -> -y`
//! with `L(-s) = mirror(L(s))`, and have the asymptotes `φ = ±β` through the
//! origin. The interior region is the convex side that contains the positive
//! x-axis far from the origin.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Wedge,
    FilletedWedge,
    /// The vertical line `x = 0`; interior is `x > 0`. Only used for
    /// straight-wire threshold controls.
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub kind: CurveKind,
    /// Half-angle between the asymptotes, radians.
    pub beta: f64,
    /// Radius of the corner arc; zero for the sharp wedge.
    #[serde(default)]
    pub fillet_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasOrientation {
    /// `V = V₀` on the convex region.
    InteriorBias,
    /// `V = V₀` on the complement of the convex region.
    ExteriorBias,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    Interior,
    Exterior,
    OnCurve,
}

/// Axis-aligned box `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Aabb {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn square(x0: f64, y0: f64, side: f64) -> Self {
        Self::new(x0, x0 + side, y0, y0 + side)
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p[0] >= self.x0 - tol && p[0] <= self.x1 + tol && p[1] >= self.y0 - tol && p[1] <= self.y1 + tol
    }

    fn far_corner_dist(&self, p: Point) -> f64 {
        let dx = (p[0] - self.x0).abs().max((p[0] - self.x1).abs());
        let dy = (p[1] - self.y0).abs().max((p[1] - self.y1).abs());
        dx.hypot(dy)
    }
}

/// One C² piece of a curve, parametrized by the global arclength on
/// `[s_lo, s_hi]` (either end may be infinite).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    /// `L(s) = origin + |s - s_origin| * dir` on the side of `s_origin` given
    /// by the finite end of the range.
    Ray {
        origin: Point,
        dir: Point,
        s_origin: f64,
        s_lo: f64,
        s_hi: f64,
    },
    /// `L(s) = center + r (cos θ, sin θ)` with `θ = π - s / r`.
    Arc { center: Point, radius: f64, s_lo: f64, s_hi: f64 },
    /// `L(s) = (0, s)`.
    VerticalLine,
}

impl Piece {
    pub fn range(&self) -> (f64, f64) {
        match *self {
            Piece::Ray { s_lo, s_hi, .. } | Piece::Arc { s_lo, s_hi, .. } => (s_lo, s_hi),
            Piece::VerticalLine => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn point(&self, s: f64) -> Point {
        match *self {
            Piece::Ray { origin, dir, s_origin, .. } => {
                let t = (s - s_origin).abs();
                [origin[0] + t * dir[0], origin[1] + t * dir[1]]
            }
            Piece::Arc { center, radius, .. } => {
                let th = PI - s / radius;
                [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            }
            Piece::VerticalLine => [0.0, s],
        }
    }

    /// Unit tangent `dL/ds`.
    pub fn tangent(&self, s: f64) -> Point {
        match *self {
            Piece::Ray { dir, s_origin, s_lo, .. } => {
                if s_lo == s_origin {
                    dir
                } else {
                    [-dir[0], -dir[1]]
                }
            }
            Piece::Arc { radius, .. } => {
                let th = PI - s / radius;
                [th.sin(), -th.cos()]
            }
            Piece::VerticalLine => [0.0, 1.0],
        }
    }

    fn contains_param(&self, s: f64) -> bool {
        let (lo, hi) = self.range();
        s >= lo && s <= hi
    }

    /// Parameters where the piece crosses the vertical line `x = c`
    /// (`axis = 0`) or the horizontal line `y = c` (`axis = 1`).
    pub fn crossings(&self, axis: usize, c: f64, out: &mut Vec<f64>) {
        match *self {
            Piece::Ray { origin, dir, s_origin, s_lo, .. } => {
                if dir[axis] == 0.0 {
                    return;
                }
                let t = (c - origin[axis]) / dir[axis];
                if t >= 0.0 {
                    let s = if s_lo == s_origin { s_origin + t } else { s_origin - t };
                    out.push(s);
                }
            }
            Piece::Arc { center, radius, .. } => {
                let q = (c - center[axis]) / radius;
                if q.abs() > 1.0 {
                    return;
                }
                let (a, b) = if axis == 0 {
                    let a = q.acos();
                    (a, TAU - a)
                } else {
                    let a = q.asin();
                    (a, PI - a)
                };
                for th in [a, b] {
                    // θ = π - s/r with θ taken in (0, 2π) around π
                    let th = th.rem_euclid(TAU);
                    let s = (PI - th) * radius;
                    if self.contains_param(s) {
                        out.push(s);
                    }
                }
            }
            Piece::VerticalLine => {
                if axis == 1 {
                    out.push(c);
                }
            }
        }
    }

    /// Finite parameter window guaranteed to contain every point of the
    /// piece lying in `bx`.
    fn window(&self, bx: &Aabb) -> Option<(f64, f64)> {
        match *self {
            Piece::Ray { origin, s_origin, s_lo, s_hi, .. } => {
                let reach = bx.far_corner_dist(origin);
                if s_lo == s_origin {
                    Some((s_lo, s_hi.min(s_origin + reach)))
                } else {
                    Some((s_lo.max(s_origin - reach), s_hi))
                }
            }
            Piece::Arc { s_lo, s_hi, .. } => Some((s_lo, s_hi)),
            Piece::VerticalLine => {
                if bx.x0 <= 0.0 && bx.x1 >= 0.0 {
                    Some((bx.y0, bx.y1))
                } else {
                    None
                }
            }
        }
    }

    /// Maximal parameter intervals on which the piece lies inside `bx`.
    pub fn intervals_in_box(&self, bx: &Aabb) -> Vec<(f64, f64)> {
        let Some((lo, hi)) = self.window(bx) else {
            return Vec::new();
        };
        if hi < lo {
            return Vec::new();
        }
        let mut cuts = vec![lo, hi];
        for c in [bx.x0, bx.x1] {
            self.crossings(0, c, &mut cuts);
        }
        for c in [bx.y0, bx.y1] {
            self.crossings(1, c, &mut cuts);
        }
        cuts.retain(|&s| s >= lo && s <= hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let tol = 1e-12 * (bx.x1 - bx.x0).abs().max(1.0);
        let mut out: Vec<(f64, f64)> = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            if bx.contains(self.point(0.5 * (a + b)), tol) {
                match out.last_mut() {
                    Some(last) if last.1 == a => last.1 = b,
                    _ => out.push((a, b)),
                }
            }
        }
        out
    }

    /// Nearest point of the piece to `p`: `(distance, s)`.
    pub fn nearest(&self, p: Point) -> (f64, f64) {
        match *self {
            Piece::Ray { origin, dir, s_origin, s_lo, .. } => {
                let t = ((p[0] - origin[0]) * dir[0] + (p[1] - origin[1]) * dir[1]).max(0.0);
                let f = [origin[0] + t * dir[0], origin[1] + t * dir[1]];
                let s = if s_lo == s_origin { s_origin + t } else { s_origin - t };
                ((p[0] - f[0]).hypot(p[1] - f[1]), s)
            }
            Piece::Arc { center, radius, s_lo, s_hi } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                let rho = dx.hypot(dy);
                let th = if rho == 0.0 { PI } else { dy.atan2(dx).rem_euclid(TAU) };
                let s = (PI - th) * radius;
                if rho > 0.0 && s >= s_lo && s <= s_hi {
                    ((rho - radius).abs(), s)
                } else if rho == 0.0 {
                    (radius, 0.0_f64.clamp(s_lo, s_hi))
                } else {
                    let da = dist(p, self.point(s_lo));
                    let db = dist(p, self.point(s_hi));
                    if da < db || (da == db && s_lo.abs() <= s_hi.abs()) {
                        (da, s_lo)
                    } else {
                        (db, s_hi)
                    }
                }
            }
            Piece::VerticalLine => (p[0].abs(), p[1]),
        }
    }
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl CurveSpec {
    pub fn wedge(beta: f64) -> Result<Self> {
        Self::new(CurveKind::Wedge, beta, 0.0)
    }

    pub fn filleted(beta: f64, fillet_radius: f64) -> Result<Self> {
        Self::new(CurveKind::FilletedWedge, beta, fillet_radius)
    }

    pub fn line() -> Self {
        Self {
            kind: CurveKind::Line,
            beta: FRAC_PI_2,
            fillet_radius: 0.0,
        }
    }

    pub fn new(kind: CurveKind, beta: f64, fillet_radius: f64) -> Result<Self> {
        let c = Self { kind, beta, fillet_radius };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            CurveKind::Line => Ok(()),
            CurveKind::Wedge | CurveKind::FilletedWedge => {
                if !(self.beta > 0.0 && self.beta < FRAC_PI_2) {
                    return Err(Error::Geometry(format!("beta must lie in (0, π/2), got {}", self.beta)));
                }
                if self.kind == CurveKind::FilletedWedge && !(self.fillet_radius > 0.0 && self.fillet_radius.is_finite()) {
                    return Err(Error::Geometry(format!(
                        "fillet radius must be positive, got {}",
                        self.fillet_radius
                    )));
                }
                if self.kind == CurveKind::Wedge && self.fillet_radius != 0.0 {
                    return Err(Error::Geometry("a sharp wedge has fillet_radius = 0".into()));
                }
                Ok(())
            }
        }
    }

    /// Distance from the vertex to the arc centre, `r / sin β`.
    pub fn fillet_center(&self) -> Point {
        [self.fillet_radius / self.beta.sin(), 0.0]
    }

    /// Distance from the vertex to the tangency points along the asymptotes.
    pub fn tangent_length(&self) -> f64 {
        match self.kind {
            CurveKind::FilletedWedge => self.fillet_radius / self.beta.tan(),
            _ => 0.0,
        }
    }

    /// Arclength beyond which the curve runs exactly on its asymptotes.
    pub fn s_compact(&self) -> f64 {
        match self.kind {
            CurveKind::FilletedWedge => self.fillet_radius * (FRAC_PI_2 - self.beta),
            _ => 0.0,
        }
    }

    pub fn pieces(&self) -> Vec<Piece> {
        let (sb, cb) = self.beta.sin_cos();
        match self.kind {
            CurveKind::Wedge => vec![
                Piece::Ray {
                    origin: [0.0, 0.0],
                    dir: [cb, -sb],
                    s_origin: 0.0,
                    s_lo: f64::NEG_INFINITY,
                    s_hi: 0.0,
                },
                Piece::Ray {
                    origin: [0.0, 0.0],
                    dir: [cb, sb],
                    s_origin: 0.0,
                    s_lo: 0.0,
                    s_hi: f64::INFINITY,
                },
            ],
            CurveKind::FilletedWedge => {
                let st = self.s_compact();
                let t = self.tangent_length();
                vec![
                    Piece::Ray {
                        origin: [t * cb, -t * sb],
                        dir: [cb, -sb],
                        s_origin: -st,
                        s_lo: f64::NEG_INFINITY,
                        s_hi: -st,
                    },
                    Piece::Arc {
                        center: self.fillet_center(),
                        radius: self.fillet_radius,
                        s_lo: -st,
                        s_hi: st,
                    },
                    Piece::Ray {
                        origin: [t * cb, t * sb],
                        dir: [cb, sb],
                        s_origin: st,
                        s_lo: st,
                        s_hi: f64::INFINITY,
                    },
                ]
            }
            CurveKind::Line => vec![Piece::VerticalLine],
        }
    }

    fn piece_at(&self, s: f64) -> Piece {
        let pieces = self.pieces();
        *pieces
            .iter()
            .find(|p| p.contains_param(s))
            .unwrap_or(&pieces[pieces.len() - 1])
    }

    /// Inward unit normal (pointing into the interior region) at `L(s)`.
    pub fn inward_normal(&self, s: f64) -> Point {
        let t = self.tangent(s);
        // the interior lies to the right of the direction of increasing s
        [t[1], -t[0]]
    }

    pub fn tangent(&self, s: f64) -> Point {
        self.piece_at(s).tangent(s)
    }
}

/// `L(s)` in the unit-speed parametrization.
pub fn point_at(c: &CurveSpec, s: f64) -> Point {
    c.piece_at(s).point(s)
}

/// Distance from `pt` to the curve and the arclength of a nearest point.
/// Ties are broken towards the smaller `|s|`.
pub fn distance_to_curve(c: &CurveSpec, pt: Point) -> (f64, f64) {
    let mut best: (f64, f64) = (f64::INFINITY, 0.0);
    for piece in c.pieces() {
        let (d, s) = piece.nearest(pt);
        let tie = (d - best.0).abs() <= 1e-14 * d.max(1.0);
        if (d < best.0 && !tie) || (tie && s.abs() < best.1.abs()) {
            best = (d, s);
        }
    }
    best
}

/// `OnCurve` tolerance `1e-12 * max(1, |pt|)`.
pub fn on_curve_tolerance(pt: Point) -> f64 {
    1e-12 * pt[0].hypot(pt[1]).max(1.0)
}

pub fn classify_region(c: &CurveSpec, pt: Point) -> RegionLabel {
    let (d, _) = distance_to_curve(c, pt);
    if d <= on_curve_tolerance(pt) {
        return RegionLabel::OnCurve;
    }
    let inside = match c.kind {
        CurveKind::Line => pt[0] > 0.0,
        CurveKind::Wedge => in_open_wedge(c.beta, pt),
        CurveKind::FilletedWedge => {
            if !in_open_wedge(c.beta, pt) {
                false
            } else {
                let t = c.tangent_length();
                let chord_x = t * c.beta.cos();
                pt[0] >= chord_x || dist(pt, c.fillet_center()) < c.fillet_radius
            }
        }
    };
    if inside {
        RegionLabel::Interior
    } else {
        RegionLabel::Exterior
    }
}

fn in_open_wedge(beta: f64, pt: Point) -> bool {
    let (sb, cb) = beta.sin_cos();
    pt[0] * sb - pt[1].abs() * cb > 0.0
}

/// Length of the curve inside `bx`.
pub fn length_in_box(c: &CurveSpec, bx: &Aabb) -> f64 {
    c.pieces()
        .iter()
        .flat_map(|p| p.intervals_in_box(bx))
        .map(|(a, b)| b - a)
        .sum()
}

/// Length of `L ∩ cell`.
pub fn cell_arclength(c: &CurveSpec, cell: &Aabb) -> f64 {
    length_in_box(c, cell)
}

/// Curvature radius at `L(s)`: infinite on straight parts, the fillet radius
/// on the arc. The wedge vertex has no tangent and is rejected.
pub fn curvature_radius(c: &CurveSpec, s: f64) -> Result<f64> {
    match c.kind {
        CurveKind::Wedge if s == 0.0 => Err(Error::Corner(s)),
        CurveKind::FilletedWedge if s.abs() <= c.s_compact() => Ok(c.fillet_radius),
        _ => Ok(f64::INFINITY),
    }
}

pub fn mirror(p: Point) -> Point {
    [p[0], -p[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, SQRT_2};

    fn close(a: Point, b: Point, tol: f64) -> bool {
        dist(a, b) <= tol
    }

    #[test]
    fn wedge_points() {
        let c = CurveSpec::wedge(FRAC_PI_4).unwrap();
        assert!(close(point_at(&c, SQRT_2), [1.0, 1.0], 1e-15));
        assert_eq!(point_at(&c, 0.0), [0.0, 0.0]);
        assert!(close(point_at(&c, -SQRT_2), [1.0, -1.0], 1e-15));
    }

    #[test]
    fn fillet_rays_lie_on_asymptotes() {
        let c = CurveSpec::filleted(FRAC_PI_4, 1.0).unwrap();
        let sc = c.s_compact();
        for s in [sc + 1e-9, sc + 0.5, sc + 7.0, 100.0] {
            let p = point_at(&c, s);
            assert!((p[1] - p[0] * c.beta.tan()).abs() <= 1e-13 * p[0].abs().max(1.0), "{p:?}");
            let q = point_at(&c, -s);
            assert!((q[1] + q[0] * c.beta.tan()).abs() <= 1e-13 * q[0].abs().max(1.0));
        }
        // C¹ junction: arc end equals the tangency point
        let t = c.tangent_length();
        let tp = [t * c.beta.cos(), t * c.beta.sin()];
        assert!(close(point_at(&c, sc), tp, 1e-14));
        let arc = Piece::Arc {
            center: c.fillet_center(),
            radius: 1.0,
            s_lo: -sc,
            s_hi: sc,
        };
        assert!(close(arc.point(sc), tp, 1e-14));
        assert!(close(arc.tangent(sc), [c.beta.cos(), c.beta.sin()], 1e-14));
    }

    #[test]
    fn regions() {
        let c = CurveSpec::wedge(FRAC_PI_4).unwrap();
        assert_eq!(classify_region(&c, [2.0, 0.0]), RegionLabel::Interior);
        assert_eq!(classify_region(&c, [-1.0, 0.0]), RegionLabel::Exterior);
        assert_eq!(classify_region(&c, [1.0, 1.0]), RegionLabel::OnCurve);

        let f = CurveSpec::filleted(FRAC_PI_4, 1.0).unwrap();
        // between the vertex and the arc
        assert_eq!(classify_region(&f, [0.2, 0.0]), RegionLabel::Exterior);
        assert_eq!(classify_region(&f, [1.5, 0.0]), RegionLabel::Interior);
        let mid = point_at(&f, 0.0);
        assert!(close(mid, [SQRT_2 - 1.0, 0.0], 1e-15));
        assert_eq!(classify_region(&f, mid), RegionLabel::OnCurve);
    }

    #[test]
    fn distances() {
        let c = CurveSpec::wedge(FRAC_PI_4).unwrap();
        let (d, s) = distance_to_curve(&c, [0.0, 1.0]);
        assert!((d - SQRT_2 / 2.0).abs() < 1e-15);
        assert!((s - SQRT_2 / 2.0).abs() < 1e-15);
        // dense sampling oracle
        let brute = (0..200_001)
            .map(|i| -10.0 + 20.0 * i as f64 / 200_000.0)
            .map(|s| dist(point_at(&c, s), [0.0, 1.0]))
            .fold(f64::INFINITY, f64::min);
        assert!((brute - d).abs() < 1e-6);

        assert_eq!(distance_to_curve(&c, [0.0, 0.0]), (0.0, 0.0));
        for cs in [c, CurveSpec::filleted(FRAC_PI_3, 0.7).unwrap(), CurveSpec::line()] {
            let (d, s) = distance_to_curve(&cs, point_at(&cs, 3.7));
            assert!(d < 1e-14 && (s - 3.7).abs() < 1e-12, "{cs:?}: {d} {s}");
        }
    }

    #[test]
    fn bisector_tie_prefers_smaller_s() {
        let c = CurveSpec::wedge(FRAC_PI_4).unwrap();
        let (d, s) = distance_to_curve(&c, [3.0, 0.0]);
        assert!((d - 3.0 / SQRT_2).abs() < 1e-14);
        // both feet have |s| = 3/√2; the lower piece is visited first
        assert!((s.abs() - 3.0 / SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn cell_lengths() {
        let c = CurveSpec::wedge(FRAC_PI_4).unwrap();
        let l = cell_arclength(&c, &Aabb::square(0.0, 0.0, 1.0));
        assert!((l - SQRT_2).abs() < 1e-14, "{l}");
        assert_eq!(cell_arclength(&c, &Aabb::square(-3.0, -0.5, 1.0)), 0.0);
    }

    #[test]
    fn fillet_tiling_conserves_length() {
        let beta = FRAC_PI_4;
        let r = 1.0;
        let c = CurveSpec::filleted(beta, r).unwrap();
        let half = 10.0;
        let n = 37;
        let side = 2.0 * half / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let cell = Aabb::square(-half + i as f64 * side, -half + j as f64 * side, side);
                total += cell_arclength(&c, &cell);
            }
        }
        // closed form: arc plus two straight pieces from the tangency points to the box
        let rho_exit = if beta <= FRAC_PI_4 { half / beta.cos() } else { half / beta.sin() };
        let exact = r * (PI - 2.0 * beta) + 2.0 * (rho_exit - c.tangent_length());
        assert!((total - exact).abs() <= 1e-9 * exact, "{total} vs {exact}");
    }

    #[test]
    fn curvature() {
        let c = CurveSpec::wedge(FRAC_PI_4).unwrap();
        assert_eq!(curvature_radius(&c, 5.0).unwrap(), f64::INFINITY);
        assert!(matches!(curvature_radius(&c, 0.0), Err(Error::Corner(_))));
        let f = CurveSpec::filleted(FRAC_PI_4, 1.0).unwrap();
        assert_eq!(curvature_radius(&f, 0.0).unwrap(), 1.0);
        assert_eq!(curvature_radius(&f, 5.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn invalid_specs() {
        assert!(CurveSpec::wedge(0.0).is_err());
        assert!(CurveSpec::wedge(FRAC_PI_2).is_err());
        assert!(CurveSpec::filleted(0.5, 0.0).is_err());
    }

    #[test]
    fn inward_normals_point_inside() {
        for c in [CurveSpec::wedge(0.6).unwrap(), CurveSpec::filleted(0.6, 2.0).unwrap(), CurveSpec::line()] {
            for s in [-7.0, -1.3, -0.2, 0.3, 1.1, 9.0] {
                let p = point_at(&c, s);
                let n = c.inward_normal(s);
                let q = [p[0] + 1e-3 * n[0], p[1] + 1e-3 * n[1]];
                assert_eq!(classify_region(&c, q), RegionLabel::Interior, "{c:?} s={s}");
            }
        }
    }
}
