//! Explicit trial functions and their quadratic-form values
//! `‖∇ψ‖² + ∫V|ψ|² - α∫_L|ψ|²`, integrated in coordinates adapted to the
//! curve so no grid enters. A form value below `μ‖ψ‖²` certifies a discrete
//! eigenvalue below the threshold.
//!
//! Regions used for the log-cutoff trial:
//! * the exterior sector `β < φ < 2π - β` in polar coordinates about the
//!   vertex, plus (fillet only) the cap between the vertex and the arc;
//! * two interior strips in normal coordinates `(s, τ)` over the straight
//!   arms, `0 < τ < ρ_L(s) tan β` up to the bisector;
//! * (fillet only) the disc sector under the arc, Jacobian `1 - τ/r`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_hamiltonian, DeltaMode, Grid2D};
use crate::eigensolve::{lowest_eigenpairs, LanczosOptions};
use crate::error::{Error, Result};
use crate::geometry::{self, BiasOrientation, CurveKind, CurveSpec, Point, RegionLabel};
use crate::linalg::dot;
use crate::transverse::{classify_regime, essential_threshold, PhysicsParams, Regime};

/// `ψ = 1` for `ρ < a`, `ln(ρ/b)/ln(a/b)` for `a <= ρ < b`, 0 beyond on the
/// exterior; `e^{-α dist(x, L)} ψ(L(s(x)))` on the interior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem4Trial {
    pub a: f64,
    pub b: f64,
}

impl Theorem4Trial {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(Error::InvalidParams(format!("need 0 < a < b, got a = {a}, b = {b}")));
        }
        Ok(Self { a, b })
    }

    /// Radial profile and its derivative.
    pub fn radial(&self, rho: f64) -> (f64, f64) {
        if rho < self.a {
            (1.0, 0.0)
        } else if rho < self.b {
            let l = (self.a / self.b).ln();
            ((rho / self.b).ln() / l, 1.0 / (rho * l))
        } else {
            (0.0, 0.0)
        }
    }
}

/// `f(x) g(y)` with `f = sin(jπ(x - L)/L)` on `(L, 2L)` and `g = 1` for
/// `|y| <= 2d`, `e^{-α(|y| - 2d)}` beyond. The plateau half-width uses
/// `d = L tan β`, so the curve `|y| = x tan β` stays on the plateau over the
/// support of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WedgeProductTrial {
    pub l_len: f64,
    pub j: u32,
}

impl WedgeProductTrial {
    pub fn new(l_len: f64, j: u32) -> Result<Self> {
        if !(l_len > 0.0 && l_len.is_finite()) || j == 0 {
            return Err(Error::InvalidParams(format!("need L > 0 and j >= 1, got L = {l_len}, j = {j}")));
        }
        Ok(Self { l_len, j })
    }

    pub fn d(&self, beta: f64) -> f64 {
        self.l_len * beta.tan()
    }

    fn f(&self, x: f64) -> (f64, f64) {
        let l = self.l_len;
        if x <= l || x >= 2.0 * l {
            return (0.0, 0.0);
        }
        let k = self.j as f64 * PI / l;
        ((k * (x - l)).sin(), k * (k * (x - l)).cos())
    }

    fn g(&self, y: f64, d: f64, alpha: f64) -> (f64, f64) {
        let ay = y.abs();
        if ay <= 2.0 * d {
            (1.0, 0.0)
        } else {
            let e = (-alpha * (ay - 2.0 * d)).exp();
            (e, -alpha * e * y.signum())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Trial {
    Zero,
    Theorem4(Theorem4Trial),
    WedgeProduct(WedgeProductTrial),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Gauss-Legendre points per panel.
    pub order: usize,
    /// Panel refinement level; the resolution check compares `level` with
    /// `2 * level`.
    pub level: usize,
    /// Normal-direction cutoff in units of `1/α`.
    pub tau_max: f64,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            order: 8,
            level: 1,
            tau_max: 40.0,
        }
    }
}

/// Region split of the log-cutoff trial's form: the exterior, the interior
/// part whose foot point has `|L(s)| < a` (including the arc), and the part
/// with `a <= |L(s)| < b`. Line terms are included in the interior parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem4Parts {
    pub exterior: f64,
    pub exterior_kinetic: f64,
    pub omega1: f64,
    pub omega2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormBreakdown {
    pub kinetic: f64,
    pub potential: f64,
    pub line_term: f64,
    pub norm_sq: f64,
    pub total: f64,
    /// Relative change of the total between two quadrature levels.
    pub rel_change: f64,
    pub parts: Option<Theorem4Parts>,
}

impl FormBreakdown {
    fn zero() -> Self {
        Self {
            kinetic: 0.0,
            potential: 0.0,
            line_term: 0.0,
            norm_sq: 0.0,
            total: 0.0,
            rel_change: 0.0,
            parts: None,
        }
    }

    pub fn rayleigh_quotient(&self) -> f64 {
        self.total / self.norm_sq
    }
}

struct GaussLegendre {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl GaussLegendre {
    fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self { x, w }
    }

    /// Nodes and weights mapped to `[lo, hi]`.
    fn on(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (lo + hi);
        let r = 0.5 * (hi - lo);
        self.x.iter().zip(&self.w).map(move |(x, w)| (c + r * x, r * w))
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Split `[lo, hi]` at the given interior breakpoints, then each piece into
/// `n` equal panels.
fn panels(lo: f64, hi: f64, breaks: &[f64], n: usize) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = std::iter::once(lo)
        .chain(breaks.iter().copied().filter(|&x| x > lo && x < hi))
        .chain(std::iter::once(hi))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let step = (w[1] - w[0]) / n as f64;
        for k in 0..n {
            out.push((w[0] + k as f64 * step, if k + 1 == n { w[1] } else { w[0] + (k + 1) as f64 * step }));
        }
    }
    out
}

/// Panels in `ln ρ` of width at most `width` covering `[lo, hi]`.
fn log_panels(lo: f64, hi: f64, width: f64) -> Vec<(f64, f64)> {
    let (ulo, uhi) = (lo.ln(), hi.ln());
    let n = ((uhi - ulo) / width).ceil().max(1.0) as usize;
    panels(ulo, uhi, &[], n)
}

#[derive(Default, Clone, Copy)]
struct Sums {
    kinetic: f64,
    potential: f64,
    line: f64,
    norm: f64,
}

impl Sums {
    fn form(&self) -> f64 {
        self.kinetic + self.potential - self.line
    }
}

fn bias_split(p: &PhysicsParams, o: BiasOrientation) -> (f64, f64) {
    match o {
        BiasOrientation::InteriorBias => (p.v0, 0.0),
        BiasOrientation::ExteriorBias => (0.0, p.v0),
    }
}

fn require_wedge_family(c: &CurveSpec) -> Result<()> {
    c.validate()?;
    if c.kind == CurveKind::Line {
        return Err(Error::Geometry("trial functions need a wedge or filleted wedge".into()));
    }
    Ok(())
}

/// Normal-direction panels on `(0, upper)` for a weight `e^{-2ατ}`.
fn tau_panels(alpha: f64, upper: f64, level: usize) -> Vec<(f64, f64)> {
    let br: Vec<f64> = [0.5, 2.0, 6.0, 15.0].iter().map(|k| k / alpha).collect();
    panels(0.0, upper, &br, level)
}

fn theorem4_sums(
    t4: &Theorem4Trial,
    p: &PhysicsParams,
    c: &CurveSpec,
    o: BiasOrientation,
    q: &QuadSpec,
    level: usize,
) -> (Sums, Theorem4Parts) {
    let gl = GaussLegendre::new(q.order);
    let alpha = p.alpha;
    let (v_in, v_out) = bias_split(p, o);
    let beta = c.beta;
    let tb = beta.tan();
    let t = c.tangent_length();
    let s0 = c.s_compact();
    let tau_max = q.tau_max / alpha;
    let (a, b) = (t4.a, t4.b);
    let lw = 0.5 / level as f64;

    let mut ext = Sums::default();
    let mut om1 = Sums::default();
    let mut om2 = Sums::default();

    // exterior sector: integrand depends on ρ only, the angular integral is
    // the opening 2π - 2β
    let opening = 2.0 * PI - 2.0 * beta;
    let radial_node = |rho: f64, wr: f64, acc: &mut Sums| {
        let (g, dg) = t4.radial(rho);
        acc.kinetic += opening * dg * dg * rho * wr;
        acc.potential += opening * v_out * g * g * rho * wr;
        acc.norm += opening * g * g * rho * wr;
    };
    for (lo, hi) in panels(0.0, a, &[t], 2 * level) {
        for (rho, w) in gl.on(lo, hi) {
            radial_node(rho, w, &mut ext);
        }
    }
    for (ulo, uhi) in log_panels(a, b, lw) {
        for (u, w) in gl.on(ulo, uhi) {
            let rho = u.exp();
            radial_node(rho, w * rho, &mut ext);
        }
    }

    let fillet = c.kind == CurveKind::FilletedWedge;
    if fillet {
        // cap between the vertex and the arc, inside the wedge opening
        let r = c.fillet_radius;
        let dc = r / beta.sin();
        for (plo, phi_hi) in panels(-beta, beta, &[0.0], 2 * level) {
            for (phi, wp) in gl.on(plo, phi_hi) {
                let disc = (r * r - dc * dc * phi.sin().powi(2)).max(0.0);
                let rho_arc = dc * phi.cos() - disc.sqrt();
                for (rlo, rhi) in panels(0.0, rho_arc, &[], 2 * level) {
                    for (rho, wr) in gl.on(rlo, rhi) {
                        let (g, dg) = t4.radial(rho);
                        let w = wp * wr * rho;
                        ext.kinetic += dg * dg * w;
                        ext.potential += v_out * g * g * w;
                        ext.norm += g * g * w;
                    }
                }
            }
        }
        // disc sector under the arc
        let st = s0;
        for (slo, shi) in panels(-st, st, &[0.0], 2 * level) {
            for (s, ws) in gl.on(slo, shi) {
                let l = geometry::point_at(c, s);
                let rho_l = l[0].hypot(l[1]);
                let tan = c.tangent(s);
                let drho = (l[0] * tan[0] + l[1] * tan[1]) / rho_l;
                let (g, dg) = t4.radial(rho_l);
                for (tlo, thi) in tau_panels(alpha, r, level) {
                    for (tau, wt) in gl.on(tlo, thi) {
                        let jac = 1.0 - tau / r;
                        let e = (-2.0 * alpha * tau).exp();
                        let w = ws * wt * jac;
                        let gs = dg * drho / jac;
                        om1.kinetic += (alpha * alpha * g * g + gs * gs) * e * w;
                        om1.potential += v_in * g * g * e * w;
                        om1.norm += g * g * e * w;
                    }
                }
                om1.line += alpha * g * g * ws;
            }
        }
    }

    // straight strips, both arms; ρ_L = t + (s - s0) along an arm
    let strip_node = |s: f64, ws: f64, acc: &mut Sums| {
        let rho_l = t + (s - s0);
        let (g, dg) = t4.radial(rho_l);
        let upper = (rho_l * tb).min(tau_max);
        for (tlo, thi) in tau_panels(alpha, upper, level) {
            for (tau, wt) in gl.on(tlo, thi) {
                let e = (-2.0 * alpha * tau).exp();
                let w = 2.0 * ws * wt;
                acc.kinetic += (alpha * alpha * g * g + dg * dg) * e * w;
                acc.potential += v_in * g * g * e * w;
                acc.norm += g * g * e * w;
            }
        }
        acc.line += 2.0 * alpha * g * g * ws;
    };
    let s_a = s0 + (a - t);
    for (lo, hi) in panels(s0, s_a, &[], 4 * level) {
        for (s, w) in gl.on(lo, hi) {
            strip_node(s, w, &mut om1);
        }
    }
    for (ulo, uhi) in log_panels(a, b, lw) {
        for (u, w) in gl.on(ulo, uhi) {
            let rho_l = u.exp();
            strip_node(s0 + rho_l - t, w * rho_l, &mut om2);
        }
    }

    let mut total = Sums::default();
    for s in [&ext, &om1, &om2] {
        total.kinetic += s.kinetic;
        total.potential += s.potential;
        total.line += s.line;
        total.norm += s.norm;
    }
    (
        total,
        Theorem4Parts {
            exterior: ext.form(),
            exterior_kinetic: ext.kinetic,
            omega1: om1.form(),
            omega2: om2.form(),
        },
    )
}

fn product_sums(pt: &WedgeProductTrial, p: &PhysicsParams, c: &CurveSpec, o: BiasOrientation, q: &QuadSpec, level: usize) -> Sums {
    let gl = GaussLegendre::new(q.order);
    let alpha = p.alpha;
    let (v_in, v_out) = bias_split(p, o);
    let tb = c.beta.tan();
    let d = pt.d(c.beta);
    let l = pt.l_len;
    let mut acc = Sums::default();
    let nx = (2 * pt.j as usize).max(4) * level;
    for (xlo, xhi) in panels(l, 2.0 * l, &[], nx) {
        for (x, wx) in gl.on(xlo, xhi) {
            let (f, df) = pt.f(x);
            let y_curve = x * tb;
            let top = 2.0 * d + q.tau_max / alpha;
            let br: Vec<f64> = [2.0 * d, y_curve]
                .into_iter()
                .chain([0.5, 2.0, 6.0, 15.0].iter().map(|k| 2.0 * d + k / alpha))
                .collect();
            for (ylo, yhi) in panels(0.0, top, &br, level) {
                for (y, wy) in gl.on(ylo, yhi) {
                    let (g, dg) = pt.g(y, d, alpha);
                    let w = 2.0 * wx * wy;
                    let v = if y < y_curve { v_in } else { v_out };
                    acc.kinetic += (df * df * g * g + f * f * dg * dg) * w;
                    acc.potential += v * f * f * g * g * w;
                    acc.norm += f * f * g * g * w;
                }
            }
            let (g, _) = pt.g(y_curve, d, alpha);
            acc.line += 2.0 * alpha * f * f * g * g * wx / c.beta.cos();
        }
    }
    acc
}

fn check_trial(trial: &Trial, p: &PhysicsParams, c: &CurveSpec) -> Result<()> {
    if !(p.alpha > 0.0) {
        return Err(Error::InvalidParams("trial evaluation needs alpha > 0".into()));
    }
    match trial {
        Trial::Zero => Ok(()),
        Trial::Theorem4(t4) => {
            require_wedge_family(c)?;
            Theorem4Trial::new(t4.a, t4.b)?;
            if t4.a < c.tangent_length() * (1.0 - 1e-12) {
                return Err(Error::InvalidParams(format!(
                    "a = {} must reach the straight part of the curve (>= {})",
                    t4.a,
                    c.tangent_length()
                )));
            }
            Ok(())
        }
        Trial::WedgeProduct(pt) => {
            WedgeProductTrial::new(pt.l_len, pt.j)?;
            if c.kind != CurveKind::Wedge {
                return Err(Error::Geometry("the product trial is defined for the sharp wedge".into()));
            }
            c.validate()
        }
    }
}

/// Quadratic form, potential and line terms and `‖ψ‖²` for a trial,
/// checked between two quadrature levels.
pub fn evaluate_form(trial: &Trial, p: &PhysicsParams, c: &CurveSpec, o: BiasOrientation, quad: &QuadSpec) -> Result<FormBreakdown> {
    check_trial(trial, p, c)?;
    let run = |level: usize| -> (Sums, Option<Theorem4Parts>) {
        match trial {
            Trial::Zero => (Sums::default(), None),
            Trial::Theorem4(t4) => {
                let (s, parts) = theorem4_sums(t4, p, c, o, quad, level);
                (s, Some(parts))
            }
            Trial::WedgeProduct(pt) => (product_sums(pt, p, c, o, quad, level), None),
        }
    };
    if matches!(trial, Trial::Zero) {
        return Ok(FormBreakdown::zero());
    }
    let (coarse, _) = run(quad.level);
    let (fine, parts) = run(2 * quad.level);
    let scale = fine.kinetic + fine.potential.abs() + fine.line;
    let rel_change = if scale > 0.0 {
        (fine.form() - coarse.form()).abs() / scale
    } else {
        0.0
    };
    if rel_change > 0.01 {
        return Err(Error::Unresolved { rel_change });
    }
    Ok(FormBreakdown {
        kinetic: fine.kinetic,
        potential: fine.potential,
        line_term: fine.line,
        norm_sq: fine.norm,
        total: fine.form(),
        rel_change,
        parts,
    })
}

/// Value and gradient of a trial at a point of the plane.
pub fn trial_value_grad(trial: &Trial, p: &PhysicsParams, c: &CurveSpec, x: Point) -> (f64, Point) {
    match trial {
        Trial::Zero => (0.0, [0.0, 0.0]),
        Trial::WedgeProduct(pt) => {
            let d = pt.d(c.beta);
            let (f, df) = pt.f(x[0]);
            let (g, dg) = pt.g(x[1], d, p.alpha);
            (f * g, [df * g, f * dg])
        }
        Trial::Theorem4(t4) => {
            if geometry::classify_region(c, x) != RegionLabel::Interior {
                let rho = x[0].hypot(x[1]);
                let (g, dg) = t4.radial(rho);
                let grad = if rho > 0.0 { [dg * x[0] / rho, dg * x[1] / rho] } else { [0.0, 0.0] };
                return (g, grad);
            }
            let (dist, s) = geometry::distance_to_curve(c, x);
            let l = geometry::point_at(c, s);
            let rho_l = l[0].hypot(l[1]);
            let (g, dg) = t4.radial(rho_l);
            let e = (-p.alpha * dist).exp();
            let nrm = [(x[0] - l[0]) / dist, (x[1] - l[1]) / dist];
            let tan = c.tangent(s);
            let radius = geometry::curvature_radius(c, s).unwrap_or(f64::INFINITY);
            let jac = 1.0 - dist / radius;
            let drho = (l[0] * tan[0] + l[1] * tan[1]) / rho_l;
            let gs = dg * drho / jac;
            (
                e * g,
                [
                    e * (-p.alpha * g * nrm[0] + gs * tan[0]),
                    e * (-p.alpha * g * nrm[1] + gs * tan[1]),
                ],
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateGrid {
    pub a_values: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl CertificateGrid {
    /// `a ∈ {1, 2, 4}/α`, `b/a ∈ {e⁵, e¹⁰, e²⁰}`.
    pub fn default_for(alpha: f64) -> Self {
        Self {
            a_values: [1.0, 2.0, 4.0].iter().map(|k| k / alpha).collect(),
            ratios: [5.0_f64, 10.0, 20.0].iter().map(|k| k.exp()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub family: String,
    pub a: f64,
    pub b: f64,
    pub mu: f64,
    pub breakdown: FormBreakdown,
}

/// `total - μ‖ψ‖² <= -1e-3 max(1, |μ| ‖ψ‖²)`.
pub fn certifies(f: &FormBreakdown, mu: f64) -> bool {
    f.norm_sq > 0.0 && f.total - mu * f.norm_sq <= -1e-3 * (mu.abs() * f.norm_sq).max(1.0)
}

fn search(
    family: &str,
    p: &PhysicsParams,
    c: &CurveSpec,
    o: BiasOrientation,
    grid: &CertificateGrid,
    quad: &QuadSpec,
) -> Result<Option<Certificate>> {
    let mu = essential_threshold(p);
    let min_a = c.tangent_length();
    let pairs: Vec<(f64, f64)> = grid
        .a_values
        .iter()
        .filter(|&&a| a >= min_a * (1.0 - 1e-12))
        .flat_map(|&a| grid.ratios.iter().map(move |&r| (a, a * r)))
        .collect();
    let results: Vec<Result<FormBreakdown>> = pairs
        .par_iter()
        .map(|&(a, b)| evaluate_form(&Trial::Theorem4(Theorem4Trial::new(a, b)?), p, c, o, quad))
        .collect();
    for ((a, b), r) in pairs.into_iter().zip(results) {
        let f = r?;
        if certifies(&f, mu) {
            return Ok(Some(Certificate {
                family: family.into(),
                a,
                b,
                mu,
                breakdown: f,
            }));
        }
    }
    Ok(None)
}

fn require_zero_threshold(p: &PhysicsParams) -> Result<()> {
    let regime = classify_regime(p);
    if regime == Regime::Subcritical {
        return Err(Error::InvalidRegime {
            expected: Regime::Critical,
            actual: regime,
        });
    }
    Ok(())
}

/// Searches the `(a, b)` grid for a log-cutoff trial with negative form on
/// the sharp wedge. Critical or supercritical bias only (`μ = 0`).
pub fn theorem4_certificate(
    p: &PhysicsParams,
    c: &CurveSpec,
    o: BiasOrientation,
    grid: &CertificateGrid,
    quad: &QuadSpec,
) -> Result<Option<Certificate>> {
    require_zero_threshold(p)?;
    if c.kind != CurveKind::Wedge {
        return Err(Error::Geometry("theorem4_certificate expects a sharp wedge".into()));
    }
    search("log_cutoff_wedge", p, c, o, grid, quad)
}

/// As [`theorem4_certificate`] for the filleted wedge; grid values of `a`
/// that do not reach the straight arms are skipped.
pub fn theorem6_certificate(
    p: &PhysicsParams,
    c: &CurveSpec,
    o: BiasOrientation,
    grid: &CertificateGrid,
    quad: &QuadSpec,
) -> Result<Option<Certificate>> {
    require_zero_threshold(p)?;
    if c.kind != CurveKind::FilletedWedge {
        return Err(Error::Geometry("theorem6_certificate expects a filleted wedge".into()));
    }
    search("log_cutoff_fillet", p, c, o, grid, quad)
}

/// Left-hand side of the small-angle multiplicity condition
/// `4α⁴/(1+4dα)·(5/4 - 2/cos β) + 4α²(jπ/L)² + V₀²` with `d = tan β`, and
/// whether it is negative.
pub fn prop2_condition(alpha: f64, v0: f64, beta: f64, l_len: f64, j: u32) -> Result<(f64, bool)> {
    if !(alpha > 0.0 && v0 >= 0.0 && v0 < alpha * alpha) {
        return Err(Error::InvalidParams(format!(
            "need a subcritical bias 0 <= v0 < alpha², got alpha = {alpha}, v0 = {v0}"
        )));
    }
    if !(beta > 0.0 && beta < PI / 2.0) || !(l_len > 0.0) || j == 0 {
        return Err(Error::InvalidParams("need beta in (0, π/2), L > 0, j >= 1".into()));
    }
    let d = beta.tan();
    let a4 = alpha.powi(4);
    let k = j as f64 * PI / l_len;
    let lhs = 4.0 * a4 / (1.0 + 4.0 * d * alpha) * (1.25 - 2.0 / beta.cos()) + 4.0 * alpha * alpha * k * k + v0 * v0;
    Ok((lhs, lhs < 0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop1Report {
    /// Ground-state energy without bias.
    pub lambda0: f64,
    /// Rayleigh quotient of that ground state for the biased operator.
    pub quotient: f64,
    pub mu: f64,
    /// `μ - λ₀`: the bias the crude bound `⟨Hψ₀,ψ₀⟩ <= λ₀ + V₀` tolerates at this `μ`.
    pub vc_estimate: f64,
    /// Root of `λ₀ + V = μ(V)`, i.e. `-α² + 2α√(-λ₀)`.
    pub vc_root: f64,
    /// Share of `‖ψ₀‖²` on exterior nodes.
    pub exterior_weight: f64,
    pub certified: bool,
}

/// Rayleigh quotient of the bias-free ground state for the exterior-biased
/// operator on the same grid; certifies a discrete eigenvalue below `μ` when
/// the quotient is below it.
pub fn prop1_certificate(p: &PhysicsParams, c: &CurveSpec, h: f64, half_extent: f64, seed: u64) -> Result<Prop1Report> {
    let regime = classify_regime(p);
    if regime != Regime::Subcritical {
        return Err(Error::InvalidRegime {
            expected: Regime::Subcritical,
            actual: regime,
        });
    }
    require_wedge_family(c)?;
    let g = Grid2D::centered(half_extent, h)?;
    let free = PhysicsParams::new(p.alpha, 0.0)?;
    let o = BiasOrientation::ExteriorBias;
    let mode = DeltaMode::CellLumping;
    let a0 = assemble_hamiltonian(&free, c, o, &g, &mode)?;
    let mu0 = essential_threshold(&free);
    let opts = LanczosOptions {
        seed,
        shift_hint: Some(mu0),
        ..LanczosOptions::default()
    };
    let e = lowest_eigenpairs(&a0, 1, 1e-8, &opts)?;
    let lambda0 = e.values[0];
    if lambda0 >= mu0 {
        return Err(Error::Geometry(format!(
            "no bias-free bound state on this grid: lowest eigenvalue {lambda0} >= {mu0}"
        )));
    }
    let psi = &e.vectors[0];
    let a = assemble_hamiltonian(p, c, o, &g, &mode)?;
    let quotient = a.rayleigh_quotient(psi);
    let ext: f64 = (0..g.dim())
        .filter(|&k| geometry::classify_region(c, g.node(k)) == RegionLabel::Exterior)
        .map(|k| psi[k] * psi[k])
        .sum();
    let mu = essential_threshold(p);
    Ok(Prop1Report {
        lambda0,
        quotient,
        mu,
        vc_estimate: mu - lambda0,
        vc_root: -p.alpha * p.alpha + 2.0 * p.alpha * (-lambda0).sqrt(),
        exterior_weight: ext / dot(psi, psi),
        certified: quotient < mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    fn pp(a: f64, v: f64) -> PhysicsParams {
        PhysicsParams::new(a, v).unwrap()
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(8);
        for k in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn zero_trial() {
        let f = evaluate_form(
            &Trial::Zero,
            &pp(1.0, 1.0),
            &CurveSpec::wedge(FRAC_PI_4).unwrap(),
            BiasOrientation::InteriorBias,
            &QuadSpec::default(),
        )
        .unwrap();
        assert_eq!(f.total, 0.0);
        assert_eq!(f.norm_sq, 0.0);
    }

    #[test]
    fn prop2_example() {
        let (lhs, holds) = prop2_condition(1.0, 0.0, 0.01, 100.0, 1).unwrap();
        let oracle = 4.0 / (1.0 + 4.0 * 0.01_f64.tan()) * (1.25 - 2.0 / 0.01_f64.cos()) + 4.0 * (PI / 100.0).powi(2);
        assert!((lhs - oracle).abs() < 1e-14);
        assert!((lhs + 2.88).abs() < 0.01 && holds);
        assert!(prop2_condition(1.0, 1.0, 0.3, 10.0, 1).is_err());
        let (l3, _) = prop2_condition(1.0, 0.2, FRAC_PI_3, 10.0, 1).unwrap();
        assert!(l3.is_finite());
    }

    #[test]
    fn certificate_regimes() {
        let c = CurveSpec::wedge(FRAC_PI_4).unwrap();
        let grid = CertificateGrid::default_for(1.0);
        assert!(matches!(
            theorem4_certificate(&pp(1.0, 0.5), &c, BiasOrientation::InteriorBias, &grid, &QuadSpec::default()),
            Err(Error::InvalidRegime { .. })
        ));
        let f = CurveSpec::filleted(FRAC_PI_4, 1.0).unwrap();
        assert!(theorem4_certificate(&pp(1.0, 1.0), &f, BiasOrientation::InteriorBias, &grid, &QuadSpec::default()).is_err());
    }

    #[test]
    fn trial_rejects_a_inside_the_fillet() {
        let f = CurveSpec::filleted(FRAC_PI_4, 2.0).unwrap();
        let t = Trial::Theorem4(Theorem4Trial::new(1.0, 100.0).unwrap());
        assert!(evaluate_form(&t, &pp(1.0, 1.0), &f, BiasOrientation::InteriorBias, &QuadSpec::default()).is_err());
    }
}
