//! Finite-difference discretization of `H = -Δ + V - α δ_L` on a square box
//! with Dirichlet boundary.
//!
//! Nodes sit at `c + (i - (n-1)/2) h` in each direction, so a box centred on
//! `y = 0` is exactly mirror symmetric. The δ term is a diagonal mass
//! `-α m_k / h²` where `m_k` (units of length) is the share of curve length
//! attributed to node `k`; both modes conserve `Σ m_k = |L ∩ box|`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, Aabb, BiasOrientation, CurveSpec, Piece, Point, RegionLabel};
use crate::transverse::PhysicsParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub half_extent: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// Box centre relative to the wedge vertex.
    pub origin_offset: Point,
}

impl Grid2D {
    pub fn new(half_extent: f64, h: f64, origin_offset: Point) -> Result<Self> {
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(Error::InvalidGrid(format!("half extent must be positive, got {half_extent}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        if !(origin_offset[0].is_finite() && origin_offset[1].is_finite()) {
            return Err(Error::InvalidGrid("non-finite box offset".into()));
        }
        let q = 2.0 * half_extent / h;
        if (q - q.round()).abs() > 1e-12 * q.max(1.0) {
            return Err(Error::InvalidGrid(format!("h = {h} does not divide 2R = {}", 2.0 * half_extent)));
        }
        let cells = q.round() as usize;
        if cells < 2 {
            return Err(Error::InvalidGrid("box holds no interior node".into()));
        }
        Ok(Self {
            half_extent,
            h,
            nx: cells - 1,
            ny: cells - 1,
            origin_offset,
        })
    }

    pub fn centered(half_extent: f64, h: f64) -> Result<Self> {
        Self::new(half_extent, h, [0.0, 0.0])
    }

    pub fn dim(&self) -> usize {
        self.nx * self.ny
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin_offset[0] + (i as f64 - 0.5 * (self.nx as f64 - 1.0)) * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        self.origin_offset[1] + (j as f64 - 0.5 * (self.ny as f64 - 1.0)) * self.h
    }

    pub fn node(&self, k: usize) -> Point {
        [self.x(k % self.nx), self.y(k / self.nx)]
    }

    /// Position of grid line `big` in the full index space that includes the
    /// two Dirichlet lines (`0` and `n + 1`).
    fn line(&self, axis: usize, big: usize) -> f64 {
        let n = if axis == 0 { self.nx } else { self.ny };
        self.origin_offset[axis] + (big as f64 - 0.5 * (n as f64 + 1.0)) * self.h
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::new(
            self.line(0, 0),
            self.line(0, self.nx + 1),
            self.line(1, 0),
            self.line(1, self.ny + 1),
        )
    }

    /// True when `y -> -y` maps nodes onto nodes.
    pub fn mirror_symmetric(&self) -> bool {
        self.origin_offset[1] == 0.0
    }

    pub fn mirror_index(&self, k: usize) -> usize {
        let (i, j) = (k % self.nx, k / self.nx);
        self.index(i, self.ny - 1 - j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeltaMode {
    /// Curve length inside each cell is shared among the cell's four corners
    /// with bilinear weights.
    CellLumping,
    /// Each curve element is spread over nearby nodes by a discrete Gaussian
    /// of width `width_factor * h`, normalized to unit sum.
    GaussianMollifier { width_factor: f64 },
}

impl DeltaMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DeltaMode::CellLumping => Ok(()),
            DeltaMode::GaussianMollifier { width_factor } => {
                if (0.5..=5.0).contains(&width_factor) {
                    Ok(())
                } else {
                    Err(Error::InvalidParams(format!(
                        "mollifier width factor must lie in [0.5, 5], got {width_factor}"
                    )))
                }
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            DeltaMode::CellLumping => "cell_lumping".into(),
            DeltaMode::GaussianMollifier { width_factor } => format!("gaussian_{width_factor}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorMeta {
    pub params: PhysicsParams,
    pub curve: CurveSpec,
    pub orientation: BiasOrientation,
    pub grid: Grid2D,
    pub delta_mode: DeltaMode,
}

/// Symmetric matrix on an `nx x ny` node lattice: arbitrary diagonal and
/// constant couplings `off_x`, `off_y` between lattice neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    pub nx: usize,
    pub ny: usize,
    pub diag: Vec<f64>,
    pub off_x: f64,
    pub off_y: f64,
    pub meta: Option<OperatorMeta>,
}

impl DiscreteOperator {
    pub fn from_parts(nx: usize, ny: usize, diag: Vec<f64>, off_x: f64, off_y: f64) -> Result<Self> {
        if nx * ny == 0 || diag.len() != nx * ny {
            return Err(Error::InvalidGrid(format!(
                "diagonal of length {} does not match a {nx} x {ny} lattice",
                diag.len()
            )));
        }
        Ok(Self {
            nx,
            ny,
            diag,
            off_x,
            off_y,
            meta: None,
        })
    }

    /// 3-point Dirichlet Laplacian with `n` interior nodes, as a `n x 1`
    /// lattice.
    pub fn laplacian_1d(n: usize, h: f64) -> Result<Self> {
        let h2 = h * h;
        Self::from_parts(n, 1, vec![2.0 / h2; n], -1.0 / h2, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.nx * self.ny
    }

    pub fn nnz(&self) -> usize {
        let mut nnz = self.dim();
        if self.off_x != 0.0 {
            nnz += 2 * (self.nx - 1) * self.ny;
        }
        if self.off_y != 0.0 {
            nnz += 2 * self.nx * (self.ny - 1);
        }
        nnz
    }

    /// `A + c I`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.diag.iter_mut().for_each(|d| *d += c);
        out
    }

    /// Column indices and values of row `k`, ascending.
    pub fn row(&self, k: usize) -> Vec<(usize, f64)> {
        let (nx, ny) = (self.nx, self.ny);
        let (i, j) = (k % nx, k / nx);
        let mut r = Vec::with_capacity(5);
        if j > 0 && self.off_y != 0.0 {
            r.push((k - nx, self.off_y));
        }
        if i > 0 && self.off_x != 0.0 {
            r.push((k - 1, self.off_x));
        }
        r.push((k, self.diag[k]));
        if i + 1 < nx && self.off_x != 0.0 {
            r.push((k + 1, self.off_x));
        }
        if j + 1 < ny && self.off_y != 0.0 {
            r.push((k + nx, self.off_y));
        }
        r
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        let (ox, oy) = (self.off_x, self.off_y);
        y.par_chunks_mut(nx).enumerate().for_each(|(j, yrow)| {
            let base = j * nx;
            for i in 0..nx {
                let k = base + i;
                let mut acc = self.diag[k] * x[k];
                if i > 0 {
                    acc += ox * x[k - 1];
                }
                if i + 1 < nx {
                    acc += ox * x[k + 1];
                }
                if j > 0 {
                    acc += oy * x[k - nx];
                }
                if j + 1 < ny {
                    acc += oy * x[k + nx];
                }
                yrow[i] = acc;
            }
        });
    }

    /// Gershgorin enclosure `(lo, hi)` of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..self.dim() {
            let r: f64 = self.row(k).iter().filter(|&&(c, _)| c != k).map(|&(_, v)| v.abs()).sum();
            lo = lo.min(self.diag[k] - r);
            hi = hi.max(self.diag[k] + r);
        }
        (lo, hi)
    }

    pub fn rayleigh_quotient(&self, v: &[f64]) -> f64 {
        let mut av = vec![0.0; v.len()];
        self.apply(v, &mut av);
        crate::linalg::dot(v, &av) / crate::linalg::dot(v, v)
    }

    /// Row-major dense copy; only sensible for small operators.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut a = vec![0.0; n * n];
        for k in 0..n {
            for (c, v) in self.row(k) {
                a[k * n + c] = v;
            }
        }
        a
    }

    /// Coordinate text export: a `dim nnz` header, then one 0-based
    /// `row col value` triplet per line.
    pub fn write_coo<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.dim(), self.nnz())?;
        for k in 0..self.dim() {
            for (c, v) in self.row(k) {
                writeln!(w, "{k} {c} {v}")?;
            }
        }
        Ok(())
    }
}

/// Checks everything `assemble_hamiltonian` requires without assembling.
pub fn check_preconditions(p: &PhysicsParams, c: &CurveSpec, g: &Grid2D, m: &DeltaMode) -> Result<()> {
    c.validate()?;
    m.validate()?;
    let [cx, cy] = g.origin_offset;
    if !(cx.abs() < g.half_extent && cy.abs() < g.half_extent) {
        return Err(Error::InvalidGrid(format!(
            "box of half extent {} centred at ({cx}, {cy}) does not contain the vertex",
            g.half_extent
        )));
    }
    let bound = max_spacing(p);
    if g.h > bound * (1.0 + 1e-12) {
        return Err(Error::InvalidGrid(format!(
            "h = {} is too coarse; need h <= {bound} to resolve 1/alpha and 1/sqrt(v0)",
            g.h
        )));
    }
    Ok(())
}

/// Coarsest admissible spacing `min(1/α, 1/√max(V₀, 1)) / 4`.
pub fn max_spacing(p: &PhysicsParams) -> f64 {
    let inv_alpha = if p.alpha > 0.0 { 1.0 / p.alpha } else { f64::INFINITY };
    inv_alpha.min(1.0 / p.v0.max(1.0).sqrt()) / 4.0
}

/// Node-sampled potential: `v0` where the node's region matches the bias
/// orientation, 0 elsewhere. Nodes on the curve get `v0 / 2`, as in the 1D
/// scheme.
pub fn potential_field(p: &PhysicsParams, c: &CurveSpec, o: BiasOrientation, g: &Grid2D) -> Vec<f64> {
    let want = match o {
        BiasOrientation::InteriorBias => RegionLabel::Interior,
        BiasOrientation::ExteriorBias => RegionLabel::Exterior,
    };
    let mut v = vec![0.0; g.dim()];
    v.par_chunks_mut(g.nx).enumerate().for_each(|(j, row)| {
        let y = g.y(j);
        for (i, vi) in row.iter_mut().enumerate() {
            let label = geometry::classify_region(c, [g.x(i), y]);
            if label == want {
                *vi = p.v0;
            } else if label == RegionLabel::OnCurve {
                *vi = 0.5 * p.v0;
            }
        }
    });
    v
}

/// Parameter intervals of the curve inside the box, restricted to `s >= 0`
/// when only the upper half is deposited.
fn curve_intervals(c: &CurveSpec, bx: &Aabb, upper_only: bool) -> Vec<(Piece, f64, f64)> {
    let mut out = Vec::new();
    for piece in c.pieces() {
        for (a, b) in piece.intervals_in_box(bx) {
            let a = if upper_only { a.max(0.0) } else { a };
            if b > a {
                out.push((piece, a, b));
            }
        }
    }
    out
}

const GL4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_W: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

struct MassAccumulator<'a> {
    g: &'a Grid2D,
    mass: Vec<f64>,
    mirror: bool,
}

impl MassAccumulator<'_> {
    /// Deposit on full-index corner `(bi, bj)`; Dirichlet-line corners fold
    /// onto the adjacent interior node.
    fn deposit_full(&mut self, bi: usize, bj: usize, w: f64) {
        let i = bi.clamp(1, self.g.nx) - 1;
        let j = bj.clamp(1, self.g.ny) - 1;
        self.deposit(i, j, w);
    }

    fn deposit(&mut self, i: usize, j: usize, w: f64) {
        self.mass[self.g.index(i, j)] += w;
        if self.mirror {
            self.mass[self.g.index(i, self.g.ny - 1 - j)] += w;
        }
    }
}

/// Per-node δ mass `m_k` (units of length) for the chosen mode.
pub fn delta_mass(c: &CurveSpec, g: &Grid2D, mode: &DeltaMode) -> Vec<f64> {
    let bx = g.bounds();
    let mirror = g.mirror_symmetric();
    let mut acc = MassAccumulator {
        g,
        mass: vec![0.0; g.dim()],
        mirror,
    };
    let intervals = curve_intervals(c, &bx, mirror);
    match *mode {
        DeltaMode::CellLumping => {
            let mut cuts = Vec::new();
            for (piece, a, b) in intervals {
                cuts.clear();
                cuts.push(a);
                cuts.push(b);
                for bi in 0..=g.nx + 1 {
                    piece.crossings(0, g.line(0, bi), &mut cuts);
                }
                for bj in 0..=g.ny + 1 {
                    piece.crossings(1, g.line(1, bj), &mut cuts);
                }
                cuts.retain(|&s| s >= a && s <= b);
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                for w in cuts.windows(2) {
                    let (sa, sb) = (w[0], w[1]);
                    if sb <= sa {
                        continue;
                    }
                    let mid = piece.point(0.5 * (sa + sb));
                    let ci = (((mid[0] - bx.x0) / g.h).floor() as isize).clamp(0, g.nx as isize) as usize;
                    let cj = (((mid[1] - bx.y0) / g.h).floor() as isize).clamp(0, g.ny as isize) as usize;
                    let (x0, y0) = (g.line(0, ci), g.line(1, cj));
                    let mut wc = [0.0; 4];
                    let half = 0.5 * (sb - sa);
                    for (xq, wq) in GL4_X.iter().zip(GL4_W) {
                        let q = piece.point(0.5 * (sa + sb) + half * xq);
                        let lx = ((q[0] - x0) / g.h).clamp(0.0, 1.0);
                        let ly = ((q[1] - y0) / g.h).clamp(0.0, 1.0);
                        let ww = wq * half;
                        wc[0] += ww * (1.0 - lx) * (1.0 - ly);
                        wc[1] += ww * lx * (1.0 - ly);
                        wc[2] += ww * (1.0 - lx) * ly;
                        wc[3] += ww * lx * ly;
                    }
                    acc.deposit_full(ci, cj, wc[0]);
                    acc.deposit_full(ci + 1, cj, wc[1]);
                    acc.deposit_full(ci, cj + 1, wc[2]);
                    acc.deposit_full(ci + 1, cj + 1, wc[3]);
                }
            }
        }
        DeltaMode::GaussianMollifier { width_factor } => {
            let sigma = width_factor * g.h;
            let reach = (4.0 * sigma / g.h).ceil() as isize;
            let ds_target = g.h / 4.0;
            let mut w = Vec::new();
            for (piece, a, b) in intervals {
                let m = ((b - a) / ds_target).ceil().max(1.0) as usize;
                let ds = (b - a) / m as f64;
                for t in 0..m {
                    let q = piece.point(a + (t as f64 + 0.5) * ds);
                    let ic = ((q[0] - g.x(0)) / g.h).round() as isize;
                    let jc = ((q[1] - g.y(0)) / g.h).round() as isize;
                    w.clear();
                    let mut total = 0.0;
                    for j in (jc - reach).max(0)..=(jc + reach).min(g.ny as isize - 1) {
                        for i in (ic - reach).max(0)..=(ic + reach).min(g.nx as isize - 1) {
                            let (i, j) = (i as usize, j as usize);
                            let d2 = (g.x(i) - q[0]).powi(2) + (g.y(j) - q[1]).powi(2);
                            let e = (-0.5 * d2 / (sigma * sigma)).exp();
                            total += e;
                            w.push((i, j, e));
                        }
                    }
                    if total > 0.0 {
                        for &(i, j, e) in &w {
                            acc.deposit(i, j, ds * e / total);
                        }
                    } else {
                        // sample farther than 4σ from every node: nearest node
                        let i = ic.clamp(0, g.nx as isize - 1) as usize;
                        let j = jc.clamp(0, g.ny as isize - 1) as usize;
                        acc.deposit(i, j, ds);
                    }
                }
            }
        }
    }
    acc.mass
}

pub fn assemble_hamiltonian(
    p: &PhysicsParams,
    c: &CurveSpec,
    o: BiasOrientation,
    g: &Grid2D,
    m: &DeltaMode,
) -> Result<DiscreteOperator> {
    check_preconditions(p, c, g, m)?;
    let h2 = g.h * g.h;
    let mut diag = potential_field(p, c, o, g);
    if p.alpha != 0.0 {
        let mass = delta_mass(c, g, m);
        for (d, mk) in diag.iter_mut().zip(&mass) {
            *d -= p.alpha * mk / h2;
        }
    }
    diag.iter_mut().for_each(|d| *d += 4.0 / h2);
    let mut op = DiscreteOperator::from_parts(g.nx, g.ny, diag, -1.0 / h2, -1.0 / h2)?;
    op.meta = Some(OperatorMeta {
        params: *p,
        curve: *c,
        orientation: o,
        grid: *g,
        delta_mode: *m,
    });
    Ok(op)
}
