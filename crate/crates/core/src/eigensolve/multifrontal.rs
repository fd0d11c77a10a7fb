//! Multifrontal `LDLᵀ` factorization of `A - σI` for lattice operators,
//! ordered by geometric nested dissection. No pivoting: the negative count of
//! `D` is the inertia (Sylvester), and with `σ` below the spectrum the
//! factorization is of a positive definite matrix and doubles as the solver
//! for shift-invert Lanczos.

use crate::assembly::DiscreteOperator;
use crate::error::{Error, Result};

const LEAF_AREA: usize = 64;
const PANEL: usize = 48;
const COL_BLOCK: usize = 256;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct TreeNode {
    /// Pivots first, then the halo (lattice nodes bordering the rectangle).
    vars: Vec<u32>,
    npiv: usize,
    children: Vec<usize>,
}

/// Nested-dissection tree of an `nx x ny` lattice in postorder.
fn dissect(nx: usize, ny: usize) -> Vec<TreeNode> {
    let mut nodes = Vec::new();
    build(nx, ny, (0, nx, 0, ny), &mut nodes);
    nodes
}

fn build(nx: usize, ny: usize, r: (usize, usize, usize, usize), nodes: &mut Vec<TreeNode>) -> usize {
    let (i0, i1, j0, j1) = r;
    let (w, h) = (i1 - i0, j1 - j0);
    let id = |i: usize, j: usize| (j * nx + i) as u32;
    let mut children = Vec::new();
    let mut vars = Vec::new();
    if w * h <= LEAF_AREA {
        for j in j0..j1 {
            for i in i0..i1 {
                vars.push(id(i, j));
            }
        }
    } else if w >= h {
        let m = i0 + w / 2;
        for part in [(i0, m, j0, j1), (m + 1, i1, j0, j1)] {
            if part.0 < part.1 {
                children.push(build(nx, ny, part, nodes));
            }
        }
        vars.extend((j0..j1).map(|j| id(m, j)));
    } else {
        let m = j0 + h / 2;
        for part in [(i0, i1, j0, m), (i0, i1, m + 1, j1)] {
            if part.2 < part.3 {
                children.push(build(nx, ny, part, nodes));
            }
        }
        vars.extend((i0..i1).map(|i| id(i, m)));
    }
    let npiv = vars.len();
    if i0 > 0 {
        vars.extend((j0..j1).map(|j| id(i0 - 1, j)));
    }
    if i1 < nx {
        vars.extend((j0..j1).map(|j| id(i1, j)));
    }
    if j0 > 0 {
        vars.extend((i0..i1).map(|i| id(i, j0 - 1)));
    }
    if j1 < ny {
        vars.extend((i0..i1).map(|i| id(i, j1)));
    }
    nodes.push(TreeNode { vars, npiv, children });
    nodes.len() - 1
}

#[derive(Debug, Clone)]
struct NodeFactor {
    /// First `npiv` columns of the front after elimination, column-major
    /// with leading dimension `vars.len()`; strictly lower part is `L`.
    l: Vec<f64>,
    d: Vec<f64>,
}

/// Result of factoring `A - σI`.
#[derive(Debug, Clone)]
pub struct Ldlt {
    pub sigma: f64,
    pub dim: usize,
    /// Number of negative pivots, i.e. eigenvalues of `A` below `σ`.
    pub negative: usize,
    pub min_abs_pivot: f64,
    tree: Vec<TreeNode>,
    factors: Vec<NodeFactor>,
}

impl Ldlt {
    /// Factor `A - σI`. With `keep_factors = false` only the inertia is
    /// retained.
    pub fn factor(a: &DiscreteOperator, sigma: f64, keep_factors: bool) -> Result<Self> {
        let n = a.dim();
        let tree = dissect(a.nx, a.ny);
        let scale = a
            .diag
            .iter()
            .map(|d| (d - sigma).abs())
            .fold(0.0_f64, f64::max)
            .max(4.0 * a.off_x.abs().max(a.off_y.abs()))
            .max(f64::MIN_POSITIVE);
        let tiny = 1e-14 * scale;
        let mut pos = vec![NONE; n];
        let mut updates: Vec<Option<Vec<f64>>> = vec![None; tree.len()];
        let mut factors = Vec::with_capacity(if keep_factors { tree.len() } else { 0 });
        let mut negative = 0;
        let mut min_abs_pivot = f64::INFINITY;
        let mut scratch = Vec::new();

        for (idx, node) in tree.iter().enumerate() {
            let nf = node.vars.len();
            let np = node.npiv;
            for (t, &v) in node.vars.iter().enumerate() {
                pos[v as usize] = t as u32;
            }
            let mut f = vec![0.0; nf * nf];
            for t in 0..np {
                let k = node.vars[t] as usize;
                f[t + t * nf] += a.diag[k] - sigma;
                let (i, j) = (k % a.nx, k / a.nx);
                let mut couple = |kk: usize, v: f64| {
                    let tt = pos[kk];
                    if tt != NONE && v != 0.0 {
                        let tt = tt as usize;
                        if tt > t {
                            f[tt + t * nf] += v;
                        }
                    }
                };
                if i > 0 {
                    couple(k - 1, a.off_x);
                }
                if i + 1 < a.nx {
                    couple(k + 1, a.off_x);
                }
                if j > 0 {
                    couple(k - a.nx, a.off_y);
                }
                if j + 1 < a.ny {
                    couple(k + a.nx, a.off_y);
                }
            }
            for &c in &node.children {
                let s = updates[c].take().expect("child update consumed twice");
                let cvars = &tree[c].vars[tree[c].npiv..];
                let m = cvars.len();
                for b in 0..m {
                    let pb = pos[cvars[b] as usize] as usize;
                    for a_ in b..m {
                        let pa = pos[cvars[a_] as usize] as usize;
                        let (r, cc) = if pa >= pb { (pa, pb) } else { (pb, pa) };
                        f[r + cc * nf] += s[a_ + b * m];
                    }
                }
            }
            let mut d = vec![0.0; np];
            if let Err(piv) = partial_ldlt(&mut f, nf, np, &mut d, tiny, &mut scratch) {
                return Err(Error::Breakdown { sigma, pivot: piv });
            }
            for &dk in &d {
                if dk < 0.0 {
                    negative += 1;
                }
                min_abs_pivot = min_abs_pivot.min(dk.abs());
            }
            let m = nf - np;
            if m > 0 {
                let mut s = vec![0.0; m * m];
                for b in 0..m {
                    for a_ in b..m {
                        s[a_ + b * m] = f[(np + a_) + (np + b) * nf];
                    }
                }
                updates[idx] = Some(s);
            }
            if keep_factors {
                f.truncate(np * nf);
                f.shrink_to_fit();
                factors.push(NodeFactor { l: f, d });
            }
            for &v in &node.vars {
                pos[v as usize] = NONE;
            }
        }
        Ok(Self {
            sigma,
            dim: n,
            negative,
            min_abs_pivot,
            tree,
            factors,
        })
    }

    pub fn has_factors(&self) -> bool {
        !self.factors.is_empty() || self.tree.is_empty()
    }

    /// Solve `(A - σI) x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert!(self.has_factors(), "factorization was computed for inertia only");
        let mut xv = Vec::new();
        for (node, fac) in self.tree.iter().zip(&self.factors) {
            let nf = node.vars.len();
            xv.clear();
            xv.extend(node.vars.iter().map(|&v| x[v as usize]));
            for k in 0..node.npiv {
                let xk = xv[k];
                if xk != 0.0 {
                    let col = &fac.l[k * nf..(k + 1) * nf];
                    for r in k + 1..nf {
                        xv[r] -= col[r] * xk;
                    }
                }
            }
            for (t, &v) in node.vars.iter().enumerate() {
                x[v as usize] = if t < node.npiv { xv[t] / fac.d[t] } else { xv[t] };
            }
        }
        for (node, fac) in self.tree.iter().zip(&self.factors).rev() {
            let nf = node.vars.len();
            xv.clear();
            xv.extend(node.vars.iter().map(|&v| x[v as usize]));
            for k in (0..node.npiv).rev() {
                let col = &fac.l[k * nf..(k + 1) * nf];
                let s: f64 = (k + 1..nf).map(|r| col[r] * xv[r]).sum();
                xv[k] -= s;
            }
            for t in 0..node.npiv {
                x[node.vars[t] as usize] = xv[t];
            }
        }
    }

    /// Stored factor entries (diagnostics).
    pub fn factor_len(&self) -> usize {
        self.factors.iter().map(|f| f.l.len()).sum()
    }
}

/// Eliminate the first `p` columns of the dense symmetric `nf x nf` matrix
/// `f` (column-major, lower triangle significant). On return the first `p`
/// columns hold unit-lower `L` below the diagonal, `d` the pivots, and the
/// trailing block the Schur complement. Returns the offending pivot on
/// breakdown.
fn partial_ldlt(f: &mut [f64], nf: usize, p: usize, d: &mut [f64], tiny: f64, w: &mut Vec<f64>) -> std::result::Result<(), f64> {
    for kb in (0..p).step_by(PANEL) {
        let ke = (kb + PANEL).min(p);
        for k in kb..ke {
            for q in kb..k {
                let coef = f[k + q * nf] * d[q];
                if coef != 0.0 {
                    let (head, tail) = f.split_at_mut(k * nf);
                    let src = &head[q * nf..(q + 1) * nf];
                    let dst = &mut tail[..nf];
                    for r in k..nf {
                        dst[r] -= coef * src[r];
                    }
                }
            }
            let dk = f[k + k * nf];
            if !(dk.abs() > tiny) || !dk.is_finite() {
                return Err(dk);
            }
            d[k] = dk;
            let inv = 1.0 / dk;
            for r in k + 1..nf {
                f[r + k * nf] *= inv;
            }
        }
        let nt = nf - ke;
        if nt == 0 {
            continue;
        }
        let b = ke - kb;
        w.clear();
        w.resize(nt * b, 0.0);
        for q in 0..b {
            let dq = d[kb + q];
            for r in 0..nt {
                w[r + q * nt] = f[(ke + r) + (kb + q) * nf] * dq;
            }
        }
        let base = f.as_mut_ptr();
        for c0 in (0..nt).step_by(COL_BLOCK) {
            let cw = COL_BLOCK.min(nt - c0);
            // SAFETY: the A operand reads columns kb..ke and the C operand
            // writes columns >= ke of the same buffer, so they do not overlap;
            // all offsets stay within nf * nf.
            unsafe {
                matrixmultiply::dgemm(
                    nt - c0,
                    b,
                    cw,
                    -1.0,
                    base.add((ke + c0) + kb * nf),
                    1,
                    nf as isize,
                    w.as_ptr().add(c0),
                    nt as isize,
                    1,
                    1.0,
                    base.add((ke + c0) + (ke + c0) * nf),
                    1,
                    nf as isize,
                );
            }
        }
    }
    Ok(())
}
