//! Lowest eigenvalues and exact eigenvalue counts for assembled operators.
//!
//! Counting uses the inertia of a multifrontal `LDLᵀ` of `A - σI`. The lowest
//! eigenpairs come from shift-invert Lanczos with thick restarts and full
//! reorthogonalization, shifted just below the spectrum so the factorization
//! is positive definite. Every reported pair carries a residual recomputed
//! with an explicit product `‖Av - λv‖`.

pub mod multifrontal;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_hamiltonian, DeltaMode, DiscreteOperator, Grid2D};
use crate::error::{Error, Result};
use crate::geometry::{BiasOrientation, CurveSpec, Point};
use crate::linalg::{axpy, dot, jacobi_eigen, norm};
use crate::transverse::{essential_threshold, PhysicsParams};

pub use multifrontal::Ldlt;

pub const DEFAULT_SEED: u64 = 0x1eaf_5eed;
const SHIFT_RETRIES: usize = 3;
const SHIFT_PERTURBATION: f64 = 1e-10;

/// Factor `A - σI`, nudging `σ` up by `1e-10` (at most three times) when a
/// pivot vanishes.
pub fn factor_shifted(a: &DiscreteOperator, sigma: f64, keep_factors: bool) -> Result<Ldlt> {
    let mut last = None;
    for attempt in 0..=SHIFT_RETRIES {
        let s = sigma + attempt as f64 * SHIFT_PERTURBATION;
        match Ldlt::factor(a, s, keep_factors) {
            Ok(f) => return Ok(f),
            Err(e @ Error::Breakdown { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Number of eigenvalues of `A` strictly below `sigma`.
pub fn count_below(a: &DiscreteOperator, sigma: f64) -> Result<usize> {
    Ok(factor_shifted(a, sigma, false)?.negative)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosOptions {
    pub seed: u64,
    /// First shift tried; stepped down until no eigenvalue lies below it.
    pub shift_hint: Option<f64>,
    pub max_restarts: usize,
    pub basis_size: Option<usize>,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            shift_hint: None,
            max_restarts: 300,
            basis_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpairs {
    /// Ascending.
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Unit eigenvectors matching `values`.
    pub vectors: Vec<Vec<f64>>,
    pub restarts: usize,
    pub solves: usize,
    pub factorizations: usize,
    pub shift: f64,
}

/// The `k` smallest eigenvalues with their residual norms, ascending.
pub fn lowest_eigenvalues(a: &DiscreteOperator, k: usize, tol_resid: f64) -> Result<Vec<(f64, f64)>> {
    let e = lowest_eigenpairs(a, k, tol_resid, &LanczosOptions::default())?;
    Ok(e.values.into_iter().zip(e.residuals).collect())
}

pub fn lowest_eigenpairs(a: &DiscreteOperator, k: usize, tol_resid: f64, opts: &LanczosOptions) -> Result<Eigenpairs> {
    lowest_eigenpairs_from(a, k, tol_resid, opts, None)
}

fn lowest_eigenpairs_from(
    a: &DiscreteOperator,
    k: usize,
    tol_resid: f64,
    opts: &LanczosOptions,
    initial: Option<Ldlt>,
) -> Result<Eigenpairs> {
    let n = a.dim();
    if k == 0 || k >= n {
        return Err(Error::InvalidParams(format!("need 1 <= k < dim = {n}, got k = {k}")));
    }
    if !(tol_resid > 0.0 && tol_resid <= 1e-4) {
        return Err(Error::InvalidParams(format!("tol_resid must lie in (0, 1e-4], got {tol_resid}")));
    }
    let (fact, factorizations) = shift_below_spectrum(a, opts.shift_hint.unwrap_or(0.0), initial)?;
    let mut out = thick_restart(a, &fact, k, tol_resid, opts)?;
    out.factorizations = factorizations;
    Ok(out)
}

/// A factorization of `A - σI` with no negative pivots, stepping `σ` down
/// geometrically from `start`.
fn shift_below_spectrum(a: &DiscreteOperator, start: f64, initial: Option<Ldlt>) -> Result<(Ldlt, usize)> {
    let (glo, _) = a.gershgorin();
    let floor = glo - 1e-3 * (1.0 + glo.abs());
    let mut sigma = start.max(floor);
    let mut step = 0.05 * (1.0 + sigma.abs());
    let mut count = 0;
    let mut next = initial.filter(|f| f.sigma == sigma && f.has_factors());
    loop {
        let f = match next.take() {
            Some(f) => f,
            None => {
                count += 1;
                factor_shifted(a, sigma, true)?
            }
        };
        if f.negative == 0 {
            return Ok((f, count));
        }
        if sigma <= floor {
            return Err(Error::Breakdown {
                sigma,
                pivot: f.min_abs_pivot,
            });
        }
        drop(f);
        sigma = (sigma - step).max(floor);
        step *= 3.0;
    }
}

fn thick_restart(a: &DiscreteOperator, fact: &Ldlt, k: usize, tol: f64, opts: &LanczosOptions) -> Result<Eigenpairs> {
    let n = a.dim();
    let sigma = fact.sigma;
    let m = opts.basis_size.unwrap_or((2 * k + 20).max(40)).clamp(k + 1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut random_unit = |basis: &[Vec<f64>]| -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for _ in 0..2 {
            for b in basis {
                let c = dot(b, &v);
                axpy(-c, b, &mut v);
            }
        }
        let s = norm(&v);
        v.iter_mut().for_each(|x| *x /= s);
        v
    };

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    basis.push(random_unit(&[]));
    let mut t = vec![0.0; m * m];
    let mut kept = 0;
    let mut solves = 0;
    let mut best: Vec<(f64, f64)> = Vec::new();
    let mut av = vec![0.0; n];

    for restart in 0..opts.max_restarts {
        let mut beta = 0.0;
        for j in kept..m {
            let mut w = basis[j].clone();
            fact.solve_in_place(&mut w);
            solves += 1;
            let mut hcol = vec![0.0; j + 1];
            for _pass in 0..2 {
                for (i, b) in basis.iter().enumerate().take(j + 1) {
                    let c = dot(b, &w);
                    hcol[i] += c;
                    axpy(-c, b, &mut w);
                }
            }
            for (i, &hv) in hcol.iter().enumerate() {
                if i >= kept || i == j || j == kept {
                    t[i * m + j] = hv;
                    t[j * m + i] = hv;
                }
            }
            beta = norm(&w);
            let scale = hcol.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
            if beta <= 1e-13 * scale {
                beta = 0.0;
                if j + 1 < m {
                    let fresh = random_unit(&basis);
                    basis.push(fresh);
                } else {
                    basis.push(vec![0.0; n]);
                }
            } else {
                w.iter_mut().for_each(|x| *x /= beta);
                basis.push(w);
            }
        }

        let (theta, y) = jacobi_eigen(&t, m);
        let resid_dir = &basis[m];
        let rn = if beta == 0.0 {
            0.0
        } else {
            a.apply(resid_dir, &mut av);
            av.iter().zip(resid_dir).map(|(p, q)| (p - sigma * q).powi(2)).sum::<f64>().sqrt()
        };
        let wanted: Vec<usize> = (0..k).map(|q| m - 1 - q).collect();
        let estimates: Vec<f64> = wanted
            .iter()
            .map(|&i| beta * y[(m - 1) * m + i].abs() * rn / theta[i].abs().max(f64::MIN_POSITIVE))
            .collect();

        if estimates.iter().all(|&e| e <= 0.1 * tol) {
            let mut vals = Vec::with_capacity(k);
            let mut vecs = Vec::with_capacity(k);
            let mut res = Vec::with_capacity(k);
            for &i in &wanted {
                let mut x = vec![0.0; n];
                for (r, b) in basis.iter().enumerate().take(m) {
                    let c = y[r * m + i];
                    if c != 0.0 {
                        axpy(c, b, &mut x);
                    }
                }
                let s = norm(&x);
                x.iter_mut().for_each(|v| *v /= s);
                a.apply(&x, &mut av);
                let lam = dot(&x, &av);
                let r = av.iter().zip(&x).map(|(p, q)| (p - lam * q).powi(2)).sum::<f64>().sqrt();
                vals.push(lam);
                res.push(r);
                vecs.push(x);
            }
            best = vals.iter().copied().zip(res.iter().copied()).collect();
            if res.iter().all(|&r| r <= tol) {
                let mut order: Vec<usize> = (0..k).collect();
                order.sort_by(|&p, &q| vals[p].total_cmp(&vals[q]));
                return Ok(Eigenpairs {
                    values: order.iter().map(|&i| vals[i]).collect(),
                    residuals: order.iter().map(|&i| res[i]).collect(),
                    vectors: order.iter().map(|&i| std::mem::take(&mut vecs[i])).collect(),
                    restarts: restart,
                    solves,
                    factorizations: 0,
                    shift: sigma,
                });
            }
        } else {
            best = wanted
                .iter()
                .zip(&estimates)
                .map(|(&i, &e)| (sigma + 1.0 / theta[i], e))
                .collect();
        }

        // keep the leading Ritz vectors plus the residual direction
        let p = (k + (m - k) / 2).clamp(k, m - 1);
        let keep: Vec<usize> = (0..p).map(|q| m - 1 - q).collect();
        let mut fresh: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        for &i in &keep {
            let mut x = vec![0.0; n];
            for (r, b) in basis.iter().enumerate().take(m) {
                let c = y[r * m + i];
                if c != 0.0 {
                    axpy(c, b, &mut x);
                }
            }
            fresh.push(x);
        }
        let last = basis.swap_remove(m);
        fresh.push(last);
        basis = fresh;
        t.iter_mut().for_each(|x| *x = 0.0);
        for (q, &i) in keep.iter().enumerate() {
            t[q * m + q] = theta[i];
        }
        kept = p;
    }
    best.sort_by(|p, q| p.0.total_cmp(&q.0));
    Err(Error::NoConvergence {
        iterations: opts.max_restarts,
        best,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Exists { lambda1: f64 },
    Absent,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Exists { .. } => "exists",
            Verdict::Absent => "absent",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub restarts: usize,
    pub solves: usize,
    pub factorizations: usize,
    pub shift: f64,
    pub residuals: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    pub mu: f64,
    pub margin: f64,
    /// Every eigenvalue below `mu - margin`, ascending.
    pub eigenvalues_below: Vec<f64>,
    /// All computed eigenvalues (those below the cut plus two more).
    pub lowest: Vec<f64>,
    pub count_below_mu_margin: usize,
    pub stats: SolverStats,
    pub grid: Grid2D,
}

impl SpectralResult {
    pub fn lambda1(&self) -> f64 {
        self.lowest[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    pub margin: Option<f64>,
    pub tol_resid: f64,
    pub seed: u64,
    pub delta_mode: DeltaMode,
    pub origin_offset: Point,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            margin: None,
            tol_resid: 1e-6,
            seed: DEFAULT_SEED,
            delta_mode: DeltaMode::CellLumping,
            origin_offset: [0.0, 0.0],
        }
    }
}

/// Acceptance margin `max(0.005 |μ|, 1e-3 α²)`.
pub fn default_margin(p: &PhysicsParams) -> f64 {
    (0.005 * essential_threshold(p).abs())
        .max(1e-3 * p.alpha * p.alpha)
        .max(1e-12)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub rungs: Vec<SpectralResult>,
    pub verdict: Verdict,
    pub tol_r: f64,
}

pub fn solve_rung(
    p: &PhysicsParams,
    c: &CurveSpec,
    o: BiasOrientation,
    h: f64,
    half_extent: f64,
    opts: &ScanOptions,
) -> Result<SpectralResult> {
    let g = Grid2D::new(half_extent, h, opts.origin_offset)?;
    let a = assemble_hamiltonian(p, c, o, &g, &opts.delta_mode)?;
    spectral_result(&a, p, opts)
}

/// Count, lowest eigenpairs and cut data for one assembled operator.
pub fn spectral_result(a: &DiscreteOperator, p: &PhysicsParams, opts: &ScanOptions) -> Result<SpectralResult> {
    let mu = essential_threshold(p);
    let margin = opts.margin.unwrap_or_else(|| default_margin(p));
    if !(margin > 0.0) {
        return Err(Error::InvalidParams(format!("margin must be positive, got {margin}")));
    }
    let cut = mu - margin;
    let first = factor_shifted(a, cut, true)?;
    let count = first.negative;
    let grid = a
        .meta
        .map(|m| m.grid)
        .ok_or_else(|| Error::InvalidParams("operator carries no grid metadata".into()))?;
    let mut first = Some(first);
    let mut extra = 0;
    let mut factorizations = 1;
    for attempt in 0..3u64 {
        let k = (count + 2 + extra).min(a.dim() - 1);
        let lopts = LanczosOptions {
            seed: opts.seed.wrapping_add(attempt),
            shift_hint: Some(cut),
            ..LanczosOptions::default()
        };
        let e = lowest_eigenpairs_from(a, k, opts.tol_resid, &lopts, first.take())?;
        factorizations += e.factorizations;
        let below: Vec<f64> = e.values.iter().copied().filter(|&v| v < cut).collect();
        if below.len() == count {
            return Ok(SpectralResult {
                mu,
                margin,
                eigenvalues_below: below,
                lowest: e.values,
                count_below_mu_margin: count,
                stats: SolverStats {
                    restarts: e.restarts,
                    solves: e.solves,
                    factorizations,
                    shift: e.shift,
                    residuals: e.residuals,
                    seed: lopts.seed,
                },
                grid,
            });
        }
        // the Krylov space missed a member of a cluster; widen and reseed
        extra += 2;
    }
    Err(Error::NoConvergence {
        iterations: 3,
        best: Vec::new(),
    })
}

/// Checks the ladder shape: at least two rungs, `R` non-decreasing, `h`
/// non-increasing, not all rungs equal.
pub fn validate_ladder(ladder: &[(f64, f64)]) -> Result<()> {
    if ladder.len() < 2 {
        return Err(Error::InvalidParams("a grid ladder needs at least two rungs".into()));
    }
    for w in ladder.windows(2) {
        let ((h0, r0), (h1, r1)) = (w[0], w[1]);
        if r1 < r0 || h1 > h0 {
            return Err(Error::InvalidParams(format!(
                "ladder must refine: ({h0}, {r0}) is followed by ({h1}, {r1})"
            )));
        }
    }
    if ladder.iter().all(|&r| r == ladder[0]) {
        return Err(Error::InvalidParams("ladder rungs are all identical".into()));
    }
    Ok(())
}

/// Verdict and the R-stability tolerance for a solved ladder. The last rung
/// is the finest and is compared with the rung of largest `R` below its own
/// (ties broken towards smaller `h`). A ladder without such a rung cannot show
/// R-stability and never yields `Exists`.
pub fn verdict_from_rungs(rungs: &[SpectralResult]) -> (Verdict, f64) {
    let last = rungs.last().expect("non-empty ladder");
    let cut = last.mu - last.margin;
    let r_last = last.grid.half_extent;
    let prev = rungs
        .iter()
        .filter(|r| r.grid.half_extent < r_last)
        .max_by(|p, q| {
            p.grid
                .half_extent
                .total_cmp(&q.grid.half_extent)
                .then(q.grid.h.total_cmp(&p.grid.h))
        });
    let tol_r = (0.5 * (last.mu - last.lambda1())).max(last.margin);
    if last.lambda1() >= cut {
        return (Verdict::Absent, tol_r);
    }
    let all_below = rungs.iter().all(|r| r.lambda1() < r.mu - r.margin);
    match prev {
        Some(prev) if all_below && (last.lambda1() - prev.lambda1()).abs() < tol_r => (
            Verdict::Exists {
                lambda1: last.lambda1(),
            },
            tol_r,
        ),
        _ => (Verdict::Inconclusive, tol_r),
    }
}

pub fn discrete_spectrum_scan(
    p: &PhysicsParams,
    c: &CurveSpec,
    o: BiasOrientation,
    ladder: &[(f64, f64)],
    opts: &ScanOptions,
) -> Result<ScanReport> {
    validate_ladder(ladder)?;
    let rungs = ladder
        .iter()
        .map(|&(h, r)| solve_rung(p, c, o, h, r, opts))
        .collect::<Result<Vec<_>>>()?;
    let (verdict, tol_r) = verdict_from_rungs(&rungs);
    Ok(ScanReport { rungs, verdict, tol_r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn laplacian_1d_spectrum() {
        let n = 99;
        let h = 0.01;
        let a = DiscreteOperator::laplacian_1d(n, h).unwrap();
        let got = lowest_eigenvalues(&a, 5, 1e-8).unwrap();
        for (j, (lam, r)) in got.iter().enumerate() {
            let exact = (2.0 / (h * h)) * (1.0 - ((j + 1) as f64 * PI * h / (n as f64 * h + h)).cos());
            assert!((lam - exact).abs() < 1e-10 * exact.max(1.0), "{lam} vs {exact}");
            assert!(*r <= 1e-8);
        }
    }

    #[test]
    fn shift_invariance() {
        let h = 0.1;
        let diag: Vec<f64> = (0..30 * 20).map(|k| 4.0 / (h * h) - ((k * 7) % 5) as f64).collect();
        let a = DiscreteOperator::from_parts(30, 20, diag, -100.0, -100.0).unwrap();
        let c = 3.25;
        let e0 = lowest_eigenvalues(&a, 4, 1e-9).unwrap();
        let e1 = lowest_eigenvalues(&a.shifted(c), 4, 1e-9).unwrap();
        for (x, y) in e0.iter().zip(&e1) {
            assert!((y.0 - x.0 - c).abs() < 1e-9, "{} {}", x.0, y.0);
        }
    }

    #[test]
    fn gershgorin_counts() {
        let a = DiscreteOperator::laplacian_1d(50, 0.1).unwrap();
        let (lo, hi) = a.gershgorin();
        assert_eq!(count_below(&a, lo - 1.0).unwrap(), 0);
        assert_eq!(count_below(&a, hi + 1.0).unwrap(), 50);
    }

    #[test]
    fn bad_requests() {
        let a = DiscreteOperator::laplacian_1d(10, 0.1).unwrap();
        assert!(lowest_eigenvalues(&a, 0, 1e-6).is_err());
        assert!(lowest_eigenvalues(&a, 10, 1e-6).is_err());
        assert!(lowest_eigenvalues(&a, 2, 1e-3).is_err());
    }

    #[test]
    fn ladder_shapes() {
        assert!(validate_ladder(&[(0.1, 12.0)]).is_err());
        assert!(validate_ladder(&[(0.1, 12.0), (0.05, 12.0), (0.05, 24.0)]).is_ok());
        assert!(validate_ladder(&[(0.05, 12.0), (0.1, 12.0)]).is_err());
        assert!(validate_ladder(&[(0.1, 24.0), (0.1, 12.0)]).is_err());
    }
}
