//! The one-dimensional transverse operator `h = -d²/dx² - α δ(x) + V₀ 1{x>0}`.
//!
//! Everything here is closed form except [`solve_transverse_fd`], a
//! tridiagonal finite-difference discretization used as an independent check
//! of the closed forms and of the 2D assembly on straight-line controls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Coupling `alpha` of the attractive δ-interaction and height `v0` of the
/// one-sided potential bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub alpha: f64,
    pub v0: f64,
}

impl PhysicsParams {
    /// `alpha = 0` is accepted as the interaction-free control (pure
    /// Laplacian plus bias); every physical run uses `alpha > 0`.
    pub fn new(alpha: f64, v0: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParams(format!("alpha must be finite and >= 0, got {alpha}")));
        }
        if !(v0.is_finite() && v0 >= 0.0) {
            return Err(Error::InvalidParams(format!("v0 must be finite and >= 0, got {v0}")));
        }
        Ok(Self { alpha, v0 })
    }

    /// The critical bias `v0 = alpha²` for a given coupling.
    pub fn critical(alpha: f64) -> Result<Self> {
        Self::new(alpha, alpha * alpha)
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

/// Closed-form spectral data of the transverse operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseSpectrum {
    /// Bottom of the essential spectrum of `h`; always 0.
    pub threshold_mu: f64,
    pub bound_energy: Option<f64>,
    pub kappa_minus: Option<f64>,
    pub kappa_plus: Option<f64>,
}

/// Relative width of the band around `v0 = alpha²` treated as critical.
pub const CRITICAL_REL_TOL: f64 = 1e-12;

pub fn classify_regime(p: &PhysicsParams) -> Regime {
    let a2 = p.alpha * p.alpha;
    if (p.v0 - a2).abs() <= CRITICAL_REL_TOL * a2 {
        Regime::Critical
    } else if p.v0 < a2 {
        Regime::Subcritical
    } else {
        Regime::Supercritical
    }
}

/// Bottom `μ` of the essential spectrum of the 2D operator: the transverse
/// bound-state energy when it exists, zero otherwise.
pub fn essential_threshold(p: &PhysicsParams) -> f64 {
    match classify_regime(p) {
        Regime::Subcritical => {
            let q = (p.alpha * p.alpha - p.v0) / (2.0 * p.alpha);
            -q * q
        }
        _ => 0.0,
    }
}

pub fn transverse_bound_state(p: &PhysicsParams) -> TransverseSpectrum {
    match classify_regime(p) {
        Regime::Subcritical => {
            // κ₋ = (α² - V₀)/2α and κ₊ = (α² + V₀)/2α; their sum is the δ jump α.
            let e = essential_threshold(p);
            TransverseSpectrum {
                threshold_mu: 0.0,
                bound_energy: Some(e),
                kappa_minus: Some((-e).sqrt()),
                kappa_plus: Some((p.v0 - e).sqrt()),
            }
        }
        _ => TransverseSpectrum {
            threshold_mu: 0.0,
            bound_energy: None,
            kappa_minus: None,
            kappa_plus: None,
        },
    }
}

/// Bounded weak solution of `hψ = 0` at the critical bias: 1 on the
/// unbiased side, `exp(-√V₀ x)` on the biased side.
pub fn generalized_zero_mode(p: &PhysicsParams, x: f64) -> Result<f64> {
    let regime = classify_regime(p);
    if regime != Regime::Critical {
        return Err(Error::InvalidRegime {
            expected: Regime::Critical,
            actual: regime,
        });
    }
    Ok(if x <= 0.0 { 1.0 } else { (-p.v0.sqrt() * x).exp() })
}

/// Uniform 1D grid with a node exactly at `x = 0`; the end nodes carry
/// Dirichlet conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub h: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {h}")));
        }
        if !(x_min < 0.0 && x_max > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "domain [{x_min}, {x_max}] must contain 0 in its interior"
            )));
        }
        let left = -x_min / h;
        if (left - left.round()).abs() > 1e-9 * left.max(1.0) {
            return Err(Error::InvalidGrid(format!("no node at x = 0 for x_min = {x_min}, h = {h}")));
        }
        let n = ((x_max - x_min) / h).round() as usize + 1;
        Ok(Self { x_min, x_max, h, n })
    }

    /// Symmetric domain `[-X, X]` with `X >= 40 / κ_min` rounded up to a
    /// multiple of `h`, so truncation is negligible for the bound state.
    /// Without a bound state `X = 40 / alpha`.
    pub fn for_params(p: &PhysicsParams, h: f64) -> Result<Self> {
        let s = transverse_bound_state(p);
        let kmin = match (s.kappa_minus, s.kappa_plus) {
            (Some(a), Some(b)) => a.min(b),
            _ => p.alpha,
        };
        if !(kmin > 0.0) {
            return Err(Error::InvalidParams("need alpha > 0 to size the 1D domain".into()));
        }
        let half = ((40.0 / kmin) / h).ceil() * h;
        Self::new(-half, half, h)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.h
    }

    pub fn zero_index(&self) -> usize {
        (-self.x_min / self.h).round() as usize
    }
}

/// Interior tridiagonal matrix `(diag, off)` of the 1D transverse operator:
/// 3-point Laplacian, `+v0` on nodes with `x > 0`, `v0/2 - alpha/h` on the
/// node at 0 (its dual cell is half biased; sampling 0 there leaves a
/// first-order error whose pre-asymptotic slope drops below 1).
pub fn transverse_fd_matrix(p: &PhysicsParams, g: &Grid1D) -> (Vec<f64>, Vec<f64>) {
    let h2 = g.h * g.h;
    let zero = g.zero_index();
    let diag: Vec<f64> = (1..g.n - 1)
        .map(|i| {
            let mut d = 2.0 / h2;
            if i == zero {
                d += 0.5 * p.v0 - p.alpha / g.h;
            } else if i > zero {
                d += p.v0;
            }
            d
        })
        .collect();
    let off = vec![-1.0 / h2; diag.len().saturating_sub(1)];
    (diag, off)
}

/// The `k` lowest eigenvalues of the finite-difference transverse operator,
/// ascending.
pub fn solve_transverse_fd(p: &PhysicsParams, g: &Grid1D, k: usize) -> Result<Vec<f64>> {
    if !(g.h > 0.0) {
        return Err(Error::InvalidGrid("non-positive spacing".into()));
    }
    let zero = g.zero_index();
    if (g.x(zero)).abs() > 1e-9 * g.h || zero == 0 || zero + 1 >= g.n {
        return Err(Error::InvalidGrid("grid has no interior node at x = 0".into()));
    }
    let (diag, off) = transverse_fd_matrix(p, g);
    Ok(linalg::tridiag_lowest(&diag, &off, k))
}

/// Richardson extrapolation of values computed on the spacings `h, h/2, h/4`
/// eliminating the first- and second-order error terms.
pub fn richardson3(v_h: f64, v_h2: f64, v_h4: f64) -> f64 {
    // first-order eliminations, then second order on the pair
    let r1 = 2.0 * v_h2 - v_h;
    let r2 = 2.0 * v_h4 - v_h2;
    (4.0 * r2 - r1) / 3.0
}

/// Lowest FD eigenvalue extrapolated from the ladder `h, h/2, h/4`.
pub fn transverse_fd_extrapolated(p: &PhysicsParams, h: f64) -> Result<f64> {
    let mut vals = [0.0; 3];
    for (i, v) in vals.iter_mut().enumerate() {
        let hi = h / f64::from(1u32 << i);
        let g = Grid1D::for_params(p, hi)?;
        *v = solve_transverse_fd(p, &g, 1)?[0];
    }
    Ok(richardson3(vals[0], vals[1], vals[2]))
}

/// Slack `∫(|φ'|² + V₀|φ|²) - √V₀ |φ(0)|²` of the half-line inequality for a
/// function tabulated on `n` uniform samples of `[0, x_max]`. Five-point
/// differences for `φ'` and composite Simpson for the integral (three-point
/// stencils when fewer than five samples are given).
pub fn verify_halfline_inequality(samples: &[f64], x_max: f64, v0: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidParams("empty sample set".into()));
    }
    if !(v0 > 0.0) {
        return Err(Error::InvalidParams(format!("v0 must be positive, got {v0}")));
    }
    let n = samples.len();
    let boundary = v0.sqrt() * samples[0] * samples[0];
    if n < 3 {
        return Ok(-boundary);
    }
    let dx = x_max / (n - 1) as f64;
    let f = samples;
    let deriv = |i: usize| -> f64 {
        if n < 5 {
            return if i == 0 {
                (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx)
            } else if i == n - 1 {
                (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx)
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * dx)
            };
        }
        // five-point stencils, one-sided near the ends
        let fw = |j: usize, sgn: f64| -> f64 {
            let g = |k: usize| if sgn > 0.0 { f[j + k] } else { f[j - k] };
            sgn * (-25.0 * g(0) + 48.0 * g(1) - 36.0 * g(2) + 16.0 * g(3) - 3.0 * g(4))
        };
        let d12 = if i == 0 {
            fw(0, 1.0)
        } else if i == n - 1 {
            fw(n - 1, -1.0)
        } else if i == 1 {
            -3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]
        } else if i == n - 2 {
            3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]
        } else {
            -f[i + 2] + 8.0 * f[i + 1] - 8.0 * f[i - 1] + f[i - 2]
        };
        d12 / (12.0 * dx)
    };
    let g: Vec<f64> = (0..n)
        .map(|i| {
            let d = deriv(i);
            d * d + v0 * f[i] * f[i]
        })
        .collect();
    // composite Simpson, with a trapezoid on the last panel for an odd panel count
    let panels = n - 1;
    let even = panels - panels % 2;
    let mut integral = 0.0;
    for k in (0..even).step_by(2) {
        integral += (g[k] + 4.0 * g[k + 1] + g[k + 2]) * dx / 3.0;
    }
    if even < panels {
        integral += 0.5 * (g[panels - 1] + g[panels]) * dx;
    }
    Ok(integral - boundary)
}
