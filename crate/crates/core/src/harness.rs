//! Experiment configs, result records, CSV rows and the drivers behind the
//! `lwire` subcommands.
//!
//! Configs are TOML: scalar keys at the top, then `[curve]` and
//! `[delta_mode]` tables.
//!
//! ```toml
//! alpha = 1.0
//! v0 = 1.0
//! orientation = "interior_bias"
//! ladder = [[0.1, 12.0], [0.05, 12.0], [0.05, 24.0]]
//! seed = 7
//! certify = true
//!
//! [curve]
//! kind = "wedge"
//! beta = 0.7853981633974483
//!
//! [delta_mode]
//! kind = "cell_lumping"
//! ```
//!
//! Omitted keys: `ladder` falls back to [`default_ladder`], `seed` to
//! [`DEFAULT_SEED`], `tol_resid` to `1e-6`, `origin_offset` to the vertex,
//! `delta_mode` to cell lumping, `margin` to the protocol default.

use std::fmt::Write as _;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_hamiltonian, check_preconditions, DeltaMode, Grid2D};
use crate::eigensolve::{
    lowest_eigenpairs, solve_rung, validate_ladder, LanczosOptions, verdict_from_rungs, ScanOptions, SpectralResult, Verdict, DEFAULT_SEED,
};
use crate::error::{Error, Result};
use crate::geometry::{BiasOrientation, CurveKind, CurveSpec};
use crate::transverse::{
    classify_regime, essential_threshold, transverse_bound_state, transverse_fd_extrapolated, PhysicsParams, Regime,
};
use crate::variational::{
    evaluate_form, prop1_certificate, prop2_condition, theorem4_certificate, theorem6_certificate, Certificate,
    CertificateGrid, FormBreakdown, Prop1Report, QuadSpec, Trial, WedgeProductTrial,
};

pub const SCHEMA_VERSION: u32 = 1;

/// `(h, R)` rungs `{(0.1, 12), (0.05, 12), (0.05, 24)}` scaled by `1/α`.
pub fn default_ladder(alpha: f64) -> Vec<[f64; 2]> {
    let s = if alpha > 0.0 { 1.0 / alpha } else { 1.0 };
    vec![[0.1 * s, 12.0 * s], [0.05 * s, 12.0 * s], [0.05 * s, 24.0 * s]]
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_tol() -> f64 {
    1e-6
}

fn default_delta() -> DeltaMode {
    DeltaMode::CellLumping
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub alpha: f64,
    pub v0: f64,
    pub orientation: BiasOrientation,
    #[serde(default)]
    pub ladder: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol_resid: f64,
    #[serde(default)]
    pub origin_offset: [f64; 2],
    /// Also run the matching variational certificate.
    #[serde(default)]
    pub certify: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub curve: CurveSpec,
    #[serde(default = "default_delta")]
    pub delta_mode: DeltaMode,
}

impl ExperimentConfig {
    pub fn new(p: PhysicsParams, curve: CurveSpec, orientation: BiasOrientation) -> Self {
        Self {
            alpha: p.alpha,
            v0: p.v0,
            orientation,
            ladder: default_ladder(p.alpha),
            margin: None,
            seed: DEFAULT_SEED,
            tol_resid: default_tol(),
            origin_offset: [0.0, 0.0],
            certify: false,
            output: None,
            curve,
            delta_mode: DeltaMode::CellLumping,
        }
    }

    /// Parses and fills the default ladder; does not validate.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.ladder.is_empty() {
            cfg.ladder = default_ladder(cfg.alpha);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn params(&self) -> Result<PhysicsParams> {
        PhysicsParams::new(self.alpha, self.v0)
    }

    pub fn rungs(&self) -> Vec<(f64, f64)> {
        self.ladder.iter().map(|r| (r[0], r[1])).collect()
    }

    pub fn scan_options(&self) -> ScanOptions {
        ScanOptions {
            margin: self.margin,
            tol_resid: self.tol_resid,
            seed: self.seed,
            delta_mode: self.delta_mode,
            origin_offset: self.origin_offset,
        }
    }

    /// Every precondition of the modules a solve touches, checked before any
    /// work is done.
    pub fn validate(&self) -> Result<()> {
        let p = self.params()?;
        self.curve.validate()?;
        self.delta_mode.validate()?;
        if self.ladder.is_empty() {
            return Err(Error::Config("the ladder needs at least one rung".into()));
        }
        if let Some(m) = self.margin {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::Config(format!("margin must be positive, got {m}")));
            }
        }
        if !(self.tol_resid > 0.0 && self.tol_resid <= 1e-4) {
            return Err(Error::Config(format!("tol_resid must lie in (0, 1e-4], got {}", self.tol_resid)));
        }
        for &[h, r] in &self.ladder {
            let g = Grid2D::new(r, h, self.origin_offset)?;
            check_preconditions(&p, &self.curve, &g, &self.delta_mode)?;
        }
        Ok(())
    }

    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Self {
        let mut c = self.clone();
        match axis {
            SweepAxis::Beta => c.curve.beta = value,
            SweepAxis::V0 => c.v0 = value,
            SweepAxis::Alpha => c.alpha = value,
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Beta,
    V0,
    Alpha,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub family: String,
    pub found: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub form: Option<Certificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prop1: Option<Prop1Report>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub version: String,
    /// `complete`, or `partial` when a stage failed.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub tol_r: f64,
    pub config: ExperimentConfig,
    pub verdict: Verdict,
    pub rungs: Vec<SpectralResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateRecord>,
    pub timings: Vec<Timing>,
}

impl ResultRecord {
    pub fn is_complete(&self) -> bool {
        self.status == "complete"
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Runs the certificate matching the regime and curve: the log-cutoff
/// families at zero threshold, the bias-free ground state for subcritical
/// exterior bias. `None` when no family applies.
pub fn run_certificate(cfg: &ExperimentConfig) -> Result<Option<CertificateRecord>> {
    let p = cfg.params()?;
    let grid = CertificateGrid::default_for(p.alpha);
    let quad = QuadSpec::default();
    let regime = classify_regime(&p);
    let form = |family: &str, c: Option<Certificate>| CertificateRecord {
        family: family.into(),
        found: c.is_some(),
        form: c,
        prop1: None,
    };
    match (regime, cfg.curve.kind, cfg.orientation) {
        (_, CurveKind::Line, _) => Ok(None),
        (Regime::Subcritical, _, BiasOrientation::ExteriorBias) => {
            let &[h, r] = cfg.ladder.last().expect("validated ladder");
            let rep = prop1_certificate(&p, &cfg.curve, h, r, cfg.seed)?;
            Ok(Some(CertificateRecord {
                family: "bias_free_ground_state".into(),
                found: rep.certified,
                form: None,
                prop1: Some(rep),
            }))
        }
        (Regime::Subcritical, _, _) => Ok(None),
        (_, CurveKind::Wedge, o) => Ok(Some(form(
            "log_cutoff_wedge",
            theorem4_certificate(&p, &cfg.curve, o, &grid, &quad)?,
        ))),
        (_, CurveKind::FilletedWedge, o) => Ok(Some(form(
            "log_cutoff_fillet",
            theorem6_certificate(&p, &cfg.curve, o, &grid, &quad)?,
        ))),
    }
}

/// Solves every rung, forms the verdict and runs the certificate search when
/// `certify` is set or the ladder says `Absent`. A certificate rules out
/// `Absent`, which is then reported as `Inconclusive`. Search errors only
/// count when `certify` is set.
/// Failures after validation yield a partial record plus the error.
pub fn run_experiment(cfg: &ExperimentConfig) -> (ResultRecord, Option<Error>) {
    let mut rec = empty_record(cfg);
    let err = run_into(cfg, &mut rec).err();
    if let Some(e) = &err {
        rec.status = "partial".into();
        rec.error = Some(e.to_string());
    }
    (rec, err)
}

fn empty_record(cfg: &ExperimentConfig) -> ResultRecord {
    ResultRecord {
        version: env!("CARGO_PKG_VERSION").into(),
        status: "complete".into(),
        error: None,
        tol_r: 0.0,
        config: cfg.clone(),
        verdict: Verdict::Inconclusive,
        rungs: Vec::new(),
        certificate: None,
        timings: Vec::new(),
    }
}

fn run_into(cfg: &ExperimentConfig, rec: &mut ResultRecord) -> Result<()> {
    let p = cfg.params()?;
    let ladder = cfg.rungs();
    validate_ladder(&ladder)?;
    let opts = cfg.scan_options();
    for &(h, r) in &ladder {
        let t = Instant::now();
        let s = solve_rung(&p, &cfg.curve, cfg.orientation, h, r, &opts)?;
        rec.timings.push(Timing {
            stage: format!("rung h={h} R={r}"),
            seconds: t.elapsed().as_secs_f64(),
        });
        rec.rungs.push(s);
    }
    let (verdict, tol_r) = verdict_from_rungs(&rec.rungs);
    rec.verdict = verdict;
    rec.tol_r = tol_r;
    if cfg.certify || rec.verdict == Verdict::Absent {
        let t = Instant::now();
        rec.certificate = match run_certificate(cfg) {
            Ok(c) => c,
            Err(e) if cfg.certify => return Err(e),
            // unrequested search: a family that cannot run certifies nothing
            Err(_) => None,
        };
        rec.timings.push(Timing {
            stage: "certificate".into(),
            seconds: t.elapsed().as_secs_f64(),
        });
        if rec.verdict == Verdict::Absent && rec.certificate.as_ref().is_some_and(|c| c.found) {
            rec.verdict = Verdict::Inconclusive;
        }
    }
    Ok(())
}

/// One row of the versioned CSV table; describes the finest rung.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub schema_version: u32,
    pub alpha: f64,
    pub v0: f64,
    pub beta: f64,
    pub fillet_r: f64,
    pub orientation: String,
    pub h: Option<f64>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub delta_mode: String,
    pub mu: f64,
    pub lambda1: Option<f64>,
    pub count: Option<usize>,
    pub verdict: String,
    pub cert: String,
    pub seed: u64,
}

fn orientation_label(o: BiasOrientation) -> &'static str {
    match o {
        BiasOrientation::InteriorBias => "interior",
        BiasOrientation::ExteriorBias => "exterior",
    }
}

impl CsvRow {
    pub fn from_record(rec: &ResultRecord) -> Self {
        let cfg = &rec.config;
        let last = if rec.is_complete() { rec.rungs.last() } else { None };
        let mu = PhysicsParams::new(cfg.alpha, cfg.v0)
            .map(|p| essential_threshold(&p))
            .unwrap_or(f64::NAN);
        Self {
            schema_version: SCHEMA_VERSION,
            alpha: cfg.alpha,
            v0: cfg.v0,
            beta: cfg.curve.beta,
            fillet_r: cfg.curve.fillet_radius,
            orientation: orientation_label(cfg.orientation).into(),
            h: cfg.ladder.last().map(|r| r[0]),
            r: cfg.ladder.last().map(|r| r[1]),
            delta_mode: cfg.delta_mode.label(),
            mu,
            lambda1: last.map(|s| s.lambda1()),
            count: last.map(|s| s.count_below_mu_margin),
            verdict: if rec.is_complete() { rec.verdict.label().into() } else { "error".into() },
            cert: match &rec.certificate {
                Some(c) if c.found => "found".into(),
                Some(_) => "not-found".into(),
                None => String::new(),
            },
            seed: cfg.seed,
        }
    }
}

/// Writes rows with a header.
pub fn write_csv<W: Write>(w: W, rows: &[CsvRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

/// Appends rows, writing the header only when the file is new or empty.
pub fn append_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut wr = csv::WriterBuilder::new().has_headers(fresh).from_writer(f);
    for r in rows {
        wr.serialize(r).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    rd.deserialize().map(|r| r.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub struct SweepPoint {
    pub value: f64,
    pub record: ResultRecord,
    pub error: Option<Error>,
}

/// Runs the base config once per axis value on the current rayon pool;
/// results come back in input order. Points that fail validation or solving
/// are kept as partial records.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    Ok(values
        .par_iter()
        .map(|&v| {
            let cfg = base.with_axis(axis, v);
            let (record, error) = match cfg.validate() {
                Ok(()) => run_experiment(&cfg),
                Err(e) => {
                    let mut rec = empty_record(&cfg);
                    rec.status = "partial".into();
                    rec.error = Some(e.to_string());
                    (rec, Some(e))
                }
            };
            SweepPoint { value: v, record, error }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// `(h, R, λ₁)` per rung in config order.
    pub rungs: Vec<(f64, f64, f64)>,
    /// Box half-extent of the h-refinement series.
    pub series_r: f64,
    /// Observed order in `h` over the three finest spacings of the series.
    pub order: f64,
    pub extrapolated: f64,
    /// `|λ₁(R_max) - λ₁(R_prev)|` at the finest spacing of each.
    pub r_gap: f64,
    /// Analytic target when one exists (the pure Dirichlet box).
    pub exact: Option<f64>,
    pub inconclusive: bool,
}

/// Lowest Dirichlet eigenvalue `2 (π/2R)²` of the square `[-R, R]²`.
pub fn box_ground_state(half_extent: f64) -> f64 {
    2.0 * (std::f64::consts::PI / (2.0 * half_extent)).powi(2)
}

/// λ₁ per rung, observed order in `h`, Richardson value and R gap. Needs
/// three spacings at one `R` with a constant ratio and at least two `R`s.
pub fn convergence_study(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let p = cfg.params()?;
    let ladder = cfg.rungs();
    let mut rs: Vec<f64> = ladder.iter().map(|r| r.1).collect();
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    if rs.len() < 2 {
        return Err(Error::Config("convergence needs at least two box sizes".into()));
    }
    let series_r = rs
        .iter()
        .rev()
        .copied()
        .find(|&r| ladder.iter().filter(|x| x.1 == r).count() >= 3)
        .ok_or_else(|| Error::Config("convergence needs three spacings at one box size".into()))?;
    let mut series: Vec<f64> = ladder.iter().filter(|x| x.1 == series_r).map(|x| x.0).collect();
    series.sort_by(|a, b| b.total_cmp(a));
    series.dedup();
    if series.len() < 3 {
        return Err(Error::Config("convergence needs three distinct spacings".into()));
    }
    let hs = &series[series.len() - 3..];
    let ratio = hs[0] / hs[1];
    if ((hs[1] / hs[2]) / ratio - 1.0).abs() > 1e-9 {
        return Err(Error::Config("the three finest spacings must have a constant ratio".into()));
    }

    let mut rungs = Vec::with_capacity(ladder.len());
    for &(h, r) in &ladder {
        let g = Grid2D::new(r, h, cfg.origin_offset)?;
        let a = assemble_hamiltonian(&p, &cfg.curve, cfg.orientation, &g, &cfg.delta_mode)?;
        let lopts = LanczosOptions {
            seed: cfg.seed,
            ..Default::default()
        };
        let lam = lowest_eigenpairs(&a, 1, cfg.tol_resid, &lopts)?.values[0];
        rungs.push((h, r, lam));
    }
    let lam_at = |h: f64, r: f64| rungs.iter().find(|x| x.0 == h && x.1 == r).map(|x| x.2).unwrap();
    let l: Vec<f64> = hs.iter().map(|&h| lam_at(h, series_r)).collect();

    let exact = (p.alpha == 0.0 && p.v0 == 0.0).then(|| box_ground_state(series_r));
    let order = match exact {
        Some(e) => {
            // least-squares slope of ln|λ - exact| against ln h
            let pts: Vec<(f64, f64)> = hs.iter().zip(&l).map(|(h, v)| (h.ln(), (v - e).abs().ln())).collect();
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            sxy / sxx
        }
        None => ((l[0] - l[1]).abs() / (l[1] - l[2]).abs()).ln() / ratio.ln(),
    };
    let p_used = if order.is_finite() && order >= 0.7 { order } else { 1.0 };
    let extrapolated = l[2] + (l[2] - l[1]) / (ratio.powf(p_used) - 1.0);

    let finest_at = |r: f64| {
        rungs
            .iter()
            .filter(|x| x.1 == r)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|x| x.2)
            .unwrap()
    };
    let r_gap = (finest_at(rs[rs.len() - 1]) - finest_at(rs[rs.len() - 2])).abs();
    Ok(ConvergenceReport {
        rungs,
        series_r,
        order,
        extrapolated,
        r_gap,
        exact,
        inconclusive: !(order >= 0.7),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertFamily {
    Auto,
    Theorem4,
    Theorem6,
    Prop1,
    Prop2,
}

fn push_form(out: &mut String, f: &FormBreakdown) {
    let _ = writeln!(out, "kinetic = {}", f.kinetic);
    let _ = writeln!(out, "potential = {}", f.potential);
    let _ = writeln!(out, "line_term = {}", f.line_term);
    let _ = writeln!(out, "norm_sq = {}", f.norm_sq);
    let _ = writeln!(out, "total = {}", f.total);
    let _ = writeln!(out, "rel_change = {:e}", f.rel_change);
}

/// Runs one certificate family and renders its report. Returns whether a
/// certificate was found.
pub fn certify_report(cfg: &ExperimentConfig, family: CertFamily, l_len: f64, j: u32) -> Result<(bool, String)> {
    let p = cfg.params()?;
    let grid = CertificateGrid::default_for(p.alpha);
    let quad = QuadSpec::default();
    let mu = essential_threshold(&p);
    let mut out = String::new();
    let _ = writeln!(out, "mu = {mu}");
    let cert = |c: Option<Certificate>, out: &mut String| {
        if let Some(c) = &c {
            let _ = writeln!(out, "family = {}", c.family);
            let _ = writeln!(out, "a = {}", c.a);
            let _ = writeln!(out, "b = {}", c.b);
            push_form(out, &c.breakdown);
        }
        c.is_some()
    };
    let found = match family {
        CertFamily::Auto => {
            let rec = run_certificate(cfg)?.ok_or_else(|| {
                Error::InvalidParams("no certificate family applies to this regime and orientation".into())
            })?;
            let _ = writeln!(out, "family = {}", rec.family);
            if let Some(c) = &rec.form {
                let _ = writeln!(out, "a = {}", c.a);
                let _ = writeln!(out, "b = {}", c.b);
                push_form(&mut out, &c.breakdown);
            }
            if let Some(r) = &rec.prop1 {
                push_prop1(&mut out, r);
            }
            rec.found
        }
        CertFamily::Theorem4 => cert(theorem4_certificate(&p, &cfg.curve, cfg.orientation, &grid, &quad)?, &mut out),
        CertFamily::Theorem6 => cert(theorem6_certificate(&p, &cfg.curve, cfg.orientation, &grid, &quad)?, &mut out),
        CertFamily::Prop1 => {
            let &[h, r] = cfg.ladder.last().expect("validated ladder");
            let rep = prop1_certificate(&p, &cfg.curve, h, r, cfg.seed)?;
            push_prop1(&mut out, &rep);
            rep.certified
        }
        CertFamily::Prop2 => {
            let (lhs, holds) = prop2_condition(p.alpha, p.v0, cfg.curve.beta, l_len, j)?;
            let _ = writeln!(out, "condition_lhs = {lhs}");
            let trial = Trial::WedgeProduct(WedgeProductTrial::new(l_len, j)?);
            let f = evaluate_form(&trial, &p, &cfg.curve, cfg.orientation, &quad)?;
            push_form(&mut out, &f);
            let _ = writeln!(out, "trial_quotient = {}", f.rayleigh_quotient());
            holds
        }
    };
    let _ = writeln!(out, "{}", if found { "FOUND" } else { "NOT-FOUND" });
    Ok((found, out))
}

fn push_prop1(out: &mut String, r: &Prop1Report) {
    let _ = writeln!(out, "lambda0 = {}", r.lambda0);
    let _ = writeln!(out, "quotient = {}", r.quotient);
    let _ = writeln!(out, "exterior_weight = {}", r.exterior_weight);
    let _ = writeln!(out, "vc_estimate = {}", r.vc_estimate);
    let _ = writeln!(out, "vc_root = {}", r.vc_root);
}

/// Regime, threshold, closed-form bound state and the extrapolated
/// finite-difference cross-check.
pub fn transverse_report(alpha: f64, v0: f64) -> Result<String> {
    let p = PhysicsParams::new(alpha, v0)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParams("alpha must be positive".into()));
    }
    let regime = classify_regime(&p);
    let ts = transverse_bound_state(&p);
    let mu = essential_threshold(&p);
    let mut out = String::new();
    let _ = writeln!(out, "alpha = {alpha}");
    let _ = writeln!(out, "v0 = {v0}");
    let _ = writeln!(out, "regime = {regime:?}");
    let _ = writeln!(out, "mu = {mu}");
    match (ts.bound_energy, ts.kappa_minus, ts.kappa_plus) {
        (Some(e), Some(km), Some(kp)) => {
            let _ = writeln!(out, "bound_state = {e}");
            let _ = writeln!(out, "kappa_minus = {km}");
            let _ = writeln!(out, "kappa_plus = {kp}");
            let h = (0.02 / alpha).min(0.02 / v0.max(1.0).sqrt());
            let fd = transverse_fd_extrapolated(&p, h)?;
            let _ = writeln!(out, "fd_extrapolated = {fd}");
            let _ = writeln!(out, "fd_rel_error = {:e}", ((fd - e) / e).abs());
        }
        _ => {
            let _ = writeln!(out, "bound_state = none");
        }
    }
    Ok(out)
}

/// Exit status for an error: 2 for invalid input, 1 for numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParams(_)
        | Error::InvalidRegime { .. }
        | Error::InvalidGrid(_)
        | Error::Corner(_)
        | Error::Geometry(_)
        | Error::Config(_) => 2,
        Error::Breakdown { .. } | Error::NoConvergence { .. } | Error::Unresolved { .. } | Error::Io(_) => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn cfg() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(
            PhysicsParams::new(1.0, 1.0).unwrap(),
            CurveSpec::wedge(FRAC_PI_4).unwrap(),
            BiasOrientation::InteriorBias,
        );
        c.ladder = vec![[0.25, 2.0], [0.125, 2.0], [0.125, 4.0]];
        c
    }

    #[test]
    fn config_round_trip_and_defaults() {
        let c = cfg();
        let text = c.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c);
        let minimal = "alpha = 2.0\nv0 = 0.5\norientation = \"exterior_bias\"\n[curve]\nkind = \"wedge\"\nbeta = 0.5\n";
        let m = ExperimentConfig::from_toml_str(minimal).unwrap();
        assert_eq!(m.ladder, default_ladder(2.0));
        assert_eq!(m.seed, DEFAULT_SEED);
        m.validate().unwrap();
    }

    #[test]
    fn malformed_configs() {
        assert!(matches!(ExperimentConfig::from_toml_str("alpha = "), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_toml_str("alpha = 1.0\nv0 = 1.0\norientation = \"interior_bias\"\nbogus = 1\n[curve]\nkind = \"wedge\"\nbeta = 0.5\n").is_err());
        let mut c = cfg();
        c.ladder = vec![[0.3, 2.0]];
        assert!(c.validate().is_err());
        c.ladder.clear();
        assert!(c.validate().is_err());
    }

    #[test]
    fn record_round_trip_and_row() {
        let (rec, err) = run_experiment(&cfg());
        assert!(err.is_none());
        let text = rec.to_toml().unwrap();
        assert_eq!(ResultRecord::from_toml_str(&text).unwrap(), rec);
        let row = CsvRow::from_record(&rec);
        assert_eq!(row.count, Some(rec.rungs[2].count_below_mu_margin));
        assert_eq!(row.verdict, rec.verdict.label());
        let mut buf = Vec::new();
        write_csv(&mut buf, &[row]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("schema_version,alpha,v0,beta,fillet_r,orientation,h,R,delta_mode,mu,lambda1,count,verdict,cert,seed\n"));
    }

    #[test]
    fn box_order_is_two() {
        let mut c = ExperimentConfig::new(
            PhysicsParams::new(0.0, 0.0).unwrap(),
            CurveSpec::wedge(FRAC_PI_4).unwrap(),
            BiasOrientation::InteriorBias,
        );
        c.ladder = vec![[0.2, 2.0], [0.1, 2.0], [0.05, 2.0], [0.2, 1.0]];
        let r = convergence_study(&c).unwrap();
        assert!((r.order - 2.0).abs() < 0.1, "{}", r.order);
        assert!((r.extrapolated - box_ground_state(2.0)).abs() < 1e-4);
        assert!(!r.inconclusive);
        c.ladder = vec![[0.2, 2.0], [0.1, 2.0]];
        assert!(convergence_study(&c).is_err());
    }

    #[test]
    fn transverse_table() {
        let t = transverse_report(1.0, 0.5).unwrap();
        assert!(t.contains("regime = Subcritical") && t.contains("mu = -0.0625"));
        assert!(transverse_report(1.0, 1.0).unwrap().contains("bound_state = none"));
        assert!(transverse_report(2.0, 0.0).unwrap().contains("mu = -1\n"));
        assert_eq!(exit_code(&transverse_report(-1.0, 0.0).unwrap_err()), 2);
    }
}
