// SPDX-License-Identifier: Apache-2.0

//! Replicated Monte-Carlo harness: moments of hull functionals along an
//! n-grid, comparisons with limit samplers, and the verification suite.
//!
//! Every replicate samples each walk once, up to the largest horizon, and
//! evaluates all horizons on prefixes of that single path. Estimates at
//! different `n` are therefore coupled, which keeps trend comparisons quiet.

pub mod suite;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::driftgeo::{
    build_approximant, classify_drifts, gamma_diameter, ApproximantKind, DriftClassification,
    DriftError, DEFAULT_DRIFT_TOL,
};
use crate::geom2d::{
    hausdorff_distance, hull_in_place, perimeter_deviation, ConvexPolygon, Vec2,
};
use crate::limitlaws::{
    sample_icecream_limit, sample_ito_limit, sample_zero_drift_limit, HullFunctional, LimitError,
    LimitSampler, SamplerParams,
};
use crate::par::map_replicates;
use crate::walks::{Ensemble, Path, WalkError};

pub const MIN_REPLICATES: u64 = 100;
pub const MIN_KS_SAMPLE: usize = 100;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
    #[error("{what} is incompatible with this ensemble: {reason}")]
    Incompatible { what: String, reason: &'static str },
    #[error("sample of size {got} is below the minimum {min}")]
    SampleTooSmall { got: usize, min: usize },
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Drift(#[from] DriftError),
    #[error(transparent)]
    Limit(#[from] LimitError),
}

/// What the error functional is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    /// `c·μ̂ᵀS_n` with `c = 2` for the perimeter and `1` for the diameter
    /// (one walk, non-zero drift).
    Projection,
    /// The functional of the segment `[0, S_n]` (one walk).
    Segment,
    /// `Γ_μ(n, 0)` (diameter only).
    Gamma,
    /// The functional of an approximating set.
    Approximant(ApproximantKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct L2Target {
    pub functional: HullFunctional,
    pub target: TargetKind,
}

/// Per-replicate value computed at each horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    Perimeter,
    Diameter,
    HausdorffTo(ApproximantKind),
    Rho1To(ApproximantKind),
    /// Signed difference `functional(ℋ_n) − target`.
    L2Error(L2Target),
}

impl Functional {
    pub fn label(&self) -> String {
        fn kind(k: ApproximantKind) -> &'static str {
            match k {
                ApproximantKind::U => "U",
                ApproximantKind::V => "V",
                ApproximantKind::G => "G",
                ApproximantKind::A => "A",
                ApproximantKind::Gprime => "Gprime",
                ApproximantKind::Segment => "segment",
            }
        }
        fn hf(f: HullFunctional) -> &'static str {
            match f {
                HullFunctional::Perimeter => "perimeter",
                HullFunctional::Diameter => "diameter",
            }
        }
        match *self {
            Functional::Perimeter => "perimeter".into(),
            Functional::Diameter => "diameter".into(),
            Functional::HausdorffTo(k) => format!("hausdorff-to-{}", kind(k)),
            Functional::Rho1To(k) => format!("rho1-to-{}", kind(k)),
            Functional::L2Error(t) => {
                let target = match t.target {
                    TargetKind::Projection => "projection".to_string(),
                    TargetKind::Segment => "segment".to_string(),
                    TargetKind::Gamma => "gamma".to_string(),
                    TargetKind::Approximant(k) => kind(k).to_string(),
                };
                format!("{}-minus-{}", hf(t.functional), target)
            }
        }
    }
}

/// How replicate values are summarised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    Mean,
    Variance,
    SecondMoment,
    /// Empirical quantile of `|value|`.
    AbsQuantile(f64),
}

/// A requested estimate: `statistic(values) / n^scale_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub functional: Functional,
    pub statistic: Statistic,
    #[serde(default)]
    pub scale_power: f64,
    #[serde(default)]
    pub target: Option<f64>,
}

impl Quantity {
    pub fn new(functional: Functional, statistic: Statistic, scale_power: f64) -> Self {
        Quantity { functional, statistic, scale_power, target: None }
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }

    pub fn label(&self) -> String {
        let stat = match self.statistic {
            Statistic::Mean => "mean".to_string(),
            Statistic::Variance => "var".to_string(),
            Statistic::SecondMoment => "m2".to_string(),
            Statistic::AbsQuantile(q) => format!("q{q}"),
        };
        let scale = if self.scale_power == 0.0 {
            String::new()
        } else {
            format!("/n^{}", self.scale_power)
        };
        format!("{stat}[{}]{scale}", self.functional.label())
    }
}

/// Limit law to compare against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerId {
    /// Equal drifts, two walks: the Itô functional.
    Ito,
    /// Ice-cream configuration: `ζ + ξ`.
    IceCream,
    /// Max-type diameter limit.
    DiameterMax,
    /// Zero drifts: the functional of the joint Brownian hull.
    ZeroDrift(HullFunctional),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitComparison {
    pub sampler: SamplerId,
    pub replicates: u64,
    pub params: SamplerParams,
    /// Hull functional whose law at the largest horizon is compared.
    pub functional: HullFunctional,
    /// Compare `(X − mean X)/√n` with draws minus their mean (shape only);
    /// otherwise `X/√n` with raw draws.
    pub center: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub ensemble: Ensemble,
    pub n_grid: Vec<usize>,
    pub replicates: u64,
    pub quantities: Vec<Quantity>,
    #[serde(default)]
    pub limit: Option<LimitComparison>,
    #[serde(default = "default_tol")]
    pub drift_tol: f64,
}

fn default_tol() -> f64 {
    DEFAULT_DRIFT_TOL
}

impl ExperimentConfig {
    pub fn new(ensemble: Ensemble, n_grid: Vec<usize>, replicates: u64, quantities: Vec<Quantity>) -> Self {
        ExperimentConfig {
            ensemble,
            n_grid,
            replicates,
            quantities,
            limit: None,
            drift_tol: DEFAULT_DRIFT_TOL,
        }
    }

    pub fn with_limit(mut self, limit: LimitComparison) -> Self {
        self.limit = Some(limit);
        self
    }

    pub fn master_seed(&self) -> u64 {
        self.ensemble.master_seed
    }

    /// Checks the config and returns the drift classification it implies.
    pub fn validate(&self) -> Result<DriftClassification, ExperimentError> {
        self.ensemble.validate()?;
        if self.n_grid.is_empty() {
            return Err(config_err("n_grid", "must not be empty"));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config_err("n_grid", "must be positive and strictly ascending"));
        }
        if self.replicates < MIN_REPLICATES {
            return Err(config_err("replicates", format!("must be at least {MIN_REPLICATES}")));
        }
        if self.quantities.is_empty() {
            return Err(config_err("quantities", "must not be empty"));
        }
        let cls = classify_drifts(&self.ensemble.drifts(), self.drift_tol)?;
        for q in &self.quantities {
            if let Statistic::AbsQuantile(p) = q.statistic {
                if !(p > 0.0 && p < 1.0) {
                    return Err(config_err("quantities", "quantile level must lie in (0, 1)"));
                }
            }
            check_functional(&q.functional, &self.ensemble, &cls)?;
        }
        if let Some(lim) = &self.limit {
            if lim.replicates < MIN_KS_SAMPLE as u64 {
                return Err(config_err("limit.replicates", format!("must be at least {MIN_KS_SAMPLE}")));
            }
            check_sampler(lim, &self.ensemble, &cls)?;
        }
        Ok(cls)
    }
}

fn config_err(field: &'static str, reason: impl Into<String>) -> ExperimentError {
    ExperimentError::Config { field, reason: reason.into() }
}

fn incompatible(what: impl Into<String>, reason: &'static str) -> ExperimentError {
    ExperimentError::Incompatible { what: what.into(), reason }
}

fn check_functional(
    f: &Functional,
    ens: &Ensemble,
    cls: &DriftClassification,
) -> Result<(), ExperimentError> {
    let check_kind = |k: ApproximantKind| {
        if k == ApproximantKind::Segment && ens.len() != 1 {
            return Err(incompatible(f.label(), "the segment approximant needs exactly one walk"));
        }
        if k == ApproximantKind::A && cls.chords().is_empty() {
            return Err(incompatible(f.label(), "the diameter approximant needs a chord"));
        }
        Ok(())
    };
    match *f {
        Functional::Perimeter | Functional::Diameter => Ok(()),
        Functional::HausdorffTo(k) | Functional::Rho1To(k) => check_kind(k),
        Functional::L2Error(t) => match t.target {
            TargetKind::Projection => {
                if ens.len() != 1 {
                    return Err(incompatible(f.label(), "the projection target needs exactly one walk"));
                }
                if ens.walks[0].mu.normalized().is_none() {
                    return Err(incompatible(f.label(), "the projection target needs a non-zero drift"));
                }
                Ok(())
            }
            TargetKind::Segment => check_kind(ApproximantKind::Segment),
            TargetKind::Gamma => {
                if t.functional != HullFunctional::Diameter {
                    return Err(incompatible(f.label(), "Γ approximates the diameter only"));
                }
                if cls.chords().is_empty() {
                    return Err(incompatible(f.label(), "Γ needs a chord"));
                }
                Ok(())
            }
            TargetKind::Approximant(k) => check_kind(k),
        },
    }
}

fn check_sampler(
    lim: &LimitComparison,
    ens: &Ensemble,
    cls: &DriftClassification,
) -> Result<(), ExperimentError> {
    let what = format!("{:?} sampler", lim.sampler);
    match lim.sampler {
        SamplerId::Ito => {
            let d = ens.drifts();
            if d.len() != 2 || d[0].normalized().is_none() || d[0] != d[1] {
                return Err(incompatible(what, "needs two walks with equal non-zero drifts"));
            }
            if lim.functional != HullFunctional::Perimeter {
                return Err(incompatible(what, "describes the perimeter"));
            }
        }
        SamplerId::IceCream => {
            let d = ens.drifts();
            if d.len() != 2 || d[0].normalized().is_none() || d[1] != Vec2::ZERO {
                return Err(incompatible(what, "needs walk 1 drifted and walk 2 driftless"));
            }
            if lim.functional != HullFunctional::Perimeter {
                return Err(incompatible(what, "describes the perimeter"));
            }
        }
        SamplerId::DiameterMax => {
            if cls.chords().is_empty() {
                return Err(incompatible(what, "needs a chord"));
            }
            if lim.functional != HullFunctional::Diameter {
                return Err(incompatible(what, "describes the diameter"));
            }
        }
        SamplerId::ZeroDrift(f) => {
            if ens.drifts().iter().any(|m| *m != Vec2::ZERO) {
                return Err(incompatible(what, "needs all drifts zero"));
            }
            if f != lim.functional {
                return Err(incompatible(what, "sampler and compared functional differ"));
            }
        }
    }
    Ok(())
}

/// Two-sample Kolmogorov–Smirnov comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KSResult {
    pub statistic: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// Asymptotic 5% critical value `1.358·√((n_a+n_b)/(n_a·n_b))`.
    pub critical_5pct: f64,
    pub reject_5pct: bool,
}

/// `sup_x |F_a(x) − F_b(x)|` by a merge scan over the sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KSResult, ExperimentError> {
    for s in [a, b] {
        if s.len() < MIN_KS_SAMPLE {
            return Err(ExperimentError::SampleTooSmall { got: s.len(), min: MIN_KS_SAMPLE });
        }
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_unstable_by(f64::total_cmp);
    y.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        // Step past every copy of the smaller value in both samples.
        let v = x[i].min(y[j]);
        while i < na && x[i] <= v {
            i += 1;
        }
        while j < nb && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let statistic = d.clamp(0.0, 1.0);
    let critical_5pct = 1.358 * (((na + nb) as f64) / (na as f64 * nb as f64)).sqrt();
    Ok(KSResult { statistic, n_a: na, n_b: nb, critical_5pct, reject_5pct: statistic > critical_5pct })
}

/// Sample moments with plug-in standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    pub second_moment: f64,
    pub stderr_mean: f64,
    /// From the fourth central moment: `Var(s²) ≈ (m₄ − s⁴(R−3)/(R−1))/R`.
    pub stderr_variance: f64,
    pub stderr_second_moment: f64,
}

impl Moments {
    pub fn of(x: &[f64]) -> Moments {
        let r = x.len();
        assert!(r >= 2, "need at least two values");
        let rf = r as f64;
        let mean = x.iter().sum::<f64>() / rf;
        let (mut m2, mut m4) = (0.0, 0.0);
        for &v in x {
            let d = (v - mean) * (v - mean);
            m2 += d;
            m4 += d * d;
        }
        m4 /= rf;
        let variance = m2 / (rf - 1.0);
        let var_s2 = ((m4 - variance * variance * (rf - 3.0) / (rf - 1.0)) / rf).max(0.0);
        let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
        let second_moment = sq.iter().sum::<f64>() / rf;
        let sq_var = sq.iter().map(|s| (s - second_moment).powi(2)).sum::<f64>() / (rf - 1.0);
        Moments {
            count: r,
            mean,
            variance,
            second_moment,
            stderr_mean: (variance / rf).sqrt(),
            stderr_variance: var_s2.sqrt(),
            stderr_second_moment: (sq_var / rf).sqrt(),
        }
    }
}

/// Quantile of `|x|` (type-7 interpolation) with a distribution-free
/// standard error from the order statistics at `qR ± √(Rq(1−q))`.
pub fn abs_quantile(x: &[f64], q: f64) -> (f64, f64) {
    let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    a.sort_unstable_by(f64::total_cmp);
    let r = a.len();
    let at = |pos: f64| {
        let pos = pos.clamp(0.0, (r - 1) as f64);
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        a[lo] + (a[hi] - a[lo]) * (pos - lo as f64)
    };
    let centre = q * (r - 1) as f64;
    let half = (r as f64 * q * (1.0 - q)).sqrt();
    (at(centre), 0.5 * (at(centre + half) - at(centre - half)))
}

/// One row of an [`EstimatorReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRow {
    pub quantity: Quantity,
    pub label: String,
    pub n: usize,
    pub moments: Moments,
    pub estimate: f64,
    pub stderr: f64,
    pub target: Option<f64>,
    pub z: Option<f64>,
}

impl EstimatorRow {
    pub fn relative_error(&self) -> Option<f64> {
        self.target.map(|t| (self.estimate - t).abs() / t.abs().max(f64::MIN_POSITIVE))
    }
}

/// Summary of the limit-law draws and their KS distance to the rescaled
/// functional at the largest horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub draws: Moments,
    pub ks: KSResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub rows: Vec<EstimatorRow>,
    pub limit: Option<LimitReport>,
    /// Set for conjecture checks: no pass/fail semantics.
    pub exploratory: bool,
}

impl EstimatorReport {
    /// Rows with the given label, in n-grid order.
    pub fn series(&self, label: &str) -> Vec<&EstimatorRow> {
        self.rows.iter().filter(|r| r.label == label).collect()
    }

    pub fn estimates(&self, label: &str) -> Vec<f64> {
        self.series(label).iter().map(|r| r.estimate).collect()
    }
}

/// Raw replicate values: `values[q][k][r]` for quantity `q`, horizon
/// `n_grid[k]` and replicate `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub n_grid: Vec<usize>,
    pub values: Vec<Vec<Vec<f64>>>,
    /// Perimeter and diameter of ℋ at the largest horizon, per replicate.
    pub last_hull: Vec<(f64, f64)>,
}

struct Horizon<'a> {
    paths: Vec<&'a [Vec2]>,
    hull: &'a ConvexPolygon,
    cls: &'a DriftClassification,
    cache: Vec<(ApproximantKind, ConvexPolygon)>,
}

impl<'a> Horizon<'a> {
    fn approximant(&mut self, kind: ApproximantKind) -> ConvexPolygon {
        if let Some((_, p)) = self.cache.iter().find(|(k, _)| *k == kind) {
            return p.clone();
        }
        let p = build_approximant(&self.paths, self.cls, kind).expect("validated approximant");
        self.cache.push((kind, p.clone()));
        p
    }

    fn eval(&mut self, f: &Functional, ens: &Ensemble) -> f64 {
        match *f {
            Functional::Perimeter => HullFunctional::Perimeter.eval(self.hull),
            Functional::Diameter => HullFunctional::Diameter.eval(self.hull),
            Functional::HausdorffTo(k) => hausdorff_distance(self.hull, &self.approximant(k)),
            Functional::Rho1To(k) => perimeter_deviation(self.hull, &self.approximant(k)),
            Functional::L2Error(t) => {
                let value = t.functional.eval(self.hull);
                let target = match t.target {
                    TargetKind::Projection => {
                        let dir = ens.walks[0].mu.normalized().expect("validated drift");
                        let end = *self.paths[0].last().expect("nonempty path");
                        let c = match t.functional {
                            HullFunctional::Perimeter => 2.0,
                            HullFunctional::Diameter => 1.0,
                        };
                        c * dir.dot(end)
                    }
                    TargetKind::Segment => t.functional.eval(&self.approximant(ApproximantKind::Segment)),
                    TargetKind::Gamma => gamma_diameter(&self.paths, self.cls).expect("validated chords"),
                    TargetKind::Approximant(k) => t.functional.eval(&self.approximant(k)),
                };
                value - target
            }
        }
    }
}

/// Values of every quantity at every horizon for one replicate.
fn simulate_replicate(
    cfg: &ExperimentConfig,
    cls: &DriftClassification,
    replicate: u64,
) -> (Vec<Vec<f64>>, (f64, f64)) {
    let n_max = *cfg.n_grid.last().expect("validated grid");
    let paths: Vec<Path> = cfg.ensemble.sample(n_max, replicate);
    let mut out = vec![Vec::with_capacity(cfg.n_grid.len()); cfg.quantities.len()];
    // Incremental hull: hull(prefix n') = hull(hull(prefix n) ∪ new points).
    let mut acc: Vec<Vec2> = Vec::new();
    let mut from = 0usize;
    let mut last = (0.0, 0.0);
    for &n in &cfg.n_grid {
        let mut pts = std::mem::take(&mut acc);
        for p in &paths {
            pts.extend_from_slice(&p.positions()[from..=n]);
        }
        let hull = hull_in_place(&mut pts);
        from = n + 1;
        let mut h = Horizon {
            paths: paths.iter().map(|p| p.prefix(n)).collect(),
            hull: &hull,
            cls,
            cache: Vec::new(),
        };
        for (q, quantity) in cfg.quantities.iter().enumerate() {
            out[q].push(h.eval(&quantity.functional, &cfg.ensemble));
        }
        last = (HullFunctional::Perimeter.eval(&hull), HullFunctional::Diameter.eval(&hull));
        acc = hull.into_vertices();
    }
    (out, last)
}

/// Raw replicate values, deterministic for a given seed at any thread count.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Samples, ExperimentError> {
    let cls = cfg.validate()?;
    let per_rep = map_replicates(cfg.replicates, |r| simulate_replicate(cfg, &cls, r));
    let (nq, nk) = (cfg.quantities.len(), cfg.n_grid.len());
    let mut values = vec![vec![Vec::with_capacity(per_rep.len()); nk]; nq];
    let mut last_hull = Vec::with_capacity(per_rep.len());
    for (rep, last) in per_rep {
        for (q, series) in rep.into_iter().enumerate() {
            for (k, v) in series.into_iter().enumerate() {
                values[q][k].push(v);
            }
        }
        last_hull.push(last);
    }
    Ok(Samples { n_grid: cfg.n_grid.clone(), values, last_hull })
}

fn summarise(quantity: &Quantity, n: usize, x: &[f64]) -> EstimatorRow {
    let m = Moments::of(x);
    let scale = (n as f64).powf(quantity.scale_power);
    let (raw, raw_se) = match quantity.statistic {
        Statistic::Mean => (m.mean, m.stderr_mean),
        Statistic::Variance => (m.variance, m.stderr_variance),
        Statistic::SecondMoment => (m.second_moment, m.stderr_second_moment),
        Statistic::AbsQuantile(q) => abs_quantile(x, q),
    };
    let estimate = raw / scale;
    let stderr = raw_se / scale;
    let z = quantity.target.map(|t| z_score(estimate, t, stderr));
    EstimatorRow {
        quantity: *quantity,
        label: quantity.label(),
        n,
        moments: m,
        estimate,
        stderr,
        target: quantity.target,
        z,
    }
}

/// `(estimate − target)/stderr`, with a zero stderr giving `0` on an exact
/// hit and `±∞` otherwise.
pub fn z_score(estimate: f64, target: f64, stderr: f64) -> f64 {
    let d = estimate - target;
    if stderr > 0.0 {
        d / stderr
    } else if d == 0.0 {
        0.0
    } else {
        d.signum() * f64::INFINITY
    }
}

/// Draws from the configured limit law.
pub fn limit_draws(
    lim: &LimitComparison,
    ens: &Ensemble,
    cls: &DriftClassification,
) -> Result<Vec<f64>, ExperimentError> {
    let p = lim.params;
    let sigmas = ens.sigmas();
    let draws: Vec<Result<f64, LimitError>> = match lim.sampler {
        SamplerId::Ito => map_replicates(lim.replicates, |r| {
            sample_ito_limit(&sigmas[0], &sigmas[1], &p, r)
        }),
        SamplerId::IceCream => {
            let mu = ens.walks[0].mu;
            map_replicates(lim.replicates, |r| {
                sample_icecream_limit(mu, &sigmas[0], &sigmas[1], &p, r).map(|d| d.zeta + d.xi)
            })
        }
        SamplerId::DiameterMax => {
            let s = LimitSampler::new(cls, &sigmas, p)?;
            map_replicates(lim.replicates, |r| Ok(s.sample(r)))
        }
        SamplerId::ZeroDrift(f) => {
            map_replicates(lim.replicates, |r| sample_zero_drift_limit(&sigmas, f, &p, r))
        }
    };
    Ok(draws.into_iter().collect::<Result<Vec<_>, _>>()?)
}

fn centred(x: &[f64]) -> Vec<f64> {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - m).collect()
}

pub fn summarise_samples(cfg: &ExperimentConfig, samples: &Samples) -> Vec<EstimatorRow> {
    let mut rows = Vec::new();
    for (q, quantity) in cfg.quantities.iter().enumerate() {
        for (k, &n) in samples.n_grid.iter().enumerate() {
            rows.push(summarise(quantity, n, &samples.values[q][k]));
        }
    }
    rows
}

/// Runs the simulation, summarises each quantity along the grid and, if
/// requested, compares with the limit law.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EstimatorReport, ExperimentError> {
    let cls = cfg.validate()?;
    let samples = simulate(cfg)?;
    let rows = summarise_samples(cfg, &samples);
    let limit = match &cfg.limit {
        None => None,
        Some(lim) => {
            let n = *cfg.n_grid.last().expect("validated grid") as f64;
            let observed: Vec<f64> = samples
                .last_hull
                .iter()
                .map(|&(l, d)| match lim.functional {
                    HullFunctional::Perimeter => l,
                    HullFunctional::Diameter => d,
                } / n.sqrt())
                .collect();
            let draws = limit_draws(lim, &cfg.ensemble, &cls)?;
            let ks = if lim.center {
                ks_two_sample(&centred(&observed), &centred(&draws))?
            } else {
                ks_two_sample(&observed, &draws)?
            };
            Some(LimitReport { draws: Moments::of(&draws), ks })
        }
    };
    Ok(EstimatorReport { rows, limit, exploratory: false })
}

/// `E[(functional − target)²]/n` along the grid.
pub fn l2_error_curve(
    cfg: &ExperimentConfig,
    target: L2Target,
) -> Result<EstimatorReport, ExperimentError> {
    let mut c = cfg.clone();
    c.limit = None;
    c.quantities = vec![Quantity::new(Functional::L2Error(target), Statistic::SecondMoment, 1.0)];
    run_experiment(&c)
}

/// Empirical 0.95-quantile of `n^{-1/2}|L_n − perim 𝒢′_n|` along the grid.
/// Exploratory: the limit statement is conjectural.
pub fn conjecture_check(cfg: &ExperimentConfig) -> Result<EstimatorReport, ExperimentError> {
    if cfg.ensemble.len() < 2 {
        return Err(incompatible("conjecture check", "needs at least two walks"));
    }
    let mut c = cfg.clone();
    c.limit = None;
    c.quantities = vec![Quantity::new(
        Functional::L2Error(L2Target {
            functional: HullFunctional::Perimeter,
            target: TargetKind::Approximant(ApproximantKind::Gprime),
        }),
        Statistic::AbsQuantile(0.95),
        0.5,
    )];
    let mut report = run_experiment(&c)?;
    report.exploratory = true;
    Ok(report)
}

/// `true` if `|x|` strictly decreases along the slice.
pub fn strictly_decreasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom2d::Mat2;
    use crate::par::with_threads;
    use crate::rng::{stream_rng, Domain};
    use crate::walks::{joint_hull, IncrementLaw};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn ensemble(drifts: &[Vec2], seed: u64) -> Ensemble {
        let d: Vec<(Vec2, Mat2)> = drifts.iter().map(|&m| (m, Mat2::IDENTITY)).collect();
        Ensemble::from_drifts(&d, IncrementLaw::Gaussian, seed).unwrap()
    }

    fn normals(seed: u64, count: usize, shift: f64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0, 0, Domain::Aux(0));
        (0..count).map(|_| rng.sample::<f64, _>(StandardNormal) + shift).collect()
    }

    #[test]
    fn ks_identical_samples_is_zero() {
        let a = normals(1, 500, 0.0);
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(!r.reject_5pct);
    }

    #[test]
    fn ks_detects_shift_and_accepts_null() {
        let a = normals(2, 10_000, 0.0);
        let b = normals(3, 10_000, 0.0);
        let c = normals(4, 10_000, 1.0);
        assert!(ks_two_sample(&a, &b).unwrap().statistic < 0.03);
        // Φ(x) − Φ(x − 1) peaks at 2Φ(½) − 1 ≈ 0.383.
        let shifted = ks_two_sample(&a, &c).unwrap().statistic;
        assert!(shifted > 0.3 && shifted < 0.45, "{shifted}");
    }

    #[test]
    fn ks_null_calibration() {
        // Under the null the statistic stays below 0.03 for 10⁴ vs 10⁴ with
        // probability well above 0.99 (the 1% critical value is 0.023).
        let hits = (0..40)
            .filter(|&s| {
                let a = normals(100 + 2 * s, 10_000, 0.0);
                let b = normals(101 + 2 * s, 10_000, 0.0);
                ks_two_sample(&a, &b).unwrap().statistic < 0.03
            })
            .count();
        assert_eq!(hits, 40);
    }

    #[test]
    fn ks_rejects_small_samples() {
        assert!(matches!(
            ks_two_sample(&[0.0; 50], &[0.0; 200]),
            Err(ExperimentError::SampleTooSmall { got: 50, .. })
        ));
    }

    #[test]
    fn ks_matches_brute_force() {
        let a = normals(5, 300, 0.0);
        let b = normals(6, 400, 0.2);
        let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        let brute = a
            .iter()
            .chain(b.iter())
            .map(|&x| (cdf(&a, x) - cdf(&b, x)).abs())
            .fold(0.0, f64::max);
        assert!((ks_two_sample(&a, &b).unwrap().statistic - brute).abs() < 1e-15);
    }

    #[test]
    fn moments_of_known_sample() {
        let m = Moments::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((m.second_moment - 7.5).abs() < 1e-15);
        assert!(m.stderr_mean > 0.0 && m.stderr_variance > 0.0);
    }

    #[test]
    fn variance_stderr_matches_gaussian_theory() {
        // For N(0,1): sd(s²) ≈ √(2/R).
        let x = normals(7, 20_000, 0.0);
        let m = Moments::of(&x);
        let theory = (2.0 / 20_000.0f64).sqrt();
        assert!((m.stderr_variance / theory - 1.0).abs() < 0.1);
    }

    #[test]
    fn config_validation() {
        let e = ensemble(&[Vec2::new(0.0, 1.0)], 0);
        let q = vec![Quantity::new(Functional::Perimeter, Statistic::Mean, 0.0)];
        let ok = ExperimentConfig::new(e.clone(), vec![10, 20], 100, q.clone());
        assert!(ok.validate().is_ok());
        let bad = ExperimentConfig::new(e.clone(), vec![20, 10], 100, q.clone());
        assert!(matches!(bad.validate(), Err(ExperimentError::Config { field: "n_grid", .. })));
        let few = ExperimentConfig::new(e.clone(), vec![10], 99, q.clone());
        assert!(matches!(few.validate(), Err(ExperimentError::Config { field: "replicates", .. })));

        let two = ensemble(&[Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)], 0);
        let seg = Quantity::new(
            Functional::L2Error(L2Target {
                functional: HullFunctional::Diameter,
                target: TargetKind::Segment,
            }),
            Statistic::SecondMoment,
            1.0,
        );
        let c = ExperimentConfig::new(two, vec![10], 100, vec![seg]);
        assert!(matches!(c.validate(), Err(ExperimentError::Incompatible { .. })));

        let zero = ensemble(&[Vec2::ZERO], 0);
        let proj = Quantity::new(
            Functional::L2Error(L2Target {
                functional: HullFunctional::Perimeter,
                target: TargetKind::Projection,
            }),
            Statistic::SecondMoment,
            1.0,
        );
        let c = ExperimentConfig::new(zero, vec![10], 100, vec![proj]);
        assert!(matches!(c.validate(), Err(ExperimentError::Incompatible { .. })));
    }

    #[test]
    fn prefix_reuse_matches_recomputation() {
        let e = ensemble(&[Vec2::new(0.3, 1.0), Vec2::ZERO, Vec2::new(-1.0, 0.2)], 11);
        let quantities = vec![
            Quantity::new(Functional::Perimeter, Statistic::Mean, 0.0),
            Quantity::new(Functional::Diameter, Statistic::Mean, 0.0),
            Quantity::new(Functional::HausdorffTo(ApproximantKind::G), Statistic::Mean, 0.0),
        ];
        let cfg = ExperimentConfig::new(e.clone(), vec![7, 40, 200], 100, quantities);
        let s = simulate(&cfg).unwrap();
        let cls = cfg.validate().unwrap();
        for r in [0u64, 17, 99] {
            for (k, &n) in cfg.n_grid.iter().enumerate() {
                // Fresh paths of exactly n steps share the prefix of the long path.
                let paths = e.sample(n, r);
                let refs: Vec<&[Vec2]> = paths.iter().map(|p| p.positions()).collect();
                let h = joint_hull(&refs).unwrap();
                let g = build_approximant(&refs, &cls, ApproximantKind::G).unwrap();
                assert!((s.values[0][k][r as usize] - crate::geom2d::perimeter(&h)).abs() < 1e-9);
                assert!((s.values[1][k][r as usize] - crate::geom2d::diameter(&h)).abs() < 1e-9);
                assert!((s.values[2][k][r as usize] - hausdorff_distance(&h, &g)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let e = ensemble(&[Vec2::new(0.0, 1.0), Vec2::new(0.0, 1.0)], 5);
        let cfg = ExperimentConfig::new(
            e,
            vec![50, 100],
            200,
            vec![Quantity::new(Functional::Perimeter, Statistic::Variance, 1.0)],
        );
        let one = with_threads(1, || run_experiment(&cfg).unwrap());
        let three = with_threads(3, || run_experiment(&cfg).unwrap());
        assert_eq!(one, three);
        assert_eq!(one, run_experiment(&cfg).unwrap());
    }

    #[test]
    fn one_walk_diameter_variance() {
        // n⁻¹Var D_n → μ̂ᵀΣμ̂ = 1.
        let e = ensemble(&[Vec2::new(0.0, 1.0)], 21);
        let cfg = ExperimentConfig::new(
            e,
            vec![2000],
            4000,
            vec![Quantity::new(Functional::Diameter, Statistic::Variance, 1.0).with_target(1.0)],
        );
        let r = run_experiment(&cfg).unwrap();
        let row = &r.rows[0];
        assert!(row.relative_error().unwrap() < 0.08, "{row:?}");
        assert!(row.z.unwrap().abs() < 4.0, "{row:?}");
    }

    #[test]
    fn zero_drift_perimeter_mean() {
        // E L_n/√n → √(8π) for Σ = I; the walk hull sits a little inside
        // the Brownian one at moderate n.
        let e = ensemble(&[Vec2::ZERO], 22);
        let cfg = ExperimentConfig::new(
            e,
            vec![4000],
            1000,
            vec![Quantity::new(Functional::Perimeter, Statistic::Mean, 0.5)],
        );
        let r = run_experiment(&cfg).unwrap();
        let est = r.rows[0].estimate;
        let target = (8.0 * std::f64::consts::PI).sqrt();
        assert!((est / target - 1.0).abs() < 0.03, "{est}");
    }

    #[test]
    fn projection_l2_error_decays() {
        let e = ensemble(&[Vec2::new(0.0, 1.0)], 23);
        let cfg = ExperimentConfig::new(
            e,
            vec![100, 1000, 10_000],
            400,
            vec![Quantity::new(Functional::Perimeter, Statistic::Mean, 0.0)],
        );
        let target = L2Target { functional: HullFunctional::Perimeter, target: TargetKind::Projection };
        let r = l2_error_curve(&cfg, target).unwrap();
        let est: Vec<f64> = r.rows.iter().map(|r| r.estimate).collect();
        assert!(strictly_decreasing(&est), "{est:?}");
        assert!(est[2] < 0.05 * est[0], "{est:?}");
    }

    #[test]
    fn gamma_l2_error_decays_icecream() {
        let e = ensemble(&[Vec2::new(0.0, 1.0), Vec2::ZERO], 24);
        let cfg = ExperimentConfig::new(
            e,
            vec![100, 1000, 10_000],
            300,
            vec![Quantity::new(Functional::Diameter, Statistic::Mean, 0.0)],
        );
        let target = L2Target { functional: HullFunctional::Diameter, target: TargetKind::Gamma };
        let r = l2_error_curve(&cfg, target).unwrap();
        let est: Vec<f64> = r.rows.iter().map(|r| r.estimate).collect();
        assert!(strictly_decreasing(&est), "{est:?}");
        assert!(est[2] < 0.05 * est[0], "{est:?}");
    }

    #[test]
    fn segment_error_persists_without_drift() {
        let e = ensemble(&[Vec2::ZERO], 25);
        let cfg = ExperimentConfig::new(
            e,
            vec![100, 1000, 5000],
            300,
            vec![Quantity::new(Functional::Diameter, Statistic::Mean, 0.0)],
        );
        let target = L2Target { functional: HullFunctional::Diameter, target: TargetKind::Segment };
        let r = l2_error_curve(&cfg, target).unwrap();
        assert!(r.rows.iter().all(|row| row.estimate > 0.1), "{:?}", r.rows);
    }

    #[test]
    fn conjecture_check_zero_interior_decays() {
        let e = ensemble(
            &[Vec2::new(1.0, 0.0), Vec2::new(-0.5, 0.8), Vec2::new(-0.5, -0.9)],
            26,
        );
        let cfg = ExperimentConfig::new(
            e,
            vec![100, 1000, 10_000, 100_000],
            200,
            vec![Quantity::new(Functional::Perimeter, Statistic::Mean, 0.0)],
        );
        let r = conjecture_check(&cfg).unwrap();
        assert!(r.exploratory);
        // The gap is O(1), so the rescaled quantile falls like n^{-1/2}.
        let est: Vec<f64> = r.rows.iter().map(|r| r.estimate).collect();
        assert!(strictly_decreasing(&est), "{est:?}");
        assert!(est[3] < 0.05 * est[0], "{est:?}");
    }

    #[test]
    fn conjecture_check_needs_two_walks() {
        let e = ensemble(&[Vec2::new(0.0, 1.0)], 0);
        let cfg = ExperimentConfig::new(
            e,
            vec![10],
            100,
            vec![Quantity::new(Functional::Perimeter, Statistic::Mean, 0.0)],
        );
        assert!(matches!(conjecture_check(&cfg), Err(ExperimentError::Incompatible { .. })));
    }

    #[test]
    fn abs_quantile_of_uniform_grid() {
        let x: Vec<f64> = (0..=1000).map(|i| -(i as f64) / 1000.0).collect();
        let (q, se) = abs_quantile(&x, 0.95);
        assert!((q - 0.95).abs() < 1e-12);
        assert!(se > 0.0 && se < 0.01);
    }

    #[test]
    fn config_json_round_trip() {
        let e = ensemble(&[Vec2::new(0.0, 1.0), Vec2::ZERO], 9);
        let cfg = ExperimentConfig::new(
            e,
            vec![10, 100],
            100,
            vec![
                Quantity::new(Functional::HausdorffTo(ApproximantKind::G), Statistic::SecondMoment, 1.0),
                Quantity::new(
                    Functional::L2Error(L2Target {
                        functional: HullFunctional::Diameter,
                        target: TargetKind::Gamma,
                    }),
                    Statistic::SecondMoment,
                    1.0,
                )
                .with_target(0.0),
            ],
        );
        let s = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(cfg, back);
    }
}
