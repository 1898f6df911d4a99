// SPDX-License-Identifier: Apache-2.0

//! Limit constants and samplers for the limit laws of hull diameter and
//! perimeter: Gaussian chord families, reflected minima, Brownian hull
//! functionals and the equal-drift Itô functional.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::driftgeo::{ChordClass, Chord, DriftClassification, DriftError};
use crate::geom2d::{diameter, perimeter, semi_perimeter, ConvexPolygon, GeomError, Mat2, Vec2};
use crate::quadrature::GaussLegendre;
use crate::rng::{stream_rng, Domain};
use crate::walks::joint_hull;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("direction is not a unit vector (norm {0})")]
    NonUnitDirection(f64),
    #[error("argument {0} outside [-1, 1]")]
    OutOfDomain(f64),
    #[error("hypothesis violated: {0}")]
    Hypothesis(&'static str),
    #[error("expected {expected} covariance matrices, got {got}")]
    SigmaCount { expected: usize, got: usize },
    #[error("covariance matrix is not symmetric positive semi-definite")]
    InvalidCovariance,
    #[error("chord covariance is not positive semi-definite (pivot {0:e})")]
    NotPsd(f64),
    #[error("discretization parameters must be positive")]
    BadDiscretization,
    #[error(transparent)]
    Drift(#[from] DriftError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// `μ̂ᵀΣμ̂`, the variance of the increment along a unit direction.
pub fn spara(mu_hat: Vec2, sigma: &Mat2) -> Result<f64, LimitError> {
    let n = mu_hat.norm();
    if (n - 1.0).abs() > 1e-12 {
        return Err(LimitError::NonUnitDirection(n));
    }
    Ok(sigma.quad(mu_hat).max(0.0))
}

/// `g(u) = arcsin u + (√(1 − u²) − 1)/u`, `g(0) = 0`.
pub fn g_arcsin(u: f64) -> Result<f64, LimitError> {
    if !(-1.0..=1.0).contains(&u) {
        return Err(LimitError::OutOfDomain(u));
    }
    Ok(g_with_root(u, (1.0 - u * u).max(0.0).sqrt()))
}

/// `g` with `√(1 − u²)` supplied by the caller, who can often compute it
/// without cancellation.
#[inline]
pub(crate) fn g_with_root(u: f64, root: f64) -> f64 {
    if u.abs() < 1e-4 {
        let u2 = u * u;
        return u * (0.5 + u2 * (1.0 / 24.0 + u2 / 80.0));
    }
    u.atan2(root) + (root - 1.0) / u
}

/// Joint law of the Gaussian chord limits `ζ_e` over plus and circ chords.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianChordStructure {
    pub chords: Vec<Chord>,
    pub covariance: Vec<Vec<f64>>,
}

impl GaussianChordStructure {
    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        self.chords.iter().position(|c| c.i == i && c.j == j)
    }
}

/// Signed walk coefficients and unit direction of a chord; label 0 (the
/// origin) carries no walk.
fn chord_terms(cls: &DriftClassification, c: &Chord) -> (Vec<(usize, f64)>, Vec2) {
    let dir = cls.chord_direction(c.i, c.j).expect("diametrical chords have non-zero length");
    let walks = if c.i == 0 { vec![(c.j, 1.0)] } else { vec![(c.i, 1.0), (c.j, -1.0)] };
    (walks, dir)
}

fn labelled_sigmas(cls: &DriftClassification, sigmas: &[Mat2]) -> Result<Vec<Mat2>, LimitError> {
    if sigmas.len() != cls.walks() {
        return Err(LimitError::SigmaCount { expected: cls.walks(), got: sigmas.len() });
    }
    if sigmas.iter().any(|s| !s.is_covariance()) {
        return Err(LimitError::InvalidCovariance);
    }
    let mut out = vec![Mat2::ZERO];
    out.extend(cls.relabel(sigmas));
    Ok(out)
}

/// Covariance of `ζ_e = lim μ̂_eᵀ S_n^{(e)}/√n` by bilinear expansion, where
/// `S^{(i,j)} = S^{(i)} − S^{(j)}` and `S^{(0,j)} = S^{(j)}`. `sigmas` are in
/// input order.
pub fn zeta_structure(
    cls: &DriftClassification,
    sigmas: &[Mat2],
) -> Result<GaussianChordStructure, LimitError> {
    let sig = labelled_sigmas(cls, sigmas)?;
    let chords: Vec<Chord> =
        cls.chords().into_iter().filter(|c| c.class != ChordClass::Times).collect();
    let terms: Vec<_> = chords.iter().map(|c| chord_terms(cls, c)).collect();
    let m = chords.len();
    let mut covariance = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in 0..m {
            let (wa, da) = &terms[a];
            let (wb, db) = &terms[b];
            let mut s = 0.0;
            for &(w, ca) in wa {
                for &(v, cb) in wb {
                    if w == v {
                        s += ca * cb * sig[w].bilinear(*da, *db);
                    }
                }
            }
            covariance[a][b] = s;
        }
    }
    Ok(GaussianChordStructure { chords, covariance })
}

/// Lower Cholesky factor; pivots down to `−1e−10·scale` are treated as zero.
pub fn cholesky_psd(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, LimitError> {
    let m = a.len();
    let scale = (0..m).map(|i| a[i][i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let jitter = 1e-10 * scale;
    let mut l = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d < -jitter {
                    return Err(LimitError::NotPsd(d));
                }
                l[i][i] = d.max(0.0).sqrt();
            } else {
                l[i][j] = if l[j][j] > jitter.sqrt() { (a[i][j] - s) / l[j][j] } else { 0.0 };
            }
        }
    }
    Ok(l)
}

/// Limit of `n⁻¹ Var L_n` when the origin is interior to the drift polygon:
/// `Σ_k (μ̂_{k,k+1} − μ̂_{k−1,k})ᵀ Σ_k (μ̂_{k,k+1} − μ̂_{k−1,k})` over boundary
/// drifts in anticlockwise order. `sigmas` in input order.
pub fn clt_variance_zero_interior(
    cls: &DriftClassification,
    sigmas: &[Mat2],
) -> Result<f64, LimitError> {
    if !cls.zero_in_interior {
        return Err(LimitError::Hypothesis("the origin is not interior to the drift polygon"));
    }
    let sig = labelled_sigmas(cls, sigmas)?;
    let mut ring = cls.i_mu.clone();
    ring.sort_by(|&a, &b| cls.mus[a].angle().total_cmp(&cls.mus[b].angle()));
    let eps = cls.tol * cls.diam_c_mu;
    let m = ring.len();
    for k in 0..m {
        if cls.mus[ring[k]].dist(cls.mus[ring[(k + 1) % m]]) <= eps {
            return Err(LimitError::Hypothesis("boundary drifts are not distinct"));
        }
    }
    let unit = |a: usize, b: usize| (cls.mus[a] - cls.mus[b]).normalized().expect("distinct");
    let mut total = 0.0;
    for k in 0..m {
        let (prev, cur, next) = (ring[(k + m - 1) % m], ring[k], ring[(k + 1) % m]);
        let d = unit(cur, next) - unit(prev, cur);
        total += sig[cur].quad(d);
    }
    Ok(total)
}

/// Discretization and seeding shared by the samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    /// Steps per unit time for Brownian paths.
    pub time_steps: usize,
    /// Quadrature nodes in θ for the Itô functional.
    pub theta_nodes: usize,
    pub master_seed: u64,
}

impl Default for SamplerParams {
    fn default() -> Self {
        SamplerParams { time_steps: 10_000, theta_nodes: 64, master_seed: 0 }
    }
}

impl SamplerParams {
    fn validate(&self) -> Result<(), LimitError> {
        if self.time_steps == 0 || self.theta_nodes == 0 {
            return Err(LimitError::BadDiscretization);
        }
        Ok(())
    }
}

#[inline]
fn normal_pair(rng: &mut ChaCha8Rng) -> Vec2 {
    Vec2::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Discretized Brownian path on `[0,1]` with covariance `Σ` per unit time.
pub fn brownian_path(sigma: &Mat2, steps: usize, rng: &mut ChaCha8Rng) -> Vec<Vec2> {
    let root = sigma.sqrt_psd().scale(1.0 / (steps as f64).sqrt());
    let mut path = Vec::with_capacity(steps + 1);
    let mut w = Vec2::ZERO;
    path.push(w);
    for _ in 0..steps {
        w += root.apply(normal_pair(rng));
        path.push(w);
    }
    path
}

type XiGroup = (usize, Vec<(usize, usize, Vec2)>);

/// Sampler for the max-type diameter limit.
#[derive(Debug, Clone)]
pub struct LimitSampler {
    pub cls: DriftClassification,
    /// Label order: `sigmas[k]` belongs to walk `k`, `sigmas[0] = 0`.
    pub sigmas: Vec<Mat2>,
    pub params: SamplerParams,
    pub structure: GaussianChordStructure,
    chol: Vec<Vec<f64>>,
    /// For each zero-drift walk feeding a times chord: its label and the
    /// `(times-chord index, ζ_{0,j} index, μ̂_j)` it feeds.
    xi_groups: Vec<XiGroup>,
}

/// One draw of the diameter limit with its ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct DiameterDraw {
    pub value: f64,
    pub zeta: Vec<f64>,
    /// One entry per times chord, in `cls.chords_times` order.
    pub xi: Vec<f64>,
}

impl LimitSampler {
    pub fn new(
        cls: &DriftClassification,
        sigmas: &[Mat2],
        params: SamplerParams,
    ) -> Result<Self, LimitError> {
        params.validate()?;
        if cls.chords().is_empty() {
            return Err(DriftError::NoChords.into());
        }
        let structure = zeta_structure(cls, sigmas)?;
        let chol = cholesky_psd(&structure.covariance)?;
        let mut xi_groups: Vec<XiGroup> = Vec::new();
        for (t, &(i, j)) in cls.chords_times.iter().enumerate() {
            let z = structure.index_of(0, j).expect("times chords imply circ chords");
            let dir = cls.mus[j].normalized().expect("non-zero drift");
            match xi_groups.iter_mut().find(|g| g.0 == i) {
                Some(g) => g.1.push((t, z, dir)),
                None => xi_groups.push((i, vec![(t, z, dir)])),
            }
        }
        Ok(LimitSampler {
            cls: cls.clone(),
            sigmas: labelled_sigmas(cls, sigmas)?,
            params,
            structure,
            chol,
            xi_groups,
        })
    }

    pub fn sample(&self, replicate: u64) -> f64 {
        self.sample_detail(replicate).value
    }

    pub fn sample_detail(&self, replicate: u64) -> DiameterDraw {
        let seed = self.params.master_seed;
        let mut rng = stream_rng(seed, 0, replicate, Domain::LimitGaussian);
        let m = self.chol.len();
        let g: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let zeta: Vec<f64> =
            (0..m).map(|a| (0..=a).map(|b| self.chol[a][b] * g[b]).sum()).collect();

        let mut xi = vec![0.0; self.cls.chords_times.len()];
        for (walk, feeds) in &self.xi_groups {
            let mut rng = stream_rng(seed, *walk as u64, replicate, Domain::LimitBrownian(0));
            let sigma = &self.sigmas[*walk];
            if let [(t, _, dir)] = feeds.as_slice() {
                // Reflection principle: −inf_{t≤1} of a BM is |N(0, v)|.
                let z: f64 = rng.sample(StandardNormal);
                xi[*t] = sigma.quad(*dir).max(0.0).sqrt() * z.abs();
            } else {
                let path = brownian_path(sigma, self.params.time_steps, &mut rng);
                for (t, _, dir) in feeds {
                    xi[*t] = -path.iter().map(|p| p.dot(*dir)).fold(0.0, f64::min);
                }
            }
        }

        let mut value = f64::NEG_INFINITY;
        for z in &zeta {
            value = value.max(*z);
        }
        for feeds in self.xi_groups.iter().map(|g| &g.1) {
            for &(t, z, _) in feeds {
                value = value.max(zeta[z] + xi[t]);
            }
        }
        DiameterDraw { value, zeta, xi }
    }
}

/// Convenience wrapper matching the sampler-per-call style.
pub fn sample_diameter_limit(s: &LimitSampler, replicate: u64) -> f64 {
    s.sample(replicate)
}

/// Perimeter limit ingredients when one walk has drift `μ` (covariance
/// `Σ₁`) and the other zero drift (`Σ₂`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IceCreamDraw {
    /// `N(0, 4μ̂ᵀΣ₁μ̂)`.
    pub zeta: f64,
    /// Semi-perimeter opposite `μ` of the hull of a `Σ₂`-Brownian path.
    pub xi: f64,
}

pub fn sample_icecream_limit(
    mu: Vec2,
    sigma1: &Mat2,
    sigma2: &Mat2,
    params: &SamplerParams,
    replicate: u64,
) -> Result<IceCreamDraw, LimitError> {
    params.validate()?;
    let up = mu.normalized().ok_or(LimitError::Hypothesis("drift must be non-zero"))?;
    if !sigma1.is_covariance() || !sigma2.is_covariance() {
        return Err(LimitError::InvalidCovariance);
    }
    let mut rng = stream_rng(params.master_seed, 1, replicate, Domain::LimitGaussian);
    let z: f64 = rng.sample(StandardNormal);
    let zeta = 2.0 * sigma1.quad(up).max(0.0).sqrt() * z;
    let mut rng = stream_rng(params.master_seed, 2, replicate, Domain::LimitBrownian(0));
    let mut path = brownian_path(sigma2, params.time_steps, &mut rng);
    let hull = crate::geom2d::hull_in_place(&mut path);
    let xi = semi_perimeter(&hull, mu)?;
    Ok(IceCreamDraw { zeta, xi })
}

/// Equal-drift perimeter limit together with the endpoints of `W^±`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItoDraw {
    pub value: f64,
    pub w_plus: Vec2,
    pub w_minus: Vec2,
}

/// θ-quadrature on `[0, π]`: composite Gauss–Legendre, 8 nodes per panel.
struct ThetaRule {
    cos: Vec<f64>,
    sin: Vec<f64>,
    weight: Vec<f64>,
    /// `1/√(2σ(θ))`, zero where `σ(θ) = 0`.
    inv_scale: Vec<f64>,
}

impl ThetaRule {
    fn new(nodes: usize, sigma: &Mat2) -> Self {
        let per = nodes.min(8);
        let panels = nodes.div_ceil(per);
        let table = GaussLegendre::new(per).composite_nodes(0.0, PI, panels);
        let mut rule = ThetaRule { cos: vec![], sin: vec![], weight: vec![], inv_scale: vec![] };
        for (t, w) in table {
            let (s, c) = t.sin_cos();
            let v = sigma.quad(Vec2::new(c, s));
            rule.cos.push(c);
            rule.sin.push(s);
            rule.weight.push(w);
            rule.inv_scale.push(if v > 1e-300 { 1.0 / (2.0 * v).sqrt() } else { 0.0 });
        }
        rule
    }
}

/// `∫_0^π∫_0^1 (Φ(e_θᵀW_t/√((1−t)σ(θ))) − ½) e_θᵀdW_t dθ` by left-endpoint
/// sums over the given increments of `W` (uniform steps on `[0,1]`).
fn ito_integral(increments: &[Vec2], rule: &ThetaRule) -> f64 {
    let m = increments.len();
    let dt = 1.0 / m as f64;
    let mut w = Vec2::ZERO;
    let mut total = 0.0;
    for (j, dw) in increments.iter().enumerate() {
        let rem = 1.0 - j as f64 * dt;
        let inv_sqrt_rem = 1.0 / rem.sqrt();
        let (mut ax, mut ay) = (0.0, 0.0);
        if j > 0 {
            for k in 0..rule.cos.len() {
                let x = (rule.cos[k] * w.x + rule.sin[k] * w.y) * rule.inv_scale[k] * inv_sqrt_rem;
                // Φ(z) − ½ = ½ erf(z/√2); the √2 is folded into inv_scale.
                let h = 0.5 * libm::erf(x) * rule.weight[k];
                ax += h * rule.cos[k];
                ay += h * rule.sin[k];
            }
        }
        total += ax * dw.x + ay * dw.y;
        w += *dw;
    }
    total
}

/// One draw of the equal-drift perimeter limit, drift along `e_{π/2}`.
pub fn sample_ito_limit_detail(
    sigma1: &Mat2,
    sigma2: &Mat2,
    params: &SamplerParams,
    replicate: u64,
) -> Result<ItoDraw, LimitError> {
    params.validate()?;
    if !sigma1.is_covariance() || !sigma2.is_covariance() {
        return Err(LimitError::InvalidCovariance);
    }
    let m = params.time_steps;
    let scale = 1.0 / (m as f64).sqrt();
    let r1 = sigma1.sqrt_psd().scale(scale);
    let r2 = sigma2.sqrt_psd().scale(scale);
    let mut g1 = stream_rng(params.master_seed, 1, replicate, Domain::LimitBrownian(0));
    let mut g2 = stream_rng(params.master_seed, 2, replicate, Domain::LimitBrownian(0));
    let mut minus = Vec::with_capacity(m);
    let mut w_plus = Vec2::ZERO;
    for _ in 0..m {
        let a = r1.apply(normal_pair(&mut g1));
        let b = r2.apply(normal_pair(&mut g2));
        w_plus += a + b;
        minus.push(a - b);
    }
    let rule = ThetaRule::new(params.theta_nodes, &sigma1.add(sigma2));
    let w_minus = minus.iter().fold(Vec2::ZERO, |s, &d| s + d);
    let value = w_plus.y + ito_integral(&minus, &rule);
    Ok(ItoDraw { value, w_plus, w_minus })
}

pub fn sample_ito_limit(
    sigma1: &Mat2,
    sigma2: &Mat2,
    params: &SamplerParams,
    replicate: u64,
) -> Result<f64, LimitError> {
    Ok(sample_ito_limit_detail(sigma1, sigma2, params, replicate)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HullFunctional {
    Perimeter,
    Diameter,
}

impl HullFunctional {
    pub fn eval(self, k: &ConvexPolygon) -> f64 {
        match self {
            HullFunctional::Perimeter => perimeter(k),
            HullFunctional::Diameter => diameter(k),
        }
    }
}

/// Functional of the joint hull of `N` independent Brownian paths on `[0,1]`
/// with covariances `sigmas`. Path `k` uses stream `k`, so dropping trailing
/// walks leaves the others unchanged.
pub fn sample_zero_drift_limit(
    sigmas: &[Mat2],
    functional: HullFunctional,
    params: &SamplerParams,
    replicate: u64,
) -> Result<f64, LimitError> {
    params.validate()?;
    if sigmas.is_empty() {
        return Err(LimitError::SigmaCount { expected: 1, got: 0 });
    }
    if sigmas.iter().any(|s| !s.is_covariance()) {
        return Err(LimitError::InvalidCovariance);
    }
    let paths: Vec<Vec<Vec2>> = sigmas
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut rng = stream_rng(params.master_seed, k as u64, replicate, Domain::LimitBrownian(0));
            brownian_path(s, params.time_steps, &mut rng)
        })
        .collect();
    let refs: Vec<&[Vec2]> = paths.iter().map(|p| p.as_slice()).collect();
    let hull = joint_hull(&refs).expect("paths are nonempty");
    Ok(functional.eval(&hull))
}

/// `E[max(X, Y)]` for centered Gaussians with variances `a`, `b` and
/// covariance `c`: `√((a + b − 2c)/(2π))`.
pub fn mean_max_two_gaussians(a: f64, b: f64, c: f64) -> f64 {
    ((a + b - 2.0 * c).max(0.0) / (2.0 * PI)).sqrt()
}

/// `Φ(x)`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driftgeo::{classify_drifts, DEFAULT_DRIFT_TOL};
    use std::f64::consts::FRAC_PI_2;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    fn unit(deg: f64) -> Vec2 {
        Vec2::from_angle(deg.to_radians())
    }

    #[test]
    fn spara_examples() {
        let up = Vec2::new(0.0, 1.0);
        assert_eq!(spara(up, &Mat2::IDENTITY).unwrap(), 1.0);
        assert_eq!(spara(up, &Mat2::diag(2.0, 3.0)).unwrap(), 3.0);
        let s = Mat2::IDENTITY.add(&Mat2::IDENTITY);
        assert!((spara(unit(37.0), &s).unwrap() - 2.0).abs() < 1e-14);
        assert!(matches!(spara(Vec2::new(0.0, 2.0), &s), Err(LimitError::NonUnitDirection(_))));
    }

    #[test]
    fn g_values_and_series() {
        assert_eq!(g_arcsin(0.0).unwrap(), 0.0);
        assert!((g_arcsin(1.0).unwrap() - (FRAC_PI_2 - 1.0)).abs() < 1e-15);
        assert!(g_arcsin(1.5).is_err());
        for i in 0..100 {
            let u = -1.0 + 2.0 * (i as f64 + 0.5) / 100.0;
            assert!((g_arcsin(-u).unwrap() + g_arcsin(u).unwrap()).abs() < 1e-15);
        }
        // Maclaurin series Σ C(2k,k) u^{2k+1} / (4^k (2k+1)(2k+2)).
        for i in 0..=90 {
            let u = -0.9 + 0.02 * i as f64;
            let (mut term_coeff, mut s) = (1.0f64, 0.0);
            for k in 0..400 {
                let kf = k as f64;
                if k > 0 {
                    // C(2k,k)/4^k from its predecessor.
                    term_coeff *= (2.0 * kf - 1.0) / (2.0 * kf);
                }
                s += term_coeff * u.powi(2 * k + 1) / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0));
            }
            assert!((s - g_arcsin(u).unwrap()).abs() < 1e-10, "u={u}");
        }
        // The small-|u| series branch joins the closed form smoothly.
        let a = g_with_root(0.99e-4, (1.0f64 - 0.99e-8).sqrt());
        let b = g_with_root(1.01e-4, (1.0f64 - 1.0201e-8).sqrt());
        assert!((b - a - 0.5 * 0.02e-4).abs() < 1e-12);
    }

    #[test]
    fn zeta_structure_single_walk() {
        let cls = classify_drifts(&[Vec2::new(0.0, 1.0)], DEFAULT_DRIFT_TOL).unwrap();
        let s = zeta_structure(&cls, &[Mat2::IDENTITY]).unwrap();
        assert_eq!(s.chords.len(), 1);
        assert_eq!(s.covariance, vec![vec![1.0]]);
    }

    #[test]
    fn zeta_structure_equilateral() {
        // Labels follow input order here (equal norms).
        let cls = classify_drifts(&[unit(90.0), unit(150.0)], DEFAULT_DRIFT_TOL).unwrap();
        let s = zeta_structure(&cls, &[Mat2::IDENTITY, Mat2::IDENTITY]).unwrap();
        let a = s.index_of(0, 1).unwrap();
        let b = s.index_of(1, 2).unwrap();
        assert!((s.covariance[a][b] - 0.5).abs() < 1e-12);
        // σ_{1,2} = μ̂ᵀ(Σ₁ + Σ₂)μ̂ = 2.
        assert!((s.covariance[b][b] - 2.0).abs() < 1e-12);
        assert!(cholesky_psd(&s.covariance).is_ok());
    }

    #[test]
    fn zeta_structure_disjoint_chords_are_independent() {
        // Square-ish drifts: diameters (1,3) and (2,4) share no walk.
        let mus = [Vec2::new(1.0, 0.1), Vec2::new(0.1, 1.0), Vec2::new(-1.0, -0.1), Vec2::new(-0.1, -1.0)];
        let cls = classify_drifts(&mus, DEFAULT_DRIFT_TOL).unwrap();
        let s = zeta_structure(&cls, &[Mat2::IDENTITY; 4]).unwrap();
        assert_eq!(s.chords.len(), 2);
        assert_eq!(s.covariance[0][1], 0.0);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(matches!(cholesky_psd(&a), Err(LimitError::NotPsd(_))));
        let singular = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let l = cholesky_psd(&singular).unwrap();
        assert!((l[1][0] - 1.0).abs() < 1e-15 && l[1][1].abs() < 1e-7);
    }

    #[test]
    fn clt_variance_examples() {
        let mus = [unit(90.0), unit(210.0), unit(330.0)];
        let cls = classify_drifts(&mus, DEFAULT_DRIFT_TOL).unwrap();
        let v = clt_variance_zero_interior(&cls, &[Mat2::IDENTITY; 3]).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let v0 = clt_variance_zero_interior(&cls, &[Mat2::IDENTITY, Mat2::ZERO, Mat2::IDENTITY]).unwrap();
        assert!((v0 - 6.0).abs() < 1e-12);
        let edge = classify_drifts(&[Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)], DEFAULT_DRIFT_TOL).unwrap();
        assert!(matches!(
            clt_variance_zero_interior(&edge, &[Mat2::IDENTITY; 2]),
            Err(LimitError::Hypothesis(_))
        ));
    }

    #[test]
    fn clt_variance_is_rotation_equivariant() {
        let mus = [Vec2::new(1.0, 0.2), Vec2::new(-0.7, 1.1), Vec2::new(-0.4, -1.3), Vec2::new(0.9, -0.8)];
        let sig = [
            Mat2::symmetric(1.0, 0.2, 2.0),
            Mat2::symmetric(0.5, -0.1, 0.7),
            Mat2::IDENTITY,
            Mat2::symmetric(3.0, 1.0, 1.0),
        ];
        let base = clt_variance_zero_interior(&classify_drifts(&mus, DEFAULT_DRIFT_TOL).unwrap(), &sig).unwrap();
        for i in 0..50 {
            let a = 0.37 + i as f64 * 0.41;
            let r = Mat2::rotation(a);
            let rm: Vec<Vec2> = mus.iter().map(|m| m.rotate(a)).collect();
            let rs: Vec<Mat2> = sig.iter().map(|s| s.conjugate(&r)).collect();
            let v = clt_variance_zero_interior(&classify_drifts(&rm, DEFAULT_DRIFT_TOL).unwrap(), &rs).unwrap();
            assert!((v - base).abs() < 1e-10 * base);
        }
    }

    #[test]
    fn unique_diameter_sampler_variance() {
        let cls = classify_drifts(&[Vec2::new(1.0, 0.0), Vec2::new(0.0, 2.0)], DEFAULT_DRIFT_TOL).unwrap();
        let sigmas = [Mat2::IDENTITY, Mat2::diag(2.0, 0.5)];
        let s = LimitSampler::new(&cls, &sigmas, SamplerParams::default()).unwrap();
        let draws: Vec<f64> = (0..100_000).map(|r| s.sample(r)).collect();
        let (_, v) = mean_var(&draws);
        let dir = (Vec2::new(1.0, 0.0) - Vec2::new(0.0, 2.0)).normalized().unwrap();
        let sigma_e = Mat2::IDENTITY.add(&Mat2::diag(2.0, 0.5)).quad(dir);
        assert!((v / sigma_e - 1.0).abs() < 0.02, "{v} vs {sigma_e}");
    }

    #[test]
    fn isosceles_sampler_mean() {
        let cls = classify_drifts(&[unit(80.0), unit(100.0)], DEFAULT_DRIFT_TOL).unwrap();
        let s = LimitSampler::new(&cls, &[Mat2::IDENTITY; 2], SamplerParams::default()).unwrap();
        assert_eq!(s.structure.chords.len(), 2);
        let draws: Vec<f64> = (0..100_000).map(|r| s.sample(r)).collect();
        let (m, v) = mean_var(&draws);
        let target = mean_max_two_gaussians(1.0, 1.0, 0.0);
        assert!((target - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!((m - target).abs() < 3.0 * (v / 1e5).sqrt(), "{m} vs {target}");
    }

    #[test]
    fn ice_cream_diameter_parts_are_uncorrelated() {
        let cls = classify_drifts(&[Vec2::new(0.0, 1.0), Vec2::ZERO], DEFAULT_DRIFT_TOL).unwrap();
        let s = LimitSampler::new(&cls, &[Mat2::IDENTITY; 2], SamplerParams::default()).unwrap();
        let draws: Vec<DiameterDraw> = (0..100_000).map(|r| s.sample_detail(r)).collect();
        let z: Vec<f64> = draws.iter().map(|d| d.zeta[0]).collect();
        let x: Vec<f64> = draws.iter().map(|d| d.xi[0]).collect();
        assert!(corr(&z, &x).abs() < 0.02);
        // ξ is a reflected Gaussian: E ξ = √(2/π).
        let (m, v) = mean_var(&x);
        assert!((m - (2.0 / PI).sqrt()).abs() < 3.0 * (v / 1e5).sqrt());
    }

    #[test]
    fn shared_zero_walk_uses_one_path() {
        // A zero-drift walk paired with two opposite non-zero drifts of equal
        // length: both times chords read minima of the same Brownian path.
        let mus = [Vec2::ZERO, Vec2::new(0.0, 1.0), Vec2::new(0.0, -1.0)];
        let cls = classify_drifts(&mus, DEFAULT_DRIFT_TOL).unwrap();
        assert_eq!(cls.chords_times.len(), 0, "opposite drifts form a plus chord");
        let mus = [Vec2::ZERO, unit(90.0), unit(90.0)];
        let cls = classify_drifts(&mus, DEFAULT_DRIFT_TOL).unwrap();
        assert_eq!(cls.chords_times.len(), 2);
        let params = SamplerParams { time_steps: 2000, ..SamplerParams::default() };
        let s = LimitSampler::new(&cls, &[Mat2::IDENTITY; 3], params).unwrap();
        for r in 0..50 {
            let d = s.sample_detail(r);
            assert_eq!(d.xi[0], d.xi[1]);
            assert!(d.xi[0] >= 0.0);
        }
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let (ma, va) = mean_var(a);
        let (mb, vb) = mean_var(b);
        let c = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (a.len() as f64 - 1.0);
        c / (va * vb).sqrt()
    }

    #[test]
    fn ice_cream_limit_parts() {
        let p = SamplerParams { time_steps: 200, ..SamplerParams::default() };
        let up = Vec2::new(0.0, 1.0);
        for r in 0..20 {
            let d = sample_icecream_limit(up, &Mat2::IDENTITY, &Mat2::ZERO, &p, r).unwrap();
            assert_eq!(d.xi, 0.0);
        }
        let draws: Vec<IceCreamDraw> =
            (0..4000).map(|r| sample_icecream_limit(up, &Mat2::IDENTITY, &Mat2::IDENTITY, &p, r).unwrap()).collect();
        let z: Vec<f64> = draws.iter().map(|d| d.zeta).collect();
        let x: Vec<f64> = draws.iter().map(|d| d.xi).collect();
        assert!(corr(&z, &x).abs() < 3.0 / (4000f64).sqrt());
        let (_, vz) = mean_var(&z);
        assert!((vz / 4.0 - 1.0).abs() < 0.1);
        // The discretized semi-perimeter has the mean of half the discrete
        // hull perimeter: Σ_k E‖S_k‖/k with E‖S_k‖ = √(πk/(2m)).
        let m = 200.0;
        let exact: f64 = (1..=200).map(|k| (PI * k as f64 / (2.0 * m)).sqrt() / k as f64).sum();
        let (mx, vx) = mean_var(&x);
        assert!((mx - exact).abs() < 3.0 * (vx / 4000.0).sqrt(), "{mx} vs {exact}");
        assert!(sample_icecream_limit(Vec2::ZERO, &Mat2::IDENTITY, &Mat2::IDENTITY, &p, 0).is_err());
    }

    #[test]
    fn zero_drift_perimeter_matches_discrete_mean() {
        let p = SamplerParams { time_steps: 300, ..SamplerParams::default() };
        let draws: Vec<f64> = (0..4000)
            .map(|r| sample_zero_drift_limit(&[Mat2::IDENTITY], HullFunctional::Perimeter, &p, r).unwrap())
            .collect();
        let m = 300.0;
        let exact: f64 = 2.0 * (1..=300).map(|k| (PI * k as f64 / (2.0 * m)).sqrt() / k as f64).sum::<f64>();
        let (mean, v) = mean_var(&draws);
        assert!((mean - exact).abs() < 3.0 * (v / 4000.0).sqrt(), "{mean} vs {exact}");
        assert_eq!(sample_zero_drift_limit(&[Mat2::ZERO], HullFunctional::Perimeter, &p, 0).unwrap(), 0.0);
        for r in 0..50 {
            for f in [HullFunctional::Perimeter, HullFunctional::Diameter] {
                let one = sample_zero_drift_limit(&[Mat2::IDENTITY], f, &p, r).unwrap();
                let two = sample_zero_drift_limit(&[Mat2::IDENTITY, Mat2::diag(2.0, 0.3)], f, &p, r).unwrap();
                assert!(two >= one);
            }
        }
    }

    #[test]
    fn ito_sampler_small_scale() {
        let p = SamplerParams { time_steps: 400, theta_nodes: 32, master_seed: 3 };
        let r = 4000;
        let draws: Vec<ItoDraw> =
            (0..r).map(|k| sample_ito_limit_detail(&Mat2::IDENTITY, &Mat2::IDENTITY, &p, k).unwrap()).collect();
        let v: Vec<f64> = draws.iter().map(|d| d.value).collect();
        let (m, var) = mean_var(&v);
        assert!(m.abs() < 3.0 * (var / r as f64).sqrt());
        // Variance 6 − π; the stderr of a sample variance is about var·√(2/R).
        assert!((var - (6.0 - PI)).abs() < 3.0 * var * (2.0 / r as f64).sqrt() + 0.03, "{var}");
    }

    #[test]
    fn ito_cross_covariance() {
        let p = SamplerParams { time_steps: 50, theta_nodes: 8, master_seed: 5 };
        let s1 = Mat2::diag(2.0, 1.0);
        let r = 20_000;
        let (mut cxx, mut cyy) = (0.0, 0.0);
        for k in 0..r {
            let d = sample_ito_limit_detail(&s1, &Mat2::IDENTITY, &p, k).unwrap();
            cxx += d.w_plus.x * d.w_minus.x;
            cyy += d.w_plus.y * d.w_minus.y;
        }
        // E[W⁺(W⁻)ᵀ] = Σ₁ − Σ₂ = diag(1, 0).
        assert!((cxx / r as f64 - 1.0).abs() < 0.05);
        assert!((cyy / r as f64).abs() < 0.05);
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-12);
    }
}
