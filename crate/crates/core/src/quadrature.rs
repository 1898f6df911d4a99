// SPDX-License-Identifier: Apache-2.0

//! Deterministic quadrature for the closed-form limit constants: the
//! equal-drift perimeter variance, Brownian hull perimeter / semi-perimeter
//! moments and the Rogers–Shepp product moment of correlated suprema.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use thiserror::Error;

use crate::geom2d::{Mat2, Vec2};
use crate::limitlaws::g_with_root;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("angle {0} outside the open interval (-pi/2, pi/2)")]
    AngleOutOfRange(f64),
    #[error("zero drift direction")]
    ZeroDirection,
    #[error("covariance matrix is not symmetric positive semi-definite")]
    InvalidCovariance,
    #[error("certified truncation point {needed:.3e} exceeds u_max = {u_max:.3e}")]
    TruncationTooLong { needed: f64, u_max: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `q`-point rule; nodes by Newton iteration from Chebyshev guesses.
    pub fn new(q: usize) -> Self {
        assert!(q >= 1, "need at least one node");
        let mut nodes = vec![0.0; q];
        let mut weights = vec![0.0; q];
        let qf = q as f64;
        for i in 0..q.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (qf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(q, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(q, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[q - 1 - i] = x;
            weights[i] = w;
            weights[q - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Composite rule over `[a, b]` split into `panels` equal panels.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + h * p as f64;
            let mid = lo + 0.5 * h;
            let mut s = 0.0;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(mid + 0.5 * h * x);
            }
            total += 0.5 * h * s;
        }
        total
    }

    /// Nodes and weights of the composite rule, for callers that tabulate.
    pub fn composite_nodes(&self, a: f64, b: f64, panels: usize) -> Vec<(f64, f64)> {
        let h = (b - a) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.nodes.len());
        for p in 0..panels {
            let mid = a + h * (p as f64 + 0.5);
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }
}

/// `(P_q(x), P_q'(x))` by the three-term recurrence.
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=q {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if q == 0 {
        return (1.0, 0.0);
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre parameters plus the truncation policy for
/// integrals over `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    pub panels: usize,
    pub nodes: usize,
    /// Hard cap on the truncation point of `∫_0^∞ du`.
    pub u_max: f64,
    /// Certified bound on the neglected tail.
    pub tail_tol: f64,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid { panels: 16, nodes: 20, u_max: 1e9, tail_tol: 1e-13 }
    }
}

impl QuadratureGrid {
    pub fn refined(self) -> Self {
        QuadratureGrid { panels: 2 * self.panels, ..self }
    }

    fn validate(&self) -> Result<GaussLegendre, QuadratureError> {
        if self.panels == 0 || self.nodes == 0 {
            return Err(QuadratureError::InvalidGrid("panels and nodes must be positive"));
        }
        if !(self.u_max > 0.0 && self.tail_tol > 0.0) {
            return Err(QuadratureError::InvalidGrid("u_max and tail_tol must be positive"));
        }
        Ok(GaussLegendre::new(self.nodes))
    }
}

/// `σ(π/2) + (2π)⁻¹ ∫_0^π∫_0^π σ(θ₁,θ₂) g(ρ(θ₁,θ₂)) dθ₁dθ₂` for
/// `Σ = Σ₁ + Σ₂`.
pub fn ito_variance_closed_form(
    sigma1: &Mat2,
    sigma2: &Mat2,
    grid: &QuadratureGrid,
) -> Result<f64, QuadratureError> {
    let sigma = sigma1.add(sigma2);
    if !sigma1.is_covariance() || !sigma2.is_covariance() {
        return Err(QuadratureError::InvalidCovariance);
    }
    let up = Vec2::new(0.0, 1.0);
    Ok(sigma.quad(up) + ito_double_integral(&sigma, grid)?)
}

/// The double-integral term alone (`4 − π` for `Σ₁ = Σ₂ = I`).
pub fn ito_double_integral(sigma: &Mat2, grid: &QuadratureGrid) -> Result<f64, QuadratureError> {
    let gl = grid.validate()?;
    let det = (sigma.a11 * sigma.a22 - sigma.a12 * sigma.a21).max(0.0);
    let root_det = det.sqrt();
    let integrand = |t1: f64, t2: f64| {
        let (e1, e2) = (Vec2::from_angle(t1), Vec2::from_angle(t2));
        let (v1, v2) = (sigma.quad(e1), sigma.quad(e2));
        let vv = v1 * v2;
        if vv <= 1e-300 {
            return 0.0;
        }
        let c = sigma.bilinear(e1, e2);
        let s = vv.sqrt();
        let rho = (c / s).clamp(-1.0, 1.0);
        // 1 − ρ² = det Σ · sin²(θ₁ − θ₂) / (σ(θ₁)σ(θ₂)), free of cancellation.
        let root = (root_det * (t1 - t2).sin().abs() / s).min(1.0);
        c * g_with_root(rho, root)
    };
    // The integrand has a kink on the diagonal; integrate each triangle with
    // the diagonal on a panel boundary.
    let total = gl.integrate(0.0, PI, grid.panels, |t1| {
        gl.integrate(0.0, t1, grid.panels, |t2| integrand(t1, t2))
            + gl.integrate(t1, PI, grid.panels, |t2| integrand(t1, t2))
    });
    Ok(total / TAU)
}

/// `∫_a^b √(e_θᵀΣe_θ) dθ`, split where `Σ` is singular along `e_θ`.
fn integrate_sqrt_v(sigma: &Mat2, a: f64, b: f64, gl: &GaussLegendre, panels: usize) -> f64 {
    let ([lo, hi], top) = sigma.sym_eigen();
    let mut cuts = vec![a, b];
    if hi > 0.0 && lo <= 1e-14 * hi {
        let null = top.angle() + FRAC_PI_2;
        let start = ((a - null) / PI).floor() as i64 - 1;
        for k in start..start + 6 {
            let t = null + PI * k as f64;
            if t > a && t < b {
                cuts.push(t);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += gl.integrate(w[0], w[1], panels, |t| sigma.quad(Vec2::from_angle(t)).max(0.0).sqrt());
    }
    total
}

/// `E[perim(Σ^{1/2} hull B[0,1])] = √(2/π) ∫_0^{2π} √v(θ) dθ`, from
/// `E[sup_{t≤1} W_t] = √(2v/π)` for a BM of variance `v`.
pub fn brownian_perimeter_mean(sigma: &Mat2, grid: &QuadratureGrid) -> Result<f64, QuadratureError> {
    let gl = grid.validate()?;
    if !sigma.is_covariance() {
        return Err(QuadratureError::InvalidCovariance);
    }
    Ok(SQRT_2_OVER_PI * integrate_sqrt_v(sigma, 0.0, TAU, &gl, grid.panels))
}

/// Mean Brownian semi-perimeter: the same integral over the half-circle of
/// directions opposing `μ`.
pub fn semic_mean(sigma: &Mat2, mu: Vec2, grid: &QuadratureGrid) -> Result<f64, QuadratureError> {
    let gl = grid.validate()?;
    if !sigma.is_covariance() {
        return Err(QuadratureError::InvalidCovariance);
    }
    let up = mu.normalized().ok_or(QuadratureError::ZeroDirection)?;
    let a = up.angle() + FRAC_PI_2;
    Ok(SQRT_2_OVER_PI * integrate_sqrt_v(sigma, a, a + PI, &gl, grid.panels))
}

/// Stable form of `cosh(uθ)/sinh(uπ/2) · tanh((2θ+π)u/4)`.
#[inline]
fn rogers_shepp_integrand(u: f64, theta: f64) -> f64 {
    let a = theta + FRAC_PI_2;
    let num = (u * (theta - FRAC_PI_2)).exp() + (-u * a).exp();
    let ratio = (-u * a).exp_m1() / (-u * PI).exp_m1();
    num / (1.0 + (-u * a).exp()) * ratio
}

/// `∫_0^∞` of the Rogers–Shepp integrand on geometrically growing panels,
/// truncated where the exponential tail bound drops below `tail_tol`.
fn rogers_shepp_inner(theta: f64, gl: &GaussLegendre, grid: &QuadratureGrid) -> Result<f64, QuadratureError> {
    // The integrand is at most 2·e^{−u·m}/(1 − e^{−π}) for u ≥ 1.
    let m = FRAC_PI_2 - theta.abs();
    let c = 2.0 / (1.0 - (-PI).exp());
    let cut = ((c / (m * grid.tail_tol)).ln() / m).max(1.0);
    if cut > grid.u_max {
        return Err(QuadratureError::TruncationTooLong { needed: cut, u_max: grid.u_max });
    }
    let per_panel = grid.panels.div_ceil(8).max(1);
    let mut total = 0.0;
    let (mut lo, mut hi) = (0.0f64, 0.25f64);
    while lo < cut {
        let top = hi.min(cut);
        total += gl.integrate(lo, top, per_panel, |u| rogers_shepp_integrand(u, theta));
        lo = top;
        hi *= 2.0;
    }
    Ok(total)
}

/// `F(sin θ) = E[sup_{t≤1} W_t · sup_{t≤1} W̃_t]` for standard Brownian
/// motions with correlation `sin θ`. (Called a "correlation" in some
/// sources; `F(0) = 2/π` shows it is the product moment.)
pub fn sup_product_moment(theta: f64, grid: &QuadratureGrid) -> Result<f64, QuadratureError> {
    if !(theta.abs() < FRAC_PI_2) {
        return Err(QuadratureError::AngleOutOfRange(theta));
    }
    let gl = grid.validate()?;
    Ok(theta.cos() * rogers_shepp_inner(theta, &gl, grid)?)
}

/// `E[𝔖_μ(hull B[0,1])²] = 2∫_{−π/2}^{π/2} (π/2 + θ) F(sin θ) dθ`.
pub fn semic_second_moment_identity(grid: &QuadratureGrid) -> Result<f64, QuadratureError> {
    let gl = grid.validate()?;
    let mut err = None;
    let v = gl.integrate(-FRAC_PI_2, FRAC_PI_2, grid.panels, |t| {
        match rogers_shepp_inner(t, &gl, grid) {
            Ok(inner) => (FRAC_PI_2 + t) * t.cos() * inner,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(2.0 * v),
    }
}

/// `Var 𝔖_μ(hull B[0,1])` for standard Brownian motion: second moment
/// minus `(√(2π))² = 2π`.
pub fn semic_variance_identity(grid: &QuadratureGrid) -> Result<f64, QuadratureError> {
    Ok(semic_second_moment_identity(grid)? - TAU)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> QuadratureGrid {
        QuadratureGrid::default()
    }

    #[test]
    fn gauss_legendre_is_exact_on_polynomials() {
        for q in [1, 2, 5, 20, 64] {
            let gl = GaussLegendre::new(q);
            let wsum: f64 = gl.weights.iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "q={q}");
            // Degree 2q − 1 is integrated exactly.
            let d = 2 * q - 1;
            let v = gl.integrate(0.0, 1.0, 1, |x| x.powi(d as i32));
            assert!((v - 1.0 / (d as f64 + 1.0)).abs() < 1e-13, "q={q}");
        }
    }

    #[test]
    fn ito_variance_identity() {
        let v = ito_variance_closed_form(&Mat2::IDENTITY, &Mat2::IDENTITY, &grid()).unwrap();
        assert!((v - (6.0 - PI)).abs() < 1e-6, "{v}");
        let d = ito_double_integral(&Mat2::IDENTITY.scale(2.0), &grid()).unwrap();
        assert!((d - (4.0 - PI)).abs() < 1e-6, "{d}");
    }

    #[test]
    fn ito_variance_converges_under_refinement() {
        let s1 = Mat2::symmetric(2.0, 0.3, 0.7);
        let s2 = Mat2::symmetric(0.5, -0.2, 1.5);
        let a = ito_variance_closed_form(&s1, &s2, &grid()).unwrap();
        let b = ito_variance_closed_form(&s1, &s2, &grid().refined()).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        // Depends on Σ₁ + Σ₂ only.
        let c = ito_variance_closed_form(&s2, &s1, &grid()).unwrap();
        assert!((a - c).abs() < 1e-12);
    }

    #[test]
    fn ito_variance_degenerate_inputs() {
        let z = ito_variance_closed_form(&Mat2::ZERO, &Mat2::ZERO, &grid()).unwrap();
        assert_eq!(z, 0.0);
        // Rank one: ρ ≡ ±1 and g(±1) = ±(π/2 − 1).
        let r1 = Mat2::diag(0.0, 1.0);
        let v = ito_variance_closed_form(&r1, &Mat2::ZERO, &grid()).unwrap();
        // σ(θ₁,θ₂) = sin θ₁ sin θ₂ ≥ 0 on [0,π]², so ρ = 1 throughout:
        // 1 + (π/2 − 1)·(∫ sin)² / 2π = 1 + (π/2 − 1)·4/(2π).
        let oracle = 1.0 + (FRAC_PI_2 - 1.0) * 4.0 / TAU;
        assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
    }

    #[test]
    fn product_moment_at_zero_correlation() {
        let f = sup_product_moment(0.0, &grid()).unwrap();
        assert!((f - 2.0 / PI).abs() < 1e-8, "{f}");
        assert!(sup_product_moment(FRAC_PI_2, &grid()).is_err());
        assert!(sup_product_moment(-2.0, &grid()).is_err());
    }

    #[test]
    fn product_moment_is_increasing_with_limits() {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..50 {
            let t = -1.5 + 3.0 * i as f64 / 49.0;
            let f = sup_product_moment(t, &grid()).unwrap();
            assert!(f > prev, "not increasing at θ={t}");
            prev = f;
        }
        // Towards perfect correlation F → E[M²] = E[W_1²] = 1.
        let f = sup_product_moment(FRAC_PI_2 - 1e-4, &grid()).unwrap();
        assert!((f - 1.0).abs() < 1e-3, "{f}");
    }

    #[test]
    fn brownian_perimeter_means() {
        let g = grid();
        let p = brownian_perimeter_mean(&Mat2::IDENTITY, &g).unwrap();
        assert!((p - (8.0 * PI).sqrt()).abs() < 1e-8, "{p}");
        assert_eq!(brownian_perimeter_mean(&Mat2::ZERO, &g).unwrap(), 0.0);
        let p4 = brownian_perimeter_mean(&Mat2::diag(4.0, 4.0), &g).unwrap();
        assert!((p4 - 2.0 * (8.0 * PI).sqrt()).abs() < 1e-8);
        for mu in [Vec2::new(0.0, 1.0), Vec2::new(3.0, -1.0)] {
            let s = semic_mean(&Mat2::IDENTITY, mu, &g).unwrap();
            assert!((s - TAU.sqrt()).abs() < 1e-8);
        }
        for sigma in [Mat2::symmetric(2.0, 0.7, 0.5), Mat2::diag(0.0, 3.0), Mat2::symmetric(1.0, 1.0, 1.0)] {
            for mu in [Vec2::new(1.0, 0.3), Vec2::new(-0.2, -1.0)] {
                let both = semic_mean(&sigma, mu, &g).unwrap() + semic_mean(&sigma, -mu, &g).unwrap();
                let full = brownian_perimeter_mean(&sigma, &g).unwrap();
                assert!((both - full).abs() < 1e-8, "{both} vs {full}");
            }
        }
        // A horizontal 1-D motion: the semi-perimeter is its range, whose
        // mean is 2√(2/π).
        let s = semic_mean(&Mat2::diag(1.0, 0.0), Vec2::new(0.0, 1.0), &g).unwrap();
        assert!((s - 2.0 * (2.0 / PI).sqrt()).abs() < 1e-10, "{s}");
        assert_eq!(semic_mean(&Mat2::IDENTITY, Vec2::ZERO, &g), Err(QuadratureError::ZeroDirection));
    }

    #[test]
    fn semi_perimeter_variance_constant() {
        let m2 = semic_second_moment_identity(&grid()).unwrap();
        assert!((m2 - 7.768_654_8).abs() < 1e-4, "{m2}");
        let v = semic_variance_identity(&grid()).unwrap();
        assert!((v - 1.485_469).abs() < 1e-4, "{v}");
        let finer = semic_second_moment_identity(&grid().refined()).unwrap();
        assert!((finer - m2).abs() < 1e-5, "{m2} vs {finer}");
    }
}
