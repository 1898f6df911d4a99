// SPDX-License-Identifier: Apache-2.0

//! Seeded planar random walks and their trajectory functionals.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom2d::{hull_in_place, ConvexPolygon, GeomError, Mat2, Vec2};
use crate::rng::{stream_rng, Domain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("step index {index} out of range 1..={steps}")]
    IndexOutOfRange { index: usize, steps: usize },
    #[error("covariance matrix is not symmetric positive semi-definite: {0:?}")]
    InvalidCovariance(Mat2),
    #[error("non-finite drift vector")]
    NonFiniteDrift,
    #[error("duplicate stream id {0}")]
    DuplicateStream(u64),
    #[error("ensemble needs at least one walk")]
    EmptyEnsemble,
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// Distribution of the standardized noise `ξ` in `Z = μ + Σ^{1/2} ξ`.
/// All three have mean zero and identity covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncrementLaw {
    #[default]
    Gaussian,
    /// Independent uniforms on `[−√3, √3]`.
    ShiftedUniform,
    /// Independent Rademacher signs.
    Lattice,
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

impl IncrementLaw {
    #[inline]
    pub fn standard_pair<R: Rng + ?Sized>(self, rng: &mut R) -> Vec2 {
        match self {
            IncrementLaw::Gaussian => {
                Vec2::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            }
            IncrementLaw::ShiftedUniform => Vec2::new(
                rng.random_range(-SQRT3..SQRT3),
                rng.random_range(-SQRT3..SQRT3),
            ),
            IncrementLaw::Lattice => {
                let bits: u32 = rng.random();
                let sx = if bits & 1 == 0 { -1.0 } else { 1.0 };
                let sy = if bits & 2 == 0 { -1.0 } else { 1.0 };
                Vec2::new(sx, sy)
            }
        }
    }
}

/// One walk: drift, increment covariance, increment law and its stream id.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkSpec {
    pub mu: Vec2,
    pub sigma: Mat2,
    #[serde(default)]
    pub law: IncrementLaw,
    #[serde(default)]
    pub stream_id: u64,
}

impl WalkSpec {
    pub fn new(mu: Vec2, sigma: Mat2, law: IncrementLaw, stream_id: u64) -> Result<Self, WalkError> {
        let spec = WalkSpec { mu, sigma, law, stream_id };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), WalkError> {
        if !self.mu.is_finite() {
            return Err(WalkError::NonFiniteDrift);
        }
        if !self.sigma.is_covariance() {
            return Err(WalkError::InvalidCovariance(self.sigma));
        }
        Ok(())
    }

    #[inline]
    fn draw<R: Rng + ?Sized>(&self, root: &Mat2, rng: &mut R) -> Vec2 {
        self.mu + root.apply(self.law.standard_pair(rng))
    }
}

/// Positions `S_0 = 0, S_1, …, S_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    positions: Vec<Vec2>,
}

impl Path {
    pub fn from_positions(positions: Vec<Vec2>) -> Option<Self> {
        (positions.first() == Some(&Vec2::ZERO)).then_some(Path { positions })
    }

    pub fn from_increments(increments: &[Vec2]) -> Self {
        let mut positions = Vec::with_capacity(increments.len() + 1);
        let mut s = Vec2::ZERO;
        positions.push(s);
        for &z in increments {
            s += z;
            positions.push(s);
        }
        Path { positions }
    }

    pub fn positions(&self) -> &[Vec2] {
        &self.positions
    }

    /// `S_0, …, S_n`.
    pub fn prefix(&self, n: usize) -> &[Vec2] {
        &self.positions[..=n]
    }

    pub fn steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn endpoint(&self) -> Vec2 {
        *self.positions.last().expect("nonempty path")
    }

    /// Increment `Z_i = S_i − S_{i−1}`, `1 ≤ i ≤ n`.
    pub fn increment(&self, i: usize) -> Result<Vec2, WalkError> {
        self.check_index(i)?;
        Ok(self.positions[i] - self.positions[i - 1])
    }

    fn check_index(&self, i: usize) -> Result<(), WalkError> {
        if i == 0 || i > self.steps() {
            return Err(WalkError::IndexOutOfRange { index: i, steps: self.steps() });
        }
        Ok(())
    }
}

/// `N ≥ 1` independent walks sharing a master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub walks: Vec<WalkSpec>,
    pub master_seed: u64,
}

impl Ensemble {
    pub fn new(walks: Vec<WalkSpec>, master_seed: u64) -> Result<Self, WalkError> {
        let e = Ensemble { walks, master_seed };
        e.validate()?;
        Ok(e)
    }

    /// Walk `k` gets stream id `k`.
    pub fn from_drifts(
        drifts: &[(Vec2, Mat2)],
        law: IncrementLaw,
        master_seed: u64,
    ) -> Result<Self, WalkError> {
        let walks = drifts
            .iter()
            .enumerate()
            .map(|(k, &(mu, sigma))| WalkSpec::new(mu, sigma, law, k as u64))
            .collect::<Result<Vec<_>, _>>()?;
        Ensemble::new(walks, master_seed)
    }

    pub fn validate(&self) -> Result<(), WalkError> {
        if self.walks.is_empty() {
            return Err(WalkError::EmptyEnsemble);
        }
        let mut ids: Vec<u64> = Vec::with_capacity(self.walks.len());
        for w in &self.walks {
            w.validate()?;
            if ids.contains(&w.stream_id) {
                return Err(WalkError::DuplicateStream(w.stream_id));
            }
            ids.push(w.stream_id);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    pub fn drifts(&self) -> Vec<Vec2> {
        self.walks.iter().map(|w| w.mu).collect()
    }

    pub fn sigmas(&self) -> Vec<Mat2> {
        self.walks.iter().map(|w| w.sigma).collect()
    }

    /// All walks of one replicate, each with `n` steps.
    pub fn sample(&self, n: usize, replicate: u64) -> Vec<Path> {
        self.walks
            .iter()
            .map(|w| sample_path(w, self.master_seed, n, replicate))
            .collect()
    }
}

/// Path of `n` steps, determined by `(master_seed, spec.stream_id, replicate)`.
pub fn sample_path(spec: &WalkSpec, master_seed: u64, n: usize, replicate: u64) -> Path {
    let mut rng = stream_rng(master_seed, spec.stream_id, replicate, Domain::Path);
    let root = spec.sigma.sqrt_psd();
    let mut positions = Vec::with_capacity(n + 1);
    let mut s = Vec2::ZERO;
    positions.push(s);
    for _ in 0..n {
        s += spec.draw(&root, &mut rng);
        positions.push(s);
    }
    Path { positions }
}

/// Hull of all positions of all trajectories.
pub fn joint_hull(paths: &[&[Vec2]]) -> Result<ConvexPolygon, WalkError> {
    let mut pts: Vec<Vec2> = paths.iter().flat_map(|p| p.iter().copied()).collect();
    if pts.is_empty() {
        return Err(GeomError::EmptyPointSet.into());
    }
    Ok(hull_in_place(&mut pts))
}

/// Running extremes of the projection `e_θ·S_j`; ties go to the smallest index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub max: f64,
    pub min: f64,
    pub argmax: usize,
    pub argmin: usize,
}

pub fn directional_extrema(path: &[Vec2], theta: f64) -> Extrema {
    projection_extrema(path, Vec2::from_angle(theta))
}

pub fn projection_extrema(path: &[Vec2], e: Vec2) -> Extrema {
    let mut ex = Extrema { max: f64::NEG_INFINITY, min: f64::INFINITY, argmax: 0, argmin: 0 };
    for (j, p) in path.iter().enumerate() {
        let v = p.dot(e);
        if v > ex.max {
            ex.max = v;
            ex.argmax = j;
        }
        if v < ex.min {
            ex.min = v;
            ex.argmin = j;
        }
    }
    ex
}

/// Outcome of replacing one increment.
#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub path: Path,
    pub original: Vec2,
    pub replacement: Vec2,
}

/// Replace increment `i` by `z`; positions `j ≥ i` shift by `z − Z_i`.
pub fn replace_step(path: &Path, i: usize, z: Vec2) -> Result<Resampled, WalkError> {
    let original = path.increment(i)?;
    let shift = z - original;
    let mut positions = path.positions.clone();
    for p in &mut positions[i..] {
        *p += shift;
    }
    Ok(Resampled { path: Path { positions }, original, replacement: z })
}

/// Replace increment `i` by an independent draw from the walk's law.
pub fn resample_step(
    path: &Path,
    spec: &WalkSpec,
    master_seed: u64,
    i: usize,
    replicate: u64,
) -> Result<Resampled, WalkError> {
    path.check_index(i)?;
    let mut rng = stream_rng(master_seed, spec.stream_id, replicate, Domain::Resample(i as u64));
    let z = spec.draw(&spec.sigma.sqrt_psd(), &mut rng);
    replace_step(path, i, z)
}
