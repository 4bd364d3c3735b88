//! Matrix-variate normal and jointly-t simulators for the matrix factor model
//! `X_t = R F_t C^T + E_t` with AR(1) factors and noise.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution as _, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, SimRng, Stream};
use crate::series::MatrixSeries;
use crate::spectral::sym_eigen;

/// AR(1) steps discarded before the first emitted observation.
pub const BURN_IN: usize = 100;

const PD_FLOOR: f64 = 1e-12;

/// Unit-diagonal matrix with constant off-diagonal entries.
pub fn corr_matrix(p: usize, offdiag: f64) -> Result<DMatrix<f64>> {
    if p == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    let mut m = DMatrix::from_element(p, p, offdiag);
    m.fill_diagonal(1.0);
    // spectrum is {1 + (p-1)a, 1 - a}
    let lo = if p == 1 {
        1.0
    } else {
        (1.0 + (p as f64 - 1.0) * offdiag).min(1.0 - offdiag)
    };
    if !offdiag.is_finite() || lo < PD_FLOOR {
        return Err(Error::Parameter(format!(
            "equicorrelation matrix with p = {p}, off-diagonal {offdiag} is not positive definite"
        )));
    }
    Ok(m)
}

/// Symmetric square root of a positive definite matrix.
pub fn sqrt_pd(mat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(mat)?;
    let min = eig.values[eig.values.len() - 1];
    if min < PD_FLOOR {
        return Err(Error::Parameter(format!(
            "matrix is not positive definite (smallest eigenvalue {min:e})"
        )));
    }
    Ok(rebuild(&eig.vectors, eig.values.iter().map(|v| v.sqrt())))
}

/// Symmetric square root of a positive semidefinite matrix; rounding-level
/// negative eigenvalues are treated as zero.
pub fn sqrt_psd(mat: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(mat)?;
    let scale = eig.values[0].abs().max(1.0);
    let min = eig.values[eig.values.len() - 1];
    if min < -1e-10 * scale {
        return Err(Error::Parameter(format!(
            "matrix is not positive semidefinite (smallest eigenvalue {min:e})"
        )));
    }
    Ok(rebuild(&eig.vectors, eig.values.iter().map(|v| v.max(0.0).sqrt())))
}

fn rebuild(vectors: &DMatrix<f64>, diag: impl Iterator<Item = f64>) -> DMatrix<f64> {
    let mut scaled = vectors.clone();
    for (j, d) in diag.enumerate() {
        scaled.column_mut(j).scale_mut(d);
    }
    let out = scaled * vectors.transpose();
    (&out + out.transpose()) * 0.5
}

pub(crate) fn standard_normal_matrix(rows: usize, cols: usize, rng: &mut SimRng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Matrix normal law `MN(0, U, V)` held through the square roots of its scatter matrices.
#[derive(Debug, Clone)]
pub struct MatrixNormal {
    row_sqrt: DMatrix<f64>,
    col_sqrt: DMatrix<f64>,
}

impl MatrixNormal {
    pub fn new(row_scatter: &DMatrix<f64>, col_scatter: &DMatrix<f64>) -> Result<Self> {
        Ok(MatrixNormal {
            row_sqrt: sqrt_pd(row_scatter)?,
            col_sqrt: sqrt_pd(col_scatter)?,
        })
    }

    /// Accepts singular scatter matrices.
    pub fn new_psd(row_scatter: &DMatrix<f64>, col_scatter: &DMatrix<f64>) -> Result<Self> {
        Ok(MatrixNormal {
            row_sqrt: sqrt_psd(row_scatter)?,
            col_sqrt: sqrt_psd(col_scatter)?,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.row_sqrt.nrows(), self.col_sqrt.nrows())
    }

    /// `U^{1/2} Z V^{1/2}` with `Z` i.i.d. standard normal.
    pub fn sample(&self, rng: &mut SimRng) -> DMatrix<f64> {
        let (p1, p2) = self.shape();
        let z = standard_normal_matrix(p1, p2, rng);
        &self.row_sqrt * z * &self.col_sqrt
    }
}

/// One draw from `MN(0, U, V)`, i.e. `Vec(X) ~ N(0, V ⊗ U)`.
pub fn sample_matrix_normal(
    p1: usize,
    p2: usize,
    row_scatter: &DMatrix<f64>,
    col_scatter: &DMatrix<f64>,
    rng: &mut SimRng,
) -> Result<DMatrix<f64>> {
    if row_scatter.shape() != (p1, p1) || col_scatter.shape() != (p2, p2) {
        return Err(Error::Parameter(format!(
            "scatter shapes {:?}/{:?} do not match {p1}x{p2}",
            row_scatter.shape(),
            col_scatter.shape()
        )));
    }
    Ok(MatrixNormal::new(row_scatter, col_scatter)?.sample(rng))
}

/// Radial family of the joint elliptical law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dist {
    Normal,
    /// Student t with the given degrees of freedom.
    T(u32),
}

impl Dist {
    pub fn validate(&self) -> Result<()> {
        match self {
            Dist::T(0) => Err(Error::Parameter("t degrees of freedom must be >= 1".into())),
            _ => Ok(()),
        }
    }

    /// Mixing scalar `1 / sqrt(w / ν)` with `w ~ χ²_ν`, or 1 for the normal law.
    pub fn mixing_scale(&self, rng: &mut SimRng) -> f64 {
        match *self {
            Dist::Normal => 1.0,
            Dist::T(nu) => {
                let nu = f64::from(nu);
                let w: f64 = ChiSquared::new(nu).expect("nu >= 1").sample(rng);
                1.0 / (w / nu).sqrt()
            }
        }
    }
}

impl FromStr for Dist {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "normal" || s == "gaussian" {
            return Ok(Dist::Normal);
        }
        let nu = s
            .strip_prefix('t')
            .map(|r| r.trim_start_matches('(').trim_end_matches(')'))
            .and_then(|r| r.parse::<u32>().ok())
            .ok_or_else(|| Error::Config(format!("unknown distribution `{s}` (use normal, t1, t2, ...)")))?;
        let d = Dist::T(nu);
        d.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(d)
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dist::Normal => f.write_str("normal"),
            Dist::T(nu) => write!(f, "t{nu}"),
        }
    }
}

/// Synthetic data-generating process.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub t: usize,
    pub p1: usize,
    pub p2: usize,
    pub k1: usize,
    pub k2: usize,
    pub dist: Dist,
    /// Factor AR(1) coefficient.
    pub phi: f64,
    /// Noise AR(1) coefficient.
    pub psi: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Independent observations (`phi = psi = 0`), three factors per side.
    pub fn scenario_a(t: usize, p1: usize, p2: usize, dist: Dist, seed: u64) -> Self {
        ScenarioSpec {
            t,
            p1,
            p2,
            k1: 3,
            k2: 3,
            dist,
            phi: 0.0,
            psi: 0.0,
            seed,
        }
    }

    /// Weak temporal dependence (`phi = psi = 0.1`), three factors per side.
    pub fn scenario_b(t: usize, p1: usize, p2: usize, dist: Dist, seed: u64) -> Self {
        ScenarioSpec {
            phi: 0.1,
            psi: 0.1,
            ..Self::scenario_a(t, p1, p2, dist, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 || self.p1 == 0 || self.p2 == 0 {
            return Err(Error::Parameter("T, p1 and p2 must be at least 1".into()));
        }
        if !(1..=self.p1).contains(&self.k1) || !(1..=self.p2).contains(&self.k2) {
            return Err(Error::Parameter(format!(
                "ranks ({}, {}) must satisfy 1 <= k1 <= p1 = {}, 1 <= k2 <= p2 = {}",
                self.k1, self.k2, self.p1, self.p2
            )));
        }
        if !(self.phi.abs() < 1.0) || !(self.psi.abs() < 1.0) {
            return Err(Error::Parameter(format!(
                "AR coefficients must lie in (-1, 1) (phi = {}, psi = {})",
                self.phi, self.psi
            )));
        }
        self.dist.validate()
    }
}

/// Noise scatter matrices used by the scenarios: unit diagonal with `1/p1`
/// (rows) and `1/p2` (columns) off the diagonal.
pub fn scenario_noise_law(p1: usize, p2: usize) -> Result<MatrixNormal> {
    MatrixNormal::new(
        &corr_matrix(p1, 1.0 / p1 as f64)?,
        &corr_matrix(p2, 1.0 / p2 as f64)?,
    )
}

/// Draws `(ε_t, U_t)`: `Vec(ε_t) ~ N(0, I)` and `U_t ~ MN(0, U_E, V_E)` for the
/// normal law; for `t(ν)` both blocks are divided by one shared `sqrt(χ²_ν/ν)`.
pub fn sample_joint_innovation(
    spec: &ScenarioSpec,
    noise: &MatrixNormal,
    rng: &mut SimRng,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    spec.validate()?;
    if noise.shape() != (spec.p1, spec.p2) {
        return Err(Error::Parameter(format!(
            "noise law shape {:?} does not match {}x{}",
            noise.shape(),
            spec.p1,
            spec.p2
        )));
    }
    Ok(draw_innovation(spec, noise, rng))
}

fn draw_innovation(
    spec: &ScenarioSpec,
    noise: &MatrixNormal,
    rng: &mut SimRng,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut eps = standard_normal_matrix(spec.k1, spec.k2, rng);
    let mut u = noise.sample(rng);
    let scale = spec.dist.mixing_scale(rng);
    if scale != 1.0 {
        eps *= scale;
        u *= scale;
    }
    (eps, u)
}

/// Ground truth of one simulated data set.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub r: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub factors: Vec<DMatrix<f64>>,
    pub noise: Vec<DMatrix<f64>>,
    /// `S_t = R F_t C^T`.
    pub common: MatrixSeries,
}

/// Loading matrices with i.i.d. `U(-1, 1)` entries.
pub fn draw_loadings(p1: usize, k1: usize, p2: usize, k2: usize, rng: &mut SimRng) -> (DMatrix<f64>, DMatrix<f64>) {
    let unif = Uniform::new_inclusive(-1.0, 1.0).expect("valid bounds");
    let r = DMatrix::from_fn(p1, k1, |_, _| unif.sample(rng));
    let c = DMatrix::from_fn(p2, k2, |_, _| unif.sample(rng));
    (r, c)
}

/// Simulates a scenario with loadings drawn from the spec's seed.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<(MatrixSeries, GroundTruth)> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, Stream::Loadings);
    let (r, c) = draw_loadings(spec.p1, spec.k1, spec.p2, spec.k2, &mut rng);
    generate_with_loadings(spec, r, c)
}

/// Simulates a scenario around caller-supplied loadings.
pub fn generate_with_loadings(
    spec: &ScenarioSpec,
    r: DMatrix<f64>,
    c: DMatrix<f64>,
) -> Result<(MatrixSeries, GroundTruth)> {
    spec.validate()?;
    if r.shape() != (spec.p1, spec.k1) || c.shape() != (spec.p2, spec.k2) {
        return Err(Error::Parameter(format!(
            "loading shapes {:?}/{:?} do not match the scenario",
            r.shape(),
            c.shape()
        )));
    }
    let noise_law = scenario_noise_law(spec.p1, spec.p2)?;
    let mut rng = stream_rng(spec.seed, Stream::Innovations);

    let f_scale = (1.0 - spec.phi * spec.phi).sqrt();
    let e_scale = (1.0 - spec.psi * spec.psi).sqrt();

    // Start from an innovation draw (stationary for the normal law), then burn in.
    let (mut f, mut e) = draw_innovation(spec, &noise_law, &mut rng);
    let mut factors = Vec::with_capacity(spec.t);
    let mut noise = Vec::with_capacity(spec.t);
    for step in 0..BURN_IN + spec.t {
        let (eps, u) = draw_innovation(spec, &noise_law, &mut rng);
        f = f * spec.phi + eps * f_scale;
        e = e * spec.psi + u * e_scale;
        if step >= BURN_IN {
            factors.push(f.clone());
            noise.push(e.clone());
        }
    }

    let ct = c.transpose();
    let common: Vec<DMatrix<f64>> = factors.iter().map(|f| &r * f * &ct).collect();
    let observed: Vec<DMatrix<f64>> = common.iter().zip(&noise).map(|(s, e)| s + e).collect();
    // Report the noise as X_t - S_t so the decomposition holds exactly in floating point.
    let noise: Vec<DMatrix<f64>> = observed.iter().zip(&common).map(|(x, s)| x - s).collect();
    let truth = GroundTruth {
        r,
        c,
        factors,
        noise,
        common: MatrixSeries::new(common)?,
    };
    Ok((MatrixSeries::new(observed)?, truth))
}
