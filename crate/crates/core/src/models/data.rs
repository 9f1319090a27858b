//! Datasets and seeded synthetic generators.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::activation::ActivationSpec;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::param::{dot, norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

/// Generator metadata carried alongside the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub task: Task,
    pub teacher: Option<Vec<f64>>,
    pub noise_sd: Option<f64>,
    pub opt: Option<f64>,
    pub gamma: Option<f64>,
    pub realized_flip_fraction: Option<f64>,
    pub seed: Option<u64>,
}

impl DatasetMeta {
    pub fn regression() -> Self {
        Self {
            task: Task::Regression,
            teacher: None,
            noise_sd: None,
            opt: None,
            gamma: None,
            realized_flip_fraction: None,
            seed: None,
        }
    }

    pub fn classification() -> Self {
        Self {
            task: Task::Classification,
            ..Self::regression()
        }
    }
}

/// Feature matrix `X` (n×d, one sample per row) and labels `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>, meta: DatasetMeta) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::Dimension {
                expected: x.rows(),
                got: y.len(),
            });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { coordinate: i });
        }
        if meta.task == Task::Classification && y.iter().any(|v| *v != 1.0 && *v != -1.0) {
            return Err(Error::Config("classification labels must be ±1".into()));
        }
        Ok(Self { x, y, meta })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn teacher(&self) -> Option<&[f64]> {
        self.meta.teacher.as_deref()
    }

    /// One row per sample: features `x0 … x{d−1}` then the label.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.d()).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        wtr.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec: Vec<String> = self.x.row(i).iter().map(f64::to_string).collect();
            rec.push(self.y[i].to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_meta_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.meta)?;
        Ok(())
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec<R: Rng + ?Sized>(rng: &mut R, len: usize, sd: f64) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut *rng);
            sd * e
        })
        .collect()
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, sd: f64) -> Matrix {
    Matrix::new(rows, cols, gaussian_vec(rng, rows * cols, sd)).expect("gaussian entries are finite")
}

/// Random `n×k` matrix with orthonormal columns (`k ≤ n`), by Gram-Schmidt
/// on Gaussian columns.
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Matrix {
    assert!(k <= n && k > 0);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v = gaussian_vec(rng, n, 1.0);
        // Two passes of modified Gram-Schmidt keep the columns orthogonal to rounding.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let len = norm(&v);
        if len > 1e-8 {
            basis.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    let mut m = Matrix::zeros(n, k);
    for (j, b) in basis.iter().enumerate() {
        for (i, v) in b.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    m
}

/// `n×d` feature matrix `Q·diag(s)·Rᵀ` whose singular values are drawn
/// uniformly from `[s_lo, s_hi]`, with the smallest pinned to `s_lo`.
pub fn gen_conditioned_features(n: usize, d: usize, s_lo: f64, s_hi: f64, seed: u64) -> Result<Matrix> {
    if !(s_lo > 0.0 && s_hi >= s_lo) {
        return Err(Error::Precondition("need 0 < s_lo ≤ s_hi".into()));
    }
    let mut rng = rng_from_seed(seed);
    let k = n.min(d);
    let q = random_orthonormal(&mut rng, n, k);
    let r = random_orthonormal(&mut rng, d, k);
    let mut s: Vec<f64> = (0..k).map(|_| rng.random_range(s_lo..=s_hi)).collect();
    s[0] = s_lo;
    let qs = q.matmul(&Matrix::diag(&s))?;
    qs.matmul(&r.transpose())
}

/// Gaussian features with `y = σ(⟨v*, x⟩) + noise_sd·ξ`.
pub fn gen_teacher_regression(
    n: usize,
    d: usize,
    teacher: &[f64],
    noise_sd: f64,
    seed: u64,
    act: &ActivationSpec,
) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::Precondition("need n, d ≥ 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let x = gaussian_matrix(&mut rng, n, d, 1.0);
    teacher_targets(x, teacher, noise_sd, &mut rng, act, seed)
}

/// Teacher labels on a given design.
pub fn gen_teacher_regression_on(
    x: Matrix,
    teacher: &[f64],
    noise_sd: f64,
    seed: u64,
    act: &ActivationSpec,
) -> Result<Dataset> {
    let mut rng = rng_from_seed(seed ^ 0x5eed_7a26_e7ba_11e5);
    teacher_targets(x, teacher, noise_sd, &mut rng, act, seed)
}

fn teacher_targets(
    x: Matrix,
    teacher: &[f64],
    noise_sd: f64,
    rng: &mut ChaCha8Rng,
    act: &ActivationSpec,
    seed: u64,
) -> Result<Dataset> {
    if teacher.len() != x.cols() {
        return Err(Error::Dimension {
            expected: x.cols(),
            got: teacher.len(),
        });
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::Precondition("noise_sd must be non-negative".into()));
    }
    let clean = x.matvec(teacher)?;
    let y = clean
        .iter()
        .map(|z| {
            let e: f64 = StandardNormal.sample(&mut *rng);
            act.value(*z) + noise_sd * e
        })
        .collect();
    let meta = DatasetMeta {
        teacher: Some(teacher.to_vec()),
        noise_sd: Some(noise_sd),
        seed: Some(seed),
        ..DatasetMeta::regression()
    };
    Dataset::new(x, y, meta)
}

/// Halfspace classification data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceDataConfig {
    pub n: usize,
    pub d: usize,
    pub u_bar: Vec<f64>,
    /// Label-flip probability.
    pub opt: f64,
    /// Minimum `|⟨ū, x⟩|`.
    pub gamma: f64,
    pub seed: u64,
}

impl HalfspaceDataConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.u_bar.len() != self.d {
            return Err(Error::Config("halfspace config needs n, d ≥ 1 and a d-dimensional ū".into()));
        }
        if (norm(&self.u_bar) - 1.0).abs() > 1e-10 {
            return Err(Error::Precondition("ū must be a unit vector".into()));
        }
        if !(0.0..0.5).contains(&self.opt) {
            return Err(Error::Precondition(format!("opt must lie in [0, 0.5), got {}", self.opt)));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::Precondition("gamma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Gaussian `x` conditioned on `|⟨ū, x⟩| ≥ γ` by rejection; `y = sgn⟨ū, x⟩`
/// flipped independently with probability `opt`.
pub fn gen_halfspace_classification(cfg: &HalfspaceDataConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = rng_from_seed(cfg.seed);
    let mut data = Vec::with_capacity(cfg.n * cfg.d);
    let mut y = Vec::with_capacity(cfg.n);
    let mut flips = 0usize;
    while y.len() < cfg.n {
        let x = gaussian_vec(&mut rng, cfg.d, 1.0);
        let proj = dot(&x, &cfg.u_bar);
        if proj.abs() < cfg.gamma || proj == 0.0 {
            continue;
        }
        let mut label = proj.signum();
        if rng.random::<f64>() < cfg.opt {
            label = -label;
            flips += 1;
        }
        data.extend_from_slice(&x);
        y.push(label);
    }
    let meta = DatasetMeta {
        teacher: Some(cfg.u_bar.clone()),
        opt: Some(cfg.opt),
        gamma: Some(cfg.gamma),
        realized_flip_fraction: Some(flips as f64 / cfg.n as f64),
        seed: Some(cfg.seed),
        ..DatasetMeta::classification()
    };
    Dataset::new(Matrix::new(cfg.n, cfg.d, data)?, y, meta)
}

/// Scale every row to unit Euclidean norm.
pub fn normalize_rows(data: &Dataset) -> Result<Dataset> {
    let mut rows = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        let r = data.x.row(i);
        let len = norm(r);
        if len == 0.0 {
            return Err(Error::Precondition(format!("row {i} is zero")));
        }
        rows.push(r.iter().map(|v| v / len).collect::<Vec<f64>>());
    }
    Dataset::new(Matrix::from_rows(&rows)?, data.y.clone(), data.meta.clone())
}

/// Uniformly random unit vector from a seed.
pub fn random_unit_vector(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    loop {
        let v = gaussian_vec(&mut rng, d, 1.0);
        let len = norm(&v);
        if len > 1e-8 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}
