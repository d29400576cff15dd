//! Gaussian linear models and cross-validated log-likelihood comparison.
//!
//! Each fit standardizes its predictors with statistics from its own training
//! rows, solves least squares by QR and estimates the noise variance by
//! maximum likelihood (`RSS / n`). Held-out points are scored with
//!
//! ```text
//! log p(y | x) = -½ ln(2πσ²) - (y - ŷ)² / (2σ²)
//! ```
//!
//! using the training `σ²`. `ΔLogLik` is the mean per-point difference
//! between a model with the `INF^(k)` predictor and the baseline without it.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictors::{FeatureRow, KGrid, PositionClass};

/// Floor on the noise variance, so exact fits keep a finite likelihood.
pub const SIGMA2_MIN: f64 = 1e-12;

/// Relative size below which a diagonal entry of `R` counts as zero.
const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: f64,
    pub sd: f64,
}

/// A fitted `y = b0 + Σ b_j z_j + ε`, `ε ~ N(0, σ²)`, where `z_j` are the
/// predictors standardized with the training statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// Intercept first, then one coefficient per feature (standardized scale).
    pub coefficients: Vec<f64>,
    pub noise_variance: f64,
    pub feature_names: Vec<String>,
    pub standardization: Vec<Standardization>,
    pub n_train: usize,
    /// Upper-triangular `R` of the standardized training design.
    #[serde(skip)]
    r: DMatrix<f64>,
}

fn column_stats(x: &DMatrix<f64>) -> Vec<Standardization> {
    let n = x.nrows() as f64;
    x.column_iter()
        .map(|c| {
            let mean = c.sum() / n;
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            Standardization { mean, sd: var.sqrt() }
        })
        .collect()
}

/// Fits ordinary least squares with an intercept. `x` holds one row per
/// observation and one column per named feature, on the raw scale.
pub fn fit_ols(x: &DMatrix<f64>, y: &[f64], names: &[String]) -> Result<LinearModel> {
    let (n, p) = x.shape();
    if names.len() != p || y.len() != n {
        return Err(Error::Argument(format!(
            "design is {n}x{p} with {} names and {} responses",
            names.len(),
            y.len()
        )));
    }
    if n < p + 2 {
        return Err(Error::InsufficientData(format!(
            "{n} rows for {p} predictors plus intercept"
        )));
    }
    let standardization = column_stats(x);
    let constant: Vec<String> = standardization
        .iter()
        .zip(names)
        .filter(|(s, _)| s.sd.is_nan() || s.sd <= 1e-12 * s.mean.abs().max(1.0))
        .map(|(_, name)| name.clone())
        .collect();
    if !constant.is_empty() {
        return Err(Error::RankDeficient { columns: constant });
    }

    let z = standardized_design(x, &standardization);
    let qr = z.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let collinear: Vec<String> = (1..=p)
        .filter(|&j| r[(j, j)].abs() <= RANK_TOLERANCE * diag_max)
        .map(|j| names[j - 1].clone())
        .collect();
    if !collinear.is_empty() {
        return Err(Error::RankDeficient { columns: collinear });
    }

    let yv = DVector::from_column_slice(y);
    let qty = qr.q().transpose() * &yv;
    let beta = r.solve_upper_triangular(&qty).ok_or_else(|| Error::RankDeficient {
        columns: names.to_vec(),
    })?;
    let resid = &yv - &z * &beta;
    let noise_variance = (resid.norm_squared() / n as f64).max(SIGMA2_MIN);
    Ok(LinearModel {
        coefficients: beta.iter().copied().collect(),
        noise_variance,
        feature_names: names.to_vec(),
        standardization,
        n_train: n,
        r,
    })
}

/// `[1 | (x - mean) / sd]`.
fn standardized_design(x: &DMatrix<f64>, st: &[Standardization]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            let s = st[j - 1];
            (x[(i, j - 1)] - s.mean) / s.sd
        }
    })
}

/// Log-density of a residual under `N(0, σ²)`.
pub fn gaussian_loglik(residual: f64, sigma2: f64) -> f64 {
    -0.5 * (2.0 * std::f64::consts::PI * sigma2).ln() - residual * residual / (2.0 * sigma2)
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n_features());
        self.coefficients[0]
            + x.iter()
                .zip(&self.standardization)
                .zip(&self.coefficients[1..])
                .map(|((v, s), b)| b * (v - s.mean) / s.sd)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        x.row_iter()
            .map(|row| self.predict_row(&row.iter().copied().collect::<Vec<_>>()))
            .collect()
    }

    /// Intercept and slopes in the units of the raw predictors.
    pub fn original_scale_coefficients(&self) -> (f64, Vec<f64>) {
        let slopes: Vec<f64> = self.coefficients[1..]
            .iter()
            .zip(&self.standardization)
            .map(|(b, s)| b / s.sd)
            .collect();
        let intercept = self.coefficients[0]
            - slopes
                .iter()
                .zip(&self.standardization)
                .map(|(b, s)| b * s.mean)
                .sum::<f64>();
        (intercept, slopes)
    }

    /// Variance of the fitted mean response at the average of `rows`, i.e.
    /// `σ² · z̄ᵀ (ZᵀZ)⁻¹ z̄` with `z̄` the mean standardized row.
    pub fn mean_prediction_variance(&self, rows: &[&[f64]]) -> f64 {
        let p = self.n_features();
        let mut zbar = DVector::zeros(p + 1);
        zbar[0] = 1.0;
        for row in rows {
            for (j, (v, s)) in row.iter().zip(&self.standardization).enumerate() {
                zbar[j + 1] += (v - s.mean) / s.sd / rows.len() as f64;
            }
        }
        // ‖R⁻ᵀ z̄‖² = z̄ᵀ (RᵀR)⁻¹ z̄
        let w = self
            .r
            .transpose()
            .solve_lower_triangular(&zbar)
            .expect("R has a non-zero diagonal after a successful fit");
        self.noise_variance * w.norm_squared()
    }
}

/// Per-point log-likelihoods of `y` under `model`.
pub fn loglik(model: &LinearModel, x: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    model
        .predict(x)
        .iter()
        .zip(y)
        .map(|(yhat, y)| gaussian_loglik(y - yhat, model.noise_variance))
        .collect()
}

/// Fold index for every row. Sentences are shuffled with `seed` and dealt to
/// folds in turn, so all rows of a sentence share a fold and the assignment
/// does not depend on row order.
pub fn assign_folds(rows: &[FeatureRow], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Argument(format!("need at least 2 folds, got {folds}")));
    }
    let mut ids: Vec<&str> = rows.iter().map(|r| r.sentence_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < folds {
        return Err(Error::InsufficientData(format!(
            "{} sentences cannot fill {folds} folds",
            ids.len()
        )));
    }
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let fold_of: std::collections::HashMap<&str, usize> =
        ids.iter().enumerate().map(|(i, id)| (*id, i % folds)).collect();
    Ok(rows.iter().map(|r| fold_of[r.sentence_id.as_str()]).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaLogLikResult {
    pub k: f64,
    /// Mean of `fold_means`, in nats per data point.
    pub mean_delta: f64,
    pub fold_means: Vec<f64>,
    /// Sample standard deviation of `fold_means` over `√folds`.
    pub std_error: f64,
    pub n_points: usize,
    /// Mean held-out baseline log-likelihood per fold.
    pub baseline_fold_loglik: Vec<f64>,
}

struct Fold {
    train: Vec<usize>,
    test: Vec<usize>,
    baseline_ll: Vec<f64>,
}

/// Fold assignment and baseline fits shared by every `k`, so that results
/// for different exponents are paired.
pub struct CrossValidation<'a> {
    rows: &'a [FeatureRow],
    names: Vec<String>,
    folds: Vec<Fold>,
}

fn design(rows: &[FeatureRow], idx: &[usize], extra: Option<&[f64]>) -> (DMatrix<f64>, Vec<f64>) {
    let p = rows[0].baseline.len() + extra.is_some() as usize;
    let x = DMatrix::from_fn(idx.len(), p, |i, j| {
        let r = &rows[idx[i]];
        match r.baseline.get(j) {
            Some(v) => *v,
            None => extra.expect("augmented column")[idx[i]],
        }
    });
    (x, idx.iter().map(|&i| rows[i].response).collect())
}

fn fold_error(fold: usize) -> impl FnOnce(Error) -> Error {
    move |e| Error::Fold {
        fold,
        source: Box::new(e),
    }
}

impl<'a> CrossValidation<'a> {
    pub fn new(rows: &'a [FeatureRow], folds: usize, seed: u64) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InsufficientData("no rows to cross-validate".into()));
        };
        let p = first.baseline.len();
        if rows.iter().any(|r| r.baseline.len() != p) {
            return Err(Error::Validation("rows have differing baseline widths".into()));
        }
        let needed = folds * (p + 3);
        if rows.len() < needed {
            return Err(Error::InsufficientData(format!(
                "{} rows; {folds}-fold CV with {} predictors needs at least {needed}",
                rows.len(),
                p + 1
            )));
        }
        let assignment = assign_folds(rows, folds, seed)?;
        let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        let folds = (0..folds)
            .into_par_iter()
            .map(|f| {
                let (test, train): (Vec<usize>, Vec<usize>) = (0..rows.len()).partition(|&i| assignment[i] == f);
                let (x, y) = design(rows, &train, None);
                let model = fit_ols(&x, &y, &names).map_err(fold_error(f))?;
                let (xt, yt) = design(rows, &test, None);
                Ok(Fold {
                    baseline_ll: loglik(&model, &xt, &yt),
                    train,
                    test,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows, names, folds })
    }

    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    /// `ΔLogLik` of adding `INF^(k)` of each row's context to the baseline.
    pub fn evaluate(&self, k: f64) -> Result<DeltaLogLikResult> {
        let inf: Vec<f64> = self
            .rows
            .iter()
            .map(|r| crate::predictors::inf_k(&r.context, k))
            .collect::<Result<_>>()?;
        let mut names = self.names.clone();
        names.push("inf_k".into());
        let per_fold = self
            .folds
            .par_iter()
            .enumerate()
            .map(|(f, fold)| {
                let (x, y) = design(self.rows, &fold.train, Some(&inf));
                let (xt, yt) = design(self.rows, &fold.test, Some(&inf));
                let extra = x.column(x.ncols() - 1);
                let first = extra[0];
                let augmented_ll = if extra.iter().all(|v| *v == first) {
                    // The extra column carries no information on this fold.
                    fold.baseline_ll.clone()
                } else {
                    let model = fit_ols(&x, &y, &names).map_err(fold_error(f))?;
                    loglik(&model, &xt, &yt)
                };
                let n = fold.test.len() as f64;
                let delta = augmented_ll
                    .iter()
                    .zip(&fold.baseline_ll)
                    .map(|(a, b)| a - b)
                    .sum::<f64>()
                    / n;
                Ok((delta, fold.baseline_ll.iter().sum::<f64>() / n))
            })
            .collect::<Result<Vec<_>>>()?;
        let (fold_means, baseline_fold_loglik): (Vec<f64>, Vec<f64>) = per_fold.into_iter().unzip();
        let (mean_delta, std_error) = mean_and_se(&fold_means);
        Ok(DeltaLogLikResult {
            k,
            mean_delta,
            fold_means,
            std_error,
            n_points: self.rows.len(),
            baseline_fold_loglik,
        })
    }
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Cross-validated `ΔLogLik` at a single exponent.
pub fn delta_loglik_cv(rows: &[FeatureRow], k: f64, folds: usize, seed: u64) -> Result<DeltaLogLikResult> {
    CrossValidation::new(rows, folds, seed)?.evaluate(k)
}

/// `ΔLogLik` at every exponent of `grid`, on one shared fold assignment.
pub fn sweep_k(rows: &[FeatureRow], grid: &KGrid, folds: usize, seed: u64) -> Result<Vec<DeltaLogLikResult>> {
    let cv = CrossValidation::new(rows, folds, seed)?;
    grid.values().par_iter().map(|&k| cv.evaluate(k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation.
    pub sd: f64,
    /// Moment skewness `m3 / m2^1.5`.
    pub skewness: f64,
    /// Standard error of `mean`.
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub word_index: usize,
    pub position_class: PositionClass,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualDiagnostic {
    pub model: LinearModel,
    pub residuals: Vec<Residual>,
    pub medial: ResidualSummary,
    pub clause_final: ResidualSummary,
}

fn summarize(values: &[f64], extra_mean_variance: f64) -> ResidualSummary {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    let sd = (m2 * n / (n - 1.0)).sqrt();
    ResidualSummary {
        n: values.len(),
        mean,
        sd,
        skewness: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
        std_error: (sd * sd / n + extra_mean_variance).sqrt(),
    }
}

/// Fits the baseline to sentence-medial rows and reports residuals for both
/// position classes.
///
/// Medial residuals are in-sample. Clause-final residuals are out-of-sample,
/// so the standard error of their mean also carries the variance of the
/// fitted mean at the clause-final rows.
pub fn residual_diagnostic(rows: &[FeatureRow]) -> Result<ResidualDiagnostic> {
    let (medial, finals): (Vec<usize>, Vec<usize>) =
        (0..rows.len()).partition(|&i| rows[i].position_class == PositionClass::SentenceMedial);
    if medial.is_empty() || finals.is_empty() {
        return Err(Error::InsufficientData(
            "residual diagnostic needs both medial and clause-final rows".into(),
        ));
    }
    let p = rows[0].baseline.len();
    let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    let (x, y) = design(rows, &medial, None);
    let model = fit_ols(&x, &y, &names)?;
    let residuals: Vec<Residual> = rows
        .iter()
        .map(|r| Residual {
            word_index: r.word_index,
            position_class: r.position_class,
            value: r.response - model.predict_row(&r.baseline),
        })
        .collect();
    let values = |idx: &[usize]| idx.iter().map(|&i| residuals[i].value).collect::<Vec<_>>();
    let final_rows: Vec<&[f64]> = finals.iter().map(|&i| rows[i].baseline.as_slice()).collect();
    let medial_summary = summarize(&values(&medial), 0.0);
    let final_summary = summarize(&values(&finals), model.mean_prediction_variance(&final_rows));
    Ok(ResidualDiagnostic {
        model,
        residuals,
        medial: medial_summary,
        clause_final: final_summary,
    })
}
