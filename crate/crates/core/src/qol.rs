//! Quality-of-life index: amenity-category weights from a satisfaction
//! regression, and the weighted-sum index itself.
//!
//! Weights come from an L2-regularised logistic regression of a binary
//! "satisfied with life" label on per-capita accessibility features, fitted
//! by damped Newton steps (IRLS). The objective is
//!
//! ```text
//! NLL(β) = Σᵢ [softplus(zᵢ) − yᵢ·zᵢ] + (λ/2)·‖β_features‖²,  z = β₀ + x·β
//! ```
//!
//! with the intercept unpenalised. Raw coefficients are normalised by
//! Σ|w_c| = 1 so indices stay comparable across weight vectors; negative
//! weights are kept (an amenity can predict dissatisfaction). The zone index
//! is `Q_i = Σ_c w_c · access_{i,c}`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};
use crate::transport::AccessProfile;

/// One survey respondent: feature values aligned to the category list, and
/// the binary satisfaction label.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveyRow<T> {
    pub features: Vec<T>,
    pub satisfied: bool,
}

/// Survey table with a shared category order.
#[derive(Debug, Clone, PartialEq)]
pub struct SurveyData<T> {
    pub categories: Vec<String>,
    pub rows: Vec<SurveyRow<T>>,
}

impl<T: Scalar> SurveyData<T> {
    pub fn new(categories: Vec<String>, rows: Vec<SurveyRow<T>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.features.len() != categories.len() {
                return Err(Error::Validation(format!(
                    "survey row {i} has {} features, expected {}",
                    row.features.len(),
                    categories.len()
                )));
            }
            for &f in &row.features {
                if !f.is_finite() {
                    return Err(Error::Validation(format!(
                        "survey row {i} has non-finite feature {f}"
                    )));
                }
            }
        }
        Ok(Self { categories, rows })
    }

    /// Parse the survey CSV: header `satisfied,<cat1>,<cat2>,...`.
    pub fn parse_csv(text: &str, source_name: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            file: source_name.to_string(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| perr(1, "empty survey file".into()))?;
        let mut cols = header.split(',').map(str::trim);
        match cols.next() {
            Some("satisfied") => {}
            other => {
                return Err(perr(
                    1,
                    format!("first column must be `satisfied`, got {other:?}"),
                ))
            }
        }
        let categories: Vec<String> = cols.map(String::from).collect();
        if categories.is_empty() {
            return Err(perr(1, "survey needs at least one feature column".into()));
        }
        let mut rows = Vec::new();
        for (lineno0, line) in lines {
            let lineno = lineno0 + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != categories.len() + 1 {
                return Err(perr(
                    lineno,
                    format!(
                        "expected {} fields, found {}",
                        categories.len() + 1,
                        fields.len()
                    ),
                ));
            }
            let satisfied = match fields[0] {
                "0" => false,
                "1" => true,
                other => return Err(perr(lineno, format!("label must be 0 or 1, got `{other}`"))),
            };
            let mut features = Vec::with_capacity(categories.len());
            for f in &fields[1..] {
                let v: f64 = f
                    .parse()
                    .map_err(|_| perr(lineno, format!("cannot parse feature `{f}`")))?;
                features.push(cast(v));
            }
            rows.push(SurveyRow {
                features,
                satisfied,
            });
        }
        Self::new(categories, rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("satisfied");
        for c in &self.categories {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(if row.satisfied { "1" } else { "0" });
            for f in &row.features {
                out.push(',');
                out.push_str(&format!("{f}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Fit configuration for the satisfaction regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig<T> {
    pub l2_lambda: T,
    pub max_iterations: usize,
    pub tolerance: T,
    pub include_intercept: bool,
}

impl<T: Scalar> Default for FitConfig<T> {
    fn default() -> Self {
        Self {
            l2_lambda: T::one(),
            max_iterations: 200,
            tolerance: cast(1e-8),
            include_intercept: true,
        }
    }
}

impl<T: Scalar> FitConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_lambda >= T::zero()) {
            return Err(Error::Validation(format!(
                "l2_lambda must be >= 0, got {}",
                self.l2_lambda
            )));
        }
        if !(self.tolerance > T::zero()) {
            return Err(Error::Validation(format!(
                "tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Raw regression output.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport<T> {
    pub categories: Vec<String>,
    /// Feature coefficients, aligned to `categories`.
    pub coefficients: Vec<T>,
    pub intercept: T,
    pub iterations: usize,
    pub gradient_norm: T,
    pub l2_lambda: T,
}

impl<T: Scalar> FitReport<T> {
    /// Plain-text report, one line per item.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("intercept\t{}\n", self.intercept));
        for (c, w) in self.categories.iter().zip(&self.coefficients) {
            out.push_str(&format!("coef\t{c}\t{w}\n"));
        }
        out.push_str(&format!("l2_lambda\t{}\n", self.l2_lambda));
        out.push_str(&format!("iterations\t{}\n", self.iterations));
        out.push_str(&format!(
            "gradient_norm\t{:e}\n",
            crate::scalar::to_f64(self.gradient_norm)
        ));
        out
    }
}

/// Normalised amenity-category weights, Σ|w_c| = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QoLWeights<T> {
    weights: BTreeMap<String, T>,
}

impl<T: Scalar> QoLWeights<T> {
    /// Normalise raw per-category values by Σ|w| = 1.
    pub fn from_raw(raw: BTreeMap<String, T>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Validation("weight set is empty".into()));
        }
        let mut norm = T::zero();
        for (c, &w) in &raw {
            if !w.is_finite() {
                return Err(Error::Validation(format!("weight for `{c}` is {w}")));
            }
            norm = norm + w.abs();
        }
        if !(norm > T::zero()) {
            return Err(Error::Validation(
                "all weights are zero; cannot normalise".into(),
            ));
        }
        let weights = raw.into_iter().map(|(c, w)| (c, w / norm)).collect();
        Ok(Self { weights })
    }

    pub fn get(&self, category: &str) -> Option<T> {
        self.weights.get(category).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &T)> {
        self.weights.iter()
    }

    pub fn categories(&self) -> impl Iterator<Item = &String> {
        self.weights.keys()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Numerically stable softplus: log(1 + e^z).
fn softplus<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Regularised negative log-likelihood at `beta` (`beta[0]` is the intercept
/// when `include_intercept`, features follow).
pub fn regularized_nll<T: Scalar>(data: &SurveyData<T>, cfg: &FitConfig<T>, beta: &[T]) -> T {
    let offset = usize::from(cfg.include_intercept);
    let mut nll = T::zero();
    for row in &data.rows {
        let mut z = if cfg.include_intercept {
            beta[0]
        } else {
            T::zero()
        };
        for (j, &x) in row.features.iter().enumerate() {
            z = z + beta[offset + j] * x;
        }
        let y = if row.satisfied { T::one() } else { T::zero() };
        nll = nll + softplus(z) - y * z;
    }
    let half = cast::<T>(0.5);
    let mut reg = T::zero();
    for &b in &beta[offset..] {
        reg = reg + b * b;
    }
    nll + half * cfg.l2_lambda * reg
}

/// Analytic gradient of [`regularized_nll`] (same coefficient layout).
pub fn nll_gradient<T: Scalar>(data: &SurveyData<T>, cfg: &FitConfig<T>, beta: &[T]) -> Vec<T> {
    let offset = usize::from(cfg.include_intercept);
    let dim = offset + data.categories.len();
    let mut grad = vec![T::zero(); dim];
    for row in &data.rows {
        let mut z = if cfg.include_intercept {
            beta[0]
        } else {
            T::zero()
        };
        for (j, &x) in row.features.iter().enumerate() {
            z = z + beta[offset + j] * x;
        }
        let y = if row.satisfied { T::one() } else { T::zero() };
        let resid = sigmoid(z) - y;
        if cfg.include_intercept {
            grad[0] = grad[0] + resid;
        }
        for (j, &x) in row.features.iter().enumerate() {
            grad[offset + j] = grad[offset + j] + resid * x;
        }
    }
    for j in offset..dim {
        grad[j] = grad[j] + cfg.l2_lambda * beta[j];
    }
    grad
}

fn grad_norm<T: Scalar>(g: &[T]) -> T {
    g.iter().fold(T::zero(), |a, &x| a + x * x).sqrt()
}

/// Solve the dense symmetric system `H x = b` by Gaussian elimination with
/// partial pivoting. Dimensions here are tiny (features + intercept).
fn solve_dense<T: Scalar>(h: &mut [Vec<T>], b: &mut [T]) -> Result<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if h[r][col].abs() > h[pivot][col].abs() {
                pivot = r;
            }
        }
        if h[pivot][col].abs() == T::zero() {
            return Err(Error::Fit("singular Hessian in Newton step".into()));
        }
        h.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = h[r][col] / h[col][col];
            for k in col..n {
                h[r][k] = h[r][k] - f * h[col][k];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s = s - h[col][k] * x[k];
        }
        x[col] = s / h[col][col];
    }
    Ok(x)
}

/// Fit amenity weights on survey data.
///
/// Damped Newton (IRLS) on the regularised NLL until the gradient norm is at
/// or below `cfg.tolerance`. Returns the normalised weights plus the raw fit
/// report.
pub fn fit_weights<T: Scalar>(
    data: &SurveyData<T>,
    cfg: &FitConfig<T>,
) -> Result<(QoLWeights<T>, FitReport<T>)> {
    cfg.validate()?;
    if data.rows.len() < 2 {
        return Err(Error::Fit(format!(
            "need at least 2 survey rows, got {}",
            data.rows.len()
        )));
    }
    let n_pos = data.rows.iter().filter(|r| r.satisfied).count();
    if n_pos == 0 || n_pos == data.rows.len() {
        return Err(Error::Fit(
            "survey labels are single-class; both labels must be present".into(),
        ));
    }

    let offset = usize::from(cfg.include_intercept);
    let dim = offset + data.categories.len();
    let mut beta = vec![T::zero(); dim];
    let mut iterations = 0;
    let mut gnorm = grad_norm(&nll_gradient(data, cfg, &beta));

    while gnorm > cfg.tolerance {
        if iterations >= cfg.max_iterations {
            return Err(Error::Convergence {
                iterations,
                gradient_norm: crate::scalar::to_f64(gnorm),
            });
        }
        iterations += 1;

        // Hessian: X^T W X (+ λ on feature diagonal), W = p(1-p).
        let grad = nll_gradient(data, cfg, &beta);
        let mut hess = vec![vec![T::zero(); dim]; dim];
        for row in &data.rows {
            let mut z = if cfg.include_intercept {
                beta[0]
            } else {
                T::zero()
            };
            for (j, &x) in row.features.iter().enumerate() {
                z = z + beta[offset + j] * x;
            }
            let p = sigmoid(z);
            let w = p * (T::one() - p);
            for a in 0..dim {
                let xa = if a == 0 && cfg.include_intercept {
                    T::one()
                } else {
                    row.features[a - offset]
                };
                for b in a..dim {
                    let xb = if b == 0 && cfg.include_intercept {
                        T::one()
                    } else {
                        row.features[b - offset]
                    };
                    hess[a][b] = hess[a][b] + w * xa * xb;
                }
            }
        }
        for a in 0..dim {
            for b in 0..a {
                hess[a][b] = hess[b][a];
            }
        }
        for j in offset..dim {
            hess[j][j] = hess[j][j] + cfg.l2_lambda;
        }

        let mut rhs = grad.clone();
        let step = solve_dense(&mut hess, &mut rhs)?;

        // Backtracking keeps Newton monotone on flat or ill-scaled data.
        let nll0 = regularized_nll(data, cfg, &beta);
        let mut scale = T::one();
        let half = cast::<T>(0.5);
        let mut candidate;
        loop {
            candidate = beta
                .iter()
                .zip(&step)
                .map(|(&b, &s)| b - scale * s)
                .collect::<Vec<T>>();
            if regularized_nll(data, cfg, &candidate) <= nll0 || scale < cast(1e-8) {
                break;
            }
            scale = scale * half;
        }
        beta = candidate;
        gnorm = grad_norm(&nll_gradient(data, cfg, &beta));
    }

    let coefficients: Vec<T> = beta[offset..].to_vec();
    let intercept = if cfg.include_intercept {
        beta[0]
    } else {
        T::zero()
    };
    let raw: BTreeMap<String, T> = data
        .categories
        .iter()
        .cloned()
        .zip(coefficients.iter().copied())
        .collect();
    let weights = QoLWeights::from_raw(raw)?;
    let report = FitReport {
        categories: data.categories.clone(),
        coefficients,
        intercept,
        iterations,
        gradient_norm: gnorm,
        l2_lambda: cfg.l2_lambda,
    };
    Ok((weights, report))
}

/// Quality-of-life index `Q_i = Σ_c w_c · access_{i,c}`.
///
/// Every category in the profile must be known to the weight set.
pub fn qol<T: Scalar>(profile: &AccessProfile<T>, weights: &QoLWeights<T>) -> Result<T> {
    let mut q = T::zero();
    for (cat, &v) in &profile.per_capita {
        let w = weights
            .get(cat)
            .ok_or_else(|| Error::Domain(format!("profile category `{cat}` has no weight")))?;
        q = q + w * v;
    }
    Ok(q)
}

/// Seeded synthetic survey: features uniform in [0, 2], labels Bernoulli of
/// the logistic probability under the given ground-truth coefficients.
/// Label noise from the logistic sampling keeps the data non-separable.
pub fn synthetic_survey<T: Scalar>(
    categories: &[&str],
    true_intercept: f64,
    true_coefficients: &[f64],
    n_rows: usize,
    rng: &mut ChaCha8Rng,
) -> SurveyData<T> {
    assert_eq!(categories.len(), true_coefficients.len());
    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let features_f64: Vec<f64> = (0..categories.len())
            .map(|_| rng.gen::<f64>() * 2.0)
            .collect();
        let z: f64 = true_intercept
            + features_f64
                .iter()
                .zip(true_coefficients)
                .map(|(x, w)| x * w)
                .sum::<f64>();
        let p = 1.0 / (1.0 + (-z).exp());
        let satisfied = rng.gen::<f64>() < p;
        rows.push(SurveyRow {
            features: features_f64.into_iter().map(cast).collect(),
            satisfied,
        });
    }
    SurveyData {
        categories: categories.iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomSource;

    fn cfg(lambda: f64) -> FitConfig<f64> {
        FitConfig {
            l2_lambda: lambda,
            ..FitConfig::default()
        }
    }

    #[test]
    fn mirrored_features_get_opposite_weights() {
        // x2 = −x1 exactly; balanced labels → symmetric optimum w1 = −w2.
        let mut rows = Vec::new();
        for i in 0..40 {
            let x = (i as f64) / 10.0 - 2.0;
            rows.push(SurveyRow {
                features: vec![x, -x],
                satisfied: i % 2 == 0,
            });
        }
        let data = SurveyData::new(vec!["a".into(), "b".into()], rows).unwrap();
        let (w, report) = fit_weights(&data, &cfg(1.0)).unwrap();
        assert!(
            (report.coefficients[0] + report.coefficients[1]).abs() < 1e-7,
            "{:?}",
            report.coefficients
        );
        let wa = w.get("a").unwrap();
        let wb = w.get("b").unwrap();
        assert!((wa.abs() - 0.5).abs() < 1e-7);
        assert!((wa + wb).abs() < 1e-7);
    }

    #[test]
    fn balanced_labels_give_zero_intercept() {
        // Constant (zero) features: only the intercept can move, and the
        // optimum is logit(0.5) = 0.
        let rows: Vec<SurveyRow<f64>> = (0..50)
            .map(|i| SurveyRow {
                features: vec![0.0],
                satisfied: i % 2 == 0,
            })
            .collect();
        let data = SurveyData::new(vec!["a".into()], rows).unwrap();
        let err = fit_weights(&data, &cfg(1.0)).unwrap_err();
        // all-zero feature weights cannot be normalised
        assert!(matches!(err, Error::Validation(_)), "{err}");

        // Mildly informative feature so normalisation succeeds; intercept
        // still lands near logit of the base rate with a symmetric design.
        let mut rng = RandomSource::new(5).stream(0);
        let data = synthetic_survey::<f64>(&["a"], 0.0, &[0.8], 400, &mut rng);
        let (_, report) = fit_weights(&data, &cfg(1.0)).unwrap();
        assert!(report.gradient_norm <= 1e-8);
    }

    #[test]
    fn single_class_labels_rejected() {
        let rows: Vec<SurveyRow<f64>> = (0..10)
            .map(|i| SurveyRow {
                features: vec![i as f64],
                satisfied: true,
            })
            .collect();
        let data = SurveyData::new(vec!["a".into()], rows).unwrap();
        assert!(matches!(
            fit_weights(&data, &cfg(1.0)),
            Err(Error::Fit(_))
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RandomSource::new(11).stream(0);
        let data = synthetic_survey::<f64>(&["a", "b", "c"], 0.3, &[1.0, -0.7, 0.2], 60, &mut rng);
        let cfg = cfg(1.0);
        let beta = vec![0.17, -0.42, 0.31, 0.08];
        let grad = nll_gradient(&data, &cfg, &beta);
        let h = 1e-6;
        for k in 0..beta.len() {
            let mut up = beta.clone();
            let mut dn = beta.clone();
            up[k] += h;
            dn[k] -= h;
            let fd = (regularized_nll(&data, &cfg, &up) - regularized_nll(&data, &cfg, &dn))
                / (2.0 * h);
            let denom = fd.abs().max(1e-8);
            assert!(
                ((grad[k] - fd) / denom).abs() < 1e-5,
                "coord {k}: analytic {} vs fd {fd}",
                grad[k]
            );
        }
    }

    #[test]
    fn stronger_regularisation_shrinks_coefficients() {
        let mut rng = RandomSource::new(23).stream(0);
        let data = synthetic_survey::<f64>(&["a", "b"], 0.1, &[1.4, -0.9], 120, &mut rng);
        let mut last = f64::INFINITY;
        for lambda in [0.1, 1.0, 10.0, 100.0] {
            let (_, report) = fit_weights(&data, &cfg(lambda)).unwrap();
            let norm: f64 = report.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!(norm <= last + 1e-9, "λ={lambda}: {norm} > {last}");
            last = norm;
        }
    }

    #[test]
    fn qol_weighted_sum() {
        let mut raw: BTreeMap<String, f64> = BTreeMap::new();
        raw.insert("park".to_string(), 0.3);
        raw.insert("shop".to_string(), 0.7);
        let w = QoLWeights::from_raw(raw).unwrap();
        let mut per_capita: BTreeMap<String, f64> = BTreeMap::new();
        per_capita.insert("park".to_string(), 0.5);
        per_capita.insert("shop".to_string(), 1.0);
        let profile = AccessProfile {
            zone: 0,
            per_capita,
        };
        assert!((qol(&profile, &w).unwrap() - 0.85).abs() < 1e-12);
    }

    #[test]
    fn qol_zero_profile_is_zero() {
        let mut raw: BTreeMap<String, f64> = BTreeMap::new();
        raw.insert("park".to_string(), 1.0);
        let w = QoLWeights::from_raw(raw).unwrap();
        let profile = AccessProfile::<f64> {
            zone: 0,
            per_capita: BTreeMap::new(),
        };
        assert_eq!(qol(&profile, &w).unwrap(), 0.0);
    }

    #[test]
    fn qol_unknown_category_rejected() {
        let mut raw: BTreeMap<String, f64> = BTreeMap::new();
        raw.insert("park".to_string(), 1.0);
        let w = QoLWeights::from_raw(raw).unwrap();
        let mut per_capita: BTreeMap<String, f64> = BTreeMap::new();
        per_capita.insert("casino".to_string(), 1.0);
        let profile = AccessProfile {
            zone: 0,
            per_capita,
        };
        assert!(matches!(qol(&profile, &w), Err(Error::Domain(_))));
    }

    #[test]
    fn normalisation_is_scale_invariant() {
        let mut raw1: BTreeMap<String, f64> = BTreeMap::new();
        raw1.insert("a".to_string(), 0.2);
        raw1.insert("b".to_string(), -0.6);
        let mut raw2: BTreeMap<String, f64> = BTreeMap::new();
        raw2.insert("a".to_string(), 2.0);
        raw2.insert("b".to_string(), -6.0);
        let w1 = QoLWeights::from_raw(raw1).unwrap();
        let w2 = QoLWeights::from_raw(raw2).unwrap();
        assert!((w1.get("a").unwrap() - w2.get("a").unwrap()).abs() < 1e-12);
        assert!((w1.get("b").unwrap() - w2.get("b").unwrap()).abs() < 1e-12);
    }

    #[test]
    fn survey_csv_round_trip() {
        let text = "satisfied,park,shop\n1,0.5,1\n0,0,0.25\n";
        let data = SurveyData::<f64>::parse_csv(text, "mem").unwrap();
        assert_eq!(data.categories, vec!["park", "shop"]);
        assert_eq!(data.rows.len(), 2);
        assert!(data.rows[0].satisfied);
        let back = SurveyData::<f64>::parse_csv(&data.to_csv(), "mem").unwrap();
        assert_eq!(data, back);
    }
}
