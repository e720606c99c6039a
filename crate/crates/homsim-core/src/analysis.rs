//! Scan normalization, visibility extraction, curve fitting, and inversion
//! of the coincidence law back to the engineered phase.

use crate::coincidence::ScanResult;
use crate::error::{Error, Result};

/// One fitted parameter with its one-sigma uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct FitParameter {
    pub name: &'static str,
    pub value: f64,
    pub uncertainty: f64,
}

/// Outcome of a least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub parameters: Vec<FitParameter>,
    pub residual_sum_of_squares: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Diagnostics when the fit failed or looks suspect; never silent.
    pub message: Option<String>,
}

impl FitResult {
    pub fn parameter(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.parameter(name).map(|p| p.value)
    }

    pub fn uncertainty(&self, name: &str) -> Option<f64> {
        self.parameter(name).map(|p| p.uncertainty)
    }
}

/// Depth of a coincidence dip or height of a peak relative to the far-delay
/// baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityReport {
    pub v: f64,
    pub kind: VisibilityKind,
    pub c_extremum: f64,
    pub c_baseline: f64,
    /// Set when the raw ratio fell outside [0, 1] (for instance a dip was
    /// requested but the center sits above the baseline) and was clamped.
    pub out_of_range: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VisibilityKind {
    Dip,
    Peak,
}

/// Number of baseline points required outside the dip/peak.
const BASELINE_MIN_POINTS: usize = 3;

/// Normalize a delay scan by the mean accidental-subtracted counts at
/// |dL| > 3 lc. Uses sampled counts when present, expected values otherwise.
pub fn normalize_scan(scan: &ScanResult, coherence_length: f64) -> Result<ScanResult> {
    let cutoff = 3.0 * coherence_length;
    let values: Vec<f64> = if scan.is_sampled() {
        scan.raw_counts.iter().map(|&c| c as f64).collect()
    } else {
        scan.expected.clone()
    };
    let baseline_points: Vec<f64> = scan
        .axis
        .iter()
        .zip(&values)
        .filter(|(x, _)| x.abs() > cutoff)
        .map(|(_, v)| v - scan.accidental_per_point)
        .collect();
    if baseline_points.len() < BASELINE_MIN_POINTS {
        return Err(Error::InsufficientBaseline {
            need: BASELINE_MIN_POINTS,
            found: baseline_points.len(),
            cutoff,
        });
    }
    let baseline = baseline_points.iter().sum::<f64>() / baseline_points.len() as f64;
    if !(baseline > 0.0) {
        return Err(Error::ZeroWeight);
    }
    let mut out = scan.clone();
    out.normalized = values
        .iter()
        .map(|v| (v - scan.accidental_per_point) / baseline)
        .collect();
    out.stderr = values.iter().map(|v| v.max(0.0).sqrt() / baseline).collect();
    out.baseline_counts = baseline;
    Ok(out)
}

/// Visibility of a normalized scan, read at the dL = 0 sample against the
/// unit baseline: v_dip = (C - C_min)/C, v_peak = (C_max - C)/C.
pub fn visibility(scan: &ScanResult, kind: VisibilityKind) -> Result<VisibilityReport> {
    let center = scan.index_nearest_zero().ok_or(Error::EmptyScan)?;
    let c_extremum = scan.normalized[center];
    let c_baseline = 1.0;
    let raw = match kind {
        VisibilityKind::Dip => (c_baseline - c_extremum) / c_baseline,
        VisibilityKind::Peak => (c_extremum - c_baseline) / c_baseline,
    };
    Ok(VisibilityReport {
        v: raw.clamp(0.0, 1.0),
        kind,
        c_extremum,
        c_baseline,
        out_of_range: !(0.0..=1.0).contains(&raw),
    })
}

struct LineFit {
    slope: f64,
    intercept: f64,
    /// Unscaled covariance factors: var(slope) = sw/det, var(intercept) =
    /// swxx/det in units of the weights.
    slope_var: f64,
    intercept_var: f64,
    weighted_rss: f64,
}

fn weighted_line(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    let sw: f64 = w.iter().sum();
    let swx: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum();
    let swy: f64 = w.iter().zip(y).map(|(wi, yi)| wi * yi).sum();
    let swxx: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi * xi).sum();
    let swxy: f64 = w
        .iter()
        .zip(x)
        .zip(y)
        .map(|((wi, xi), yi)| wi * xi * yi)
        .sum();
    let det = sw * swxx - swx * swx;
    if det <= 1e-12 * sw * swxx.max(1e-300) {
        return Err(Error::DegenerateDesign);
    }
    let slope = (sw * swxy - swx * swy) / det;
    let intercept = (swxx * swy - swx * swxy) / det;
    let weighted_rss: f64 = w
        .iter()
        .zip(x)
        .zip(y)
        .map(|((wi, xi), yi)| {
            let r = yi - (slope * xi + intercept);
            wi * r * r
        })
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        slope_var: sw / det,
        intercept_var: swxx / det,
        weighted_rss,
    })
}

fn cosine_design(phis: &[f64]) -> Result<Vec<f64>> {
    let mut distinct: Vec<f64> = phis.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let span = distinct.last().copied().unwrap_or(0.0) - distinct.first().copied().unwrap_or(0.0);
    if distinct.len() < 5 || span < std::f64::consts::PI - 1e-9 {
        return Err(Error::DegenerateDesign);
    }
    Ok(phis.iter().map(|p| 1.0 - p.cos()).collect())
}

fn cosine_result(x: &[f64], values: &[f64], fit: LineFit, alpha_sigma: f64, beta_sigma: f64) -> FitResult {
    let rss: f64 = x
        .iter()
        .zip(values)
        .map(|(xi, yi)| {
            let r = yi - (fit.slope * xi + fit.intercept);
            r * r
        })
        .sum();
    FitResult {
        parameters: vec![
            FitParameter { name: "alpha", value: fit.slope, uncertainty: alpha_sigma },
            FitParameter { name: "beta", value: fit.intercept, uncertainty: beta_sigma },
        ],
        residual_sum_of_squares: rss,
        converged: true,
        iterations: 0,
        message: None,
    }
}

/// Closed-form linear least squares of C(phi) = alpha (1 - cos phi) + beta.
///
/// Requires at least five distinct phases spanning at least pi, otherwise
/// the design matrix is (near) degenerate. Shot noise on coincidence counts
/// scales with the rate itself, so a first unweighted pass sets Poisson
/// weights from the fitted curve and a second weighted pass produces the
/// parameters; uncertainties come from the weighted residual variance.
pub fn fit_cosine(phis: &[f64], values: &[f64]) -> Result<FitResult> {
    assert_eq!(phis.len(), values.len(), "axis and data lengths differ");
    let x = cosine_design(phis)?;
    let flat = vec![1.0; x.len()];
    let first = weighted_line(&x, values, &flat)?;

    let scale = values.iter().fold(1e-3f64, |m, v| m.max(v.abs()));
    let weights: Vec<f64> = x
        .iter()
        .map(|xi| 1.0 / (first.slope * xi + first.intercept).max(1e-3 * scale))
        .collect();
    let fit = weighted_line(&x, values, &weights)?;
    let dof = (x.len() as isize - 2).max(1) as f64;
    let sigma2 = fit.weighted_rss / dof;
    let alpha_sigma = (sigma2 * fit.slope_var).sqrt();
    let beta_sigma = (sigma2 * fit.intercept_var).sqrt();
    Ok(cosine_result(&x, values, fit, alpha_sigma, beta_sigma))
}

/// Like [`fit_cosine`], but with known one-sigma errors per point. The
/// covariance comes directly from the weighted normal equations, with no
/// residual rescaling, which is the right convention when the errors are
/// Poisson errors propagated from counts.
pub fn fit_cosine_with_errors(phis: &[f64], values: &[f64], sigmas: &[f64]) -> Result<FitResult> {
    assert_eq!(phis.len(), values.len(), "axis and data lengths differ");
    assert_eq!(phis.len(), sigmas.len(), "axis and error lengths differ");
    let x = cosine_design(phis)?;
    let floor = sigmas
        .iter()
        .copied()
        .filter(|s| *s > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return Err(Error::DegenerateDesign);
    }
    let weights: Vec<f64> = sigmas.iter().map(|s| 1.0 / s.max(floor).powi(2)).collect();
    let fit = weighted_line(&x, values, &weights)?;
    let alpha_sigma = fit.slope_var.sqrt();
    let beta_sigma = fit.intercept_var.sqrt();
    Ok(cosine_result(&x, values, fit, alpha_sigma, beta_sigma))
}

/// Invert the coincidence law: phi = arccos(1 - (C - beta)/alpha), on
/// [0, pi]. Values outside the physical range are clamped within a 1e-6
/// tolerance and rejected beyond it.
pub fn retrieve_phase(c_normalized: f64, alpha: f64, beta: f64) -> Result<f64> {
    const TOL: f64 = 1e-6;
    let u = (c_normalized - beta) / alpha;
    if !(-TOL..=2.0 + TOL).contains(&u) || !u.is_finite() {
        return Err(Error::RateOutOfRange(c_normalized));
    }
    Ok((1.0 - u.clamp(0.0, 2.0)).acos())
}

// ---------------------------------------------------------------------------
// Gaussian fit (Levenberg-Marquardt)
// ---------------------------------------------------------------------------

const GAUSS_PARAMS: usize = 4; // amplitude, center, sigma, offset
const LM_MAX_ITER: usize = 300;
const LM_LAMBDA_MAX: f64 = 1e12;

fn gauss(x: f64, p: &[f64; GAUSS_PARAMS]) -> f64 {
    let [amplitude, center, sigma, offset] = *p;
    let z = (x - center) / sigma;
    offset + amplitude * (-0.5 * z * z).exp()
}

fn gauss_jacobian(x: f64, p: &[f64; GAUSS_PARAMS]) -> [f64; GAUSS_PARAMS] {
    let [amplitude, center, sigma, _] = *p;
    let d = x - center;
    let e = (-0.5 * d * d / (sigma * sigma)).exp();
    [
        e,
        amplitude * e * d / (sigma * sigma),
        amplitude * e * d * d / (sigma * sigma * sigma),
        1.0,
    ]
}

fn rss_of(xs: &[f64], ys: &[f64], p: &[f64; GAUSS_PARAMS]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - gauss(x, p);
            r * r
        })
        .sum()
}

/// Solve a small symmetric linear system by Gauss-Jordan elimination with
/// partial pivoting. Returns `None` when singular.
fn solve4(mut a: [[f64; GAUSS_PARAMS]; GAUSS_PARAMS], mut b: [f64; GAUSS_PARAMS]) -> Option<[f64; GAUSS_PARAMS]> {
    for col in 0..GAUSS_PARAMS {
        let pivot = (col..GAUSS_PARAMS).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = 1.0 / a[col][col];
        for k in col..GAUSS_PARAMS {
            a[col][k] *= inv;
        }
        b[col] *= inv;
        for row in 0..GAUSS_PARAMS {
            if row != col {
                let f = a[row][col];
                for k in col..GAUSS_PARAMS {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    Some(b)
}

fn invert4(m: [[f64; GAUSS_PARAMS]; GAUSS_PARAMS]) -> Option<[[f64; GAUSS_PARAMS]; GAUSS_PARAMS]> {
    let mut out = [[0.0; GAUSS_PARAMS]; GAUSS_PARAMS];
    for col in 0..GAUSS_PARAMS {
        let mut e = [0.0; GAUSS_PARAMS];
        e[col] = 1.0;
        let x = solve4(m, e)?;
        for row in 0..GAUSS_PARAMS {
            out[row][col] = x[row];
        }
    }
    Some(out)
}

/// Deterministic starting point: offset from the outer points, center at the
/// extremum, amplitude from the extremum height, and sigma from the half
/// width at half extremum.
fn gauss_init(xs: &[f64], ys: &[f64]) -> [f64; GAUSS_PARAMS] {
    let n = xs.len();
    let mut by_abs: Vec<usize> = (0..n).collect();
    by_abs.sort_by(|&i, &j| xs[i].abs().total_cmp(&xs[j].abs()));
    let outer = &by_abs[n - (n / 4).max(2)..];
    let offset = outer.iter().map(|&i| ys[i]).sum::<f64>() / outer.len() as f64;

    let peak = (0..n)
        .max_by(|&i, &j| (ys[i] - offset).abs().total_cmp(&(ys[j] - offset).abs()))
        .unwrap();
    let center = xs[peak];
    let amplitude = ys[peak] - offset;

    let half = amplitude.abs() / 2.0;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let pos = order.iter().position(|&i| i == peak).unwrap();
    let mut hwhm = f64::NAN;
    for step in 1..n {
        let mut crossed = None;
        if pos + step < n {
            let i = order[pos + step];
            if (ys[i] - offset).abs() < half {
                crossed = Some((xs[i] - center).abs());
            }
        }
        if crossed.is_none() && pos >= step {
            let i = order[pos - step];
            if (ys[i] - offset).abs() < half {
                crossed = Some((xs[i] - center).abs());
            }
        }
        if let Some(w) = crossed {
            hwhm = w;
            break;
        }
    }
    let span = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - xs.iter().copied().fold(f64::INFINITY, f64::min);
    let sigma = if hwhm.is_finite() && hwhm > 0.0 { hwhm } else { span / 4.0 };
    [amplitude, center, sigma, offset]
}

/// Nonlinear least squares of y = offset + amplitude exp(-(x-c)^2/(2 s^2)).
///
/// Levenberg-Marquardt from the documented deterministic initialization.
/// Non-convergence and a fitted center outside the scanned window are
/// reported on the result, with diagnostics, rather than silently dropped.
pub fn fit_gaussian(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    assert_eq!(xs.len(), ys.len(), "axis and data lengths differ");
    let n = xs.len();
    if n < 7 {
        return Err(Error::DegenerateDesign);
    }

    let mut p = gauss_init(xs, ys);
    let mut rss = rss_of(xs, ys, &p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    let mut message = None;

    while iterations < LM_MAX_ITER {
        iterations += 1;
        let mut jtj = [[0.0; GAUSS_PARAMS]; GAUSS_PARAMS];
        let mut jtr = [0.0; GAUSS_PARAMS];
        for (&x, &y) in xs.iter().zip(ys) {
            let j = gauss_jacobian(x, &p);
            let r = y - gauss(x, &p);
            for a in 0..GAUSS_PARAMS {
                jtr[a] += j[a] * r;
                for b in 0..GAUSS_PARAMS {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }

        let mut damped = jtj;
        for d in 0..GAUSS_PARAMS {
            damped[d][d] += lambda * jtj[d][d].max(1e-300);
        }
        let Some(delta) = solve4(damped, jtr) else {
            message = Some(format!("normal equations singular at iteration {iterations}"));
            break;
        };
        let mut trial = p;
        for d in 0..GAUSS_PARAMS {
            trial[d] += delta[d];
        }
        let trial_ok = trial[2] != 0.0 && trial.iter().all(|v| v.is_finite());
        let trial_rss = if trial_ok { rss_of(xs, ys, &trial) } else { f64::INFINITY };

        if trial_rss < rss {
            let improvement = rss - trial_rss;
            p = trial;
            rss = trial_rss;
            lambda = (lambda / 10.0).max(1e-14);
            if improvement <= 1e-14 * rss.max(1e-300) {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > LM_LAMBDA_MAX {
                // No downhill direction left; the current point is the
                // (possibly local) optimum.
                converged = true;
                break;
            }
        }
    }

    if !converged && message.is_none() {
        message = Some(format!(
            "no convergence after {LM_MAX_ITER} iterations (rss {rss:.3e}, lambda {lambda:.1e})"
        ));
    }

    p[2] = p[2].abs();
    let (x_min, x_max) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if converged && !(x_min..=x_max).contains(&p[1]) {
        converged = false;
        message = Some(format!(
            "fitted center {:.3e} lies outside the scanned window [{x_min:.3e}, {x_max:.3e}]",
            p[1]
        ));
    }

    // Covariance from the unweighted normal equations at the optimum.
    let mut jtj = [[0.0; GAUSS_PARAMS]; GAUSS_PARAMS];
    for &x in xs {
        let j = gauss_jacobian(x, &p);
        for a in 0..GAUSS_PARAMS {
            for b in 0..GAUSS_PARAMS {
                jtj[a][b] += j[a] * j[b];
            }
        }
    }
    let dof = (n as isize - GAUSS_PARAMS as isize).max(1) as f64;
    let sigma2 = rss / dof;
    let uncertainties = match invert4(jtj) {
        Some(cov) => [0, 1, 2, 3].map(|d| (cov[d][d] * sigma2).max(0.0).sqrt()),
        None => [f64::NAN; GAUSS_PARAMS],
    };

    Ok(FitResult {
        parameters: vec![
            FitParameter { name: "amplitude", value: p[0], uncertainty: uncertainties[0] },
            FitParameter { name: "center", value: p[1], uncertainty: uncertainties[1] },
            FitParameter { name: "sigma", value: p[2], uncertainty: uncertainties[2] },
            FitParameter { name: "offset", value: p[3], uncertainty: uncertainties[3] },
        ],
        residual_sum_of_squares: rss,
        converged,
        iterations,
        message,
    })
}
