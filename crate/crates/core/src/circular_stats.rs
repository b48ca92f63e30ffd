//! Directional statistics on angles in `[-π, π)`.
//!
//! Angles map to unit vectors `(sin α, cos α)`; the mean resultant of those
//! vectors gives the mean direction and all circular moments. Confidence
//! intervals follow the two-branch von Mises approximation, and the
//! Watson-Williams test compares mean directions of several groups.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{chi2_1df_quantile, f_sf, CHI2_1DF_95};

/// Resultant lengths below this count as zero.
const ZERO_RESULTANT: f64 = 1e-12;

/// Wrap an angle into `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resultant {
    /// Mean of `sin α`.
    pub x: f64,
    /// Mean of `cos α`.
    pub y: f64,
    pub length: f64,
}

impl Resultant {
    pub fn direction(&self) -> Result<f64> {
        if self.length < ZERO_RESULTANT {
            return Err(Error::ZeroResultant);
        }
        Ok(wrap_angle(self.x.atan2(self.y)))
    }
}

fn check_weights(angles: &[f64], weights: Option<&[f64]>) -> Result<()> {
    if angles.is_empty() {
        return Err(Error::EmptyInput("angles"));
    }
    if let Some(w) = weights {
        if w.len() != angles.len() {
            return Err(Error::Misaligned(format!("{} angles, {} weights", angles.len(), w.len())));
        }
        if w.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("weights must be nonnegative"));
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::ZeroWeights);
        }
    }
    Ok(())
}

/// Weighted mean of the unit vectors `(sin α, cos α)`.
pub fn mean_resultant(angles: &[f64], weights: Option<&[f64]>) -> Result<Resultant> {
    check_weights(angles, weights)?;
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for (i, a) in angles.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[i]);
        sx += w * a.sin();
        sy += w * a.cos();
        sw += w;
    }
    let (x, y) = (sx / sw, sy / sw);
    Ok(Resultant {
        x,
        y,
        length: x.hypot(y),
    })
}

pub fn mean_direction(angles: &[f64], weights: Option<&[f64]>) -> Result<f64> {
    mean_resultant(angles, weights)?.direction()
}

/// `1 - ‖r̂‖`.
pub fn circular_variance(angles: &[f64]) -> Result<f64> {
    Ok(1.0 - mean_resultant(angles, None)?.length)
}

pub fn circular_skewness(angles: &[f64], mean: f64) -> Result<f64> {
    if angles.is_empty() {
        return Err(Error::EmptyInput("angles"));
    }
    Ok(angles.iter().map(|a| (2.0 * (a - mean)).sin()).sum::<f64>() / angles.len() as f64)
}

pub fn circular_kurtosis(angles: &[f64], mean: f64) -> Result<f64> {
    if angles.is_empty() {
        return Err(Error::EmptyInput("angles"));
    }
    Ok(angles.iter().map(|a| (2.0 * (a - mean)).cos()).sum::<f64>() / angles.len() as f64)
}

/// Triangular weight on the circle: 1 at `center`, 0 at its antipode.
pub fn hat_weights(angles: &[f64], center: f64) -> Vec<f64> {
    angles
        .iter()
        .map(|a| 1.0 - wrap_angle(a - center).abs() / PI)
        .collect()
}

/// Chi-square (1 df) critical value for a confidence level.
pub fn chi2_critical(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("confidence level must be in (0, 1), got {level}")));
    }
    if (level - 0.95).abs() < 1e-12 {
        Ok(CHI2_1DF_95)
    } else {
        Ok(chi2_1df_quantile(level))
    }
}

/// Confidence half-width of the mean direction for `n` observations with
/// mean resultant length `rbar`.
pub fn ci_halfwidth(n: f64, rbar: f64, level: f64) -> Result<f64> {
    let chi2 = chi2_critical(level)?;
    let r = n * rbar;
    if !(r > 0.0) {
        return Err(Error::CiUndefined);
    }
    let cos_d = if rbar <= 0.9 {
        let num = 2.0 * n * (2.0 * r * r - n * chi2);
        if num <= 0.0 {
            return Err(Error::CiUndefined);
        }
        (num / (4.0 * n - chi2)).sqrt() / r
    } else {
        let inner = n * n - (n * n - r * r) * (chi2 / n).exp();
        if inner < 0.0 {
            return Err(Error::CiUndefined);
        }
        inner.sqrt() / r
    };
    Ok(cos_d.min(1.0).acos())
}

/// Effective sample size `(Σw)² / Σw²`.
pub fn effective_n(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

/// Half-width `d` of the confidence interval `[α̂ - d, α̂ + d]`.
///
/// Weighted samples use the weighted resultant and the effective sample size.
pub fn confidence_interval(angles: &[f64], weights: Option<&[f64]>, level: f64) -> Result<f64> {
    let res = mean_resultant(angles, weights)?;
    if res.length < ZERO_RESULTANT {
        return Err(Error::CiUndefined);
    }
    let n = match weights {
        Some(w) => effective_n(w),
        None => angles.len() as f64,
    };
    ci_halfwidth(n, res.length, level)
}

/// 0 when `alpha0` lies inside `[α̂ - d, α̂ + d]` on the circle, 1 otherwise.
pub fn mean_test_decision(mean: f64, d: f64, alpha0: f64) -> u8 {
    if wrap_angle(mean - alpha0).abs() <= d {
        0
    } else {
        1
    }
}

/// One-sample test of `H0: mean direction = alpha0` at the 95% level.
pub fn one_sample_mean_test(angles: &[f64], alpha0: f64) -> Result<u8> {
    let mean = mean_direction(angles, None).map_err(|_| Error::CiUndefined)?;
    let d = confidence_interval(angles, None, 0.95)?;
    Ok(mean_test_decision(mean, d, alpha0))
}

/// Piecewise approximation of the von Mises concentration from `rbar`.
pub fn kappa_estimate(rbar: f64) -> f64 {
    if rbar < 0.53 {
        2.0 * rbar + rbar.powi(3) + 5.0 * rbar.powi(5) / 6.0
    } else if rbar < 0.85 {
        -0.4 + 1.39 * rbar + 0.43 / (1.0 - rbar)
    } else {
        1.0 / (rbar.powi(3) - 4.0 * rbar.powi(2) + 3.0 * rbar)
    }
}

/// Watson-Williams multi-sample test for a common mean direction; returns the p-value.
pub fn watson_williams<G: AsRef<[f64]>>(groups: &[G]) -> Result<f64> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::invalid(format!("Watson-Williams needs at least 2 groups, got {k}")));
    }
    let (mut sum_r, mut n, mut cx, mut cy) = (0.0, 0usize, 0.0, 0.0);
    for g in groups {
        let g = g.as_ref();
        if g.len() < 2 {
            return Err(Error::invalid(format!(
                "Watson-Williams needs at least 2 samples per group, got {}",
                g.len()
            )));
        }
        let (sx, sy) = g.iter().fold((0.0, 0.0), |(x, y), a| (x + a.sin(), y + a.cos()));
        sum_r += sx.hypot(sy);
        cx += sx;
        cy += sy;
        n += g.len();
    }
    let n_f = n as f64;
    let total_r = cx.hypot(cy);
    let between = sum_r - total_r;
    let within = n_f - sum_r;
    let eps = 1e-12 * n_f;

    if between <= eps {
        return Ok(1.0);
    }
    if within <= eps {
        // every group perfectly concentrated; means either coincide or not
        return Ok(if n_f - total_r <= eps { 1.0 } else { 0.0 });
    }
    let kappa = kappa_estimate(sum_r / n_f);
    let correction = 1.0 + 3.0 / (8.0 * kappa);
    let (df1, df2) = ((k - 1) as f64, (n - k) as f64);
    let f = correction * df2 * between / (df1 * within);
    Ok(f_sf(f, df1, df2).clamp(0.0, 1.0))
}

/// Lead (positive: primary leads) and its half-width, in minutes.
pub fn lead_lag(alpha_hat: f64, d: f64, wavelength_minutes: f64) -> (f64, f64) {
    (
        alpha_hat / TAU * wavelength_minutes,
        d / TAU * wavelength_minutes,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LeadClass {
    PrimaryLeads,
    SecondaryLeads,
    Undecided,
    NotPositivelyCorrelated,
}

impl LeadClass {
    pub fn as_str(self) -> &'static str {
        match self {
            LeadClass::PrimaryLeads => "primary_leads",
            LeadClass::SecondaryLeads => "secondary_leads",
            LeadClass::Undecided => "undecided",
            LeadClass::NotPositivelyCorrelated => "not_positively_correlated",
        }
    }
}

/// Lead classification from the weighted mean direction and its half-width.
pub fn classify_lead(alpha_w: f64, d_w: f64) -> LeadClass {
    if alpha_w.abs() > FRAC_PI_2 {
        LeadClass::NotPositivelyCorrelated
    } else if alpha_w - d_w > 0.0 {
        LeadClass::PrimaryLeads
    } else if alpha_w + d_w < 0.0 {
        LeadClass::SecondaryLeads
    } else {
        LeadClass::Undecided
    }
}

/// All summary statistics of one distribution. Undefined quantities are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularSummary {
    pub n: usize,
    pub mean_direction: Option<f64>,
    pub resultant_length: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub ci_halfwidth: Option<f64>,
    pub weighted_mean: Option<f64>,
    pub weighted_ci: Option<f64>,
    pub hat_center: f64,
}

impl CircularSummary {
    pub fn compute(angles: &[f64], hat_center: f64, level: f64) -> Result<Self> {
        let res = mean_resultant(angles, None)?;
        let mean = res.direction().ok();
        let weights = hat_weights(angles, hat_center);
        let weighted = mean_resultant(angles, Some(&weights)).ok();
        let weighted_mean = weighted.and_then(|r| r.direction().ok());
        let weighted_ci = match weighted_mean {
            Some(_) => confidence_interval(angles, Some(&weights), level).ok(),
            None => None,
        };
        Ok(CircularSummary {
            n: angles.len(),
            mean_direction: mean,
            resultant_length: res.length,
            variance: 1.0 - res.length,
            skewness: mean.map(|m| circular_skewness(angles, m)).transpose()?,
            kurtosis: mean.map(|m| circular_kurtosis(angles, m)).transpose()?,
            ci_halfwidth: mean.and_then(|_| confidence_interval(angles, None, level).ok()),
            weighted_mean,
            weighted_ci,
            hat_center,
        })
    }

    /// One-sample mean test against `alpha0`; `None` when the interval is undefined.
    pub fn mean_test(&self, alpha0: f64) -> Option<u8> {
        Some(mean_test_decision(self.mean_direction?, self.ci_halfwidth?, alpha0))
    }

    /// Lead classification; falls back on the unweighted mean when the
    /// weighted statistics are undefined (e.g. all mass at ±π).
    pub fn classification(&self) -> LeadClass {
        match (self.weighted_mean, self.weighted_ci) {
            (Some(a), Some(d)) => classify_lead(a, d),
            (Some(a), None) | (None, Some(a)) if a.abs() > FRAC_PI_2 => LeadClass::NotPositivelyCorrelated,
            (None, _) if self.mean_direction.is_some_and(|m| m.abs() > FRAC_PI_2) => {
                LeadClass::NotPositivelyCorrelated
            }
            _ => LeadClass::Undecided,
        }
    }
}
