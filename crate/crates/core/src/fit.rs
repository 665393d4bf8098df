//! Log-log power-law fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y ≈ slope x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Flagged,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// The worse of two verdicts (`Fail` > `Flagged` > `Pass`).
    pub fn worst(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Flagged, _) | (_, Flagged) => Flagged,
            _ => Pass,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Flagged => "flagged",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub window: (f64, f64),
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    pub target: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Values below this are treated as numerically zero and left out of fits.
pub const FIT_FLOOR: f64 = 1e-12;

/// Fit `log value` against `log t` over `window`; pass iff slope <= target + tol.
pub fn fit_decay(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
    target: f64,
    tol: f64,
) -> Result<DecayFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(&t, &v)| {
            t >= window.0 && t <= window.1 && t > 0.0 && v > FIT_FLOOR && v.is_finite()
        })
        .map(|(&t, &v)| (t.ln(), v.ln()))
        .unzip();
    if x.len() < 6 {
        return Err(Error::InsufficientPoints(x.len()));
    }
    let fit = linear_fit(&x, &y);
    Ok(DecayFit {
        window,
        exponent: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points: x.len(),
        target,
        tolerance: tol,
        verdict: Verdict::from_bool(fit.slope <= target + tol),
    })
}

/// `n` log-spaced samples from `a` to `b` inclusive.
pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    let mut out: Vec<f64> = (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect();
    // exact endpoints, so closed fit windows [a, b] keep them
    out[0] = a;
    out[n - 1] = b;
    out
}
