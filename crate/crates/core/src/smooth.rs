//! Smooth one-variable functions with exact derivatives: the mollified step,
//! the spectral cutoff `g`, the cone functions `f` and a few test functions.

use std::sync::Arc;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taylor::Jet;

/// A real function of one variable evaluable together with its derivatives.
pub trait Smooth: Send + Sync {
    /// Taylor coefficients at `x` up to `order`.
    fn jet(&self, x: f64, order: usize) -> Jet;

    fn value(&self, x: f64) -> f64 {
        self.jet(x, 0).value()
    }

    fn derivative(&self, x: f64, k: usize) -> f64 {
        self.jet(x, k).derivative(k)
    }

    /// Closed interval outside of which the function is constant, if any.
    fn transition(&self) -> Option<(f64, f64)> {
        None
    }
}

const PANELS: usize = 64;
const NODES: usize = 12;

/// `S(y) = ∫_0^y b / ∫_0^1 b` with the bump `b(y) = exp(-beta / (y (1 - y)))`.
///
/// `S` is 0 for `y <= 0`, 1 for `y >= 1`, C^∞, and `S(1 - y) = 1 - S(y)`.
#[derive(Clone)]
pub struct MollifiedStep {
    pub beta: f64,
    mass: f64,
    // cumulative mass at panel edges on [0, 1/2]
    table: Arc<Vec<f64>>,
    rule: Arc<GaussLegendre>,
}

impl std::fmt::Debug for MollifiedStep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MollifiedStep")
            .field("beta", &self.beta)
            .finish()
    }
}

impl MollifiedStep {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Invalid(format!(
                "bump exponent must be positive, got {beta}"
            )));
        }
        let rule = GaussLegendre::new(NODES).map_err(|e| Error::Invalid(e.to_string()))?;
        let h = 0.5 / PANELS as f64;
        let bump = |y: f64| bump(beta, y);
        let mut table = vec![0.0; PANELS + 1];
        for p in 0..PANELS {
            table[p + 1] = table[p] + rule.integrate(p as f64 * h, (p + 1) as f64 * h, bump);
        }
        let mass = 2.0 * table[PANELS];
        Ok(MollifiedStep {
            beta,
            mass,
            table: Arc::new(table),
            rule: Arc::new(rule),
        })
    }

    /// `∫_0^1 b`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn bump(&self, y: f64) -> f64 {
        bump(self.beta, y)
    }

    fn half_integral(&self, y: f64) -> f64 {
        let h = 0.5 / PANELS as f64;
        let p = ((y / h).floor() as usize).min(PANELS - 1);
        let lo = p as f64 * h;
        self.table[p] + self.rule.integrate(lo, y, |s| bump(self.beta, s))
    }

    pub fn step(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else if y >= 1.0 {
            1.0
        } else if y <= 0.5 {
            self.half_integral(y) / self.mass
        } else {
            1.0 - self.half_integral(1.0 - y) / self.mass
        }
    }

    /// Jet of the bump itself.
    pub fn bump_jet(&self, y: f64, order: usize) -> Jet {
        bump_jet(self.beta, y, order)
    }
}

impl Smooth for MollifiedStep {
    fn jet(&self, y: f64, order: usize) -> Jet {
        let mut out = Jet::constant(self.step(y), order);
        if order > 0 && y > 0.0 && y < 1.0 {
            let b = bump_jet(self.beta, y, order - 1);
            for k in 1..=order {
                out.0[k] = b.0[k - 1] / (k as f64 * self.mass);
            }
        }
        out
    }

    fn transition(&self) -> Option<(f64, f64)> {
        Some((0.0, 1.0))
    }
}

fn bump(beta: f64, y: f64) -> f64 {
    if y <= 0.0 || y >= 1.0 {
        0.0
    } else {
        (-beta / (y * (1.0 - y))).exp()
    }
}

fn bump_jet(beta: f64, y: f64, order: usize) -> Jet {
    if y <= 0.0 || y >= 1.0 {
        return Jet::constant(0.0, order);
    }
    let v = Jet::variable(y, order);
    let q = &v * &Jet::variable(1.0 - y, order).chain_linear(-1.0);
    q.recip().scale(-beta).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffParams {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

pub fn default_beta() -> f64 {
    1.0
}

/// Energy window `g(λ) = S((λ - E₋)/δ) S((E₊ - λ)/δ)`.
///
/// `supp g = [E₋, E₊]`, `0 <= g <= 1`, and `g = 1` on `[E₋ + δ, E₊ - δ]`.
#[derive(Clone, Debug)]
pub struct SpectralCutoff {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    step: MollifiedStep,
}

impl SpectralCutoff {
    pub fn new(lower: f64, upper: f64, width: f64) -> Result<Self> {
        Self::with_beta(lower, upper, width, default_beta())
    }

    pub fn with_beta(lower: f64, upper: f64, width: f64, beta: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::Invalid(format!(
                "transition width must be positive, got {width}"
            )));
        }
        if upper - lower < 2.0 * width - 1e-12 {
            return Err(Error::Invalid(format!(
                "window ({lower}, {upper}) is narrower than two transition widths {width}"
            )));
        }
        Ok(SpectralCutoff {
            lower,
            upper,
            width,
            step: MollifiedStep::new(beta)?,
        })
    }

    pub fn from_params(p: &CutoffParams) -> Result<Self> {
        Self::with_beta(p.lower, p.upper, p.width, p.beta)
    }

    pub fn params(&self) -> CutoffParams {
        CutoffParams {
            lower: self.lower,
            upper: self.upper,
            width: self.width,
            beta: self.step.beta,
        }
    }

    pub fn beta(&self) -> f64 {
        self.step.beta
    }

    /// A cutoff equal to one on `supp self`.
    pub fn widened(&self) -> Self {
        SpectralCutoff {
            lower: self.lower - self.width,
            upper: self.upper + self.width,
            width: self.width,
            step: self.step.clone(),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        self.step.step((lambda - self.lower) / self.width)
            * self.step.step((self.upper - lambda) / self.width)
    }
}

impl Smooth for SpectralCutoff {
    fn jet(&self, x: f64, order: usize) -> Jet {
        let d = self.width;
        let rise = self
            .step
            .jet((x - self.lower) / d, order)
            .chain_linear(1.0 / d);
        let fall = self
            .step
            .jet((self.upper - x) / d, order)
            .chain_linear(-1.0 / d);
        &rise * &fall
    }

    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn transition(&self) -> Option<(f64, f64)> {
        Some((self.lower, self.upper))
    }
}

/// Cone function `f` built from `φ(λ) = exp(-1/(λ(w-λ)))` with `w = c - v`:
/// `f' = φ² / ∫φ²`, `f(λ) = ∫_{-∞}^λ f'`, `u = sqrt(f') = φ / sqrt(∫φ²)`.
#[derive(Clone, Debug)]
pub struct FFunction {
    pub span: f64,
    step: MollifiedStep,
}

impl FFunction {
    pub fn new(span: f64) -> Result<Self> {
        if !(span > 0.0) {
            return Err(Error::Invalid(format!(
                "c - v must be positive, got {span}"
            )));
        }
        // φ² in the unit variable y = λ/w is exp(-2/(w² y(1-y)))
        Ok(FFunction {
            span,
            step: MollifiedStep::new(2.0 / (span * span))?,
        })
    }

    pub fn f(&self, lambda: f64) -> f64 {
        self.step.step(lambda / self.span)
    }

    pub fn f_prime(&self, lambda: f64) -> f64 {
        self.step.bump(lambda / self.span) / (self.step.mass() * self.span)
    }

    /// `u = sqrt(f')`, computed from `φ` directly so it stays smooth at the support edges.
    pub fn u(&self, lambda: f64) -> f64 {
        let y = lambda / self.span;
        if y <= 0.0 || y >= 1.0 {
            return 0.0;
        }
        (-0.5 * self.step.beta / (y * (1.0 - y))).exp() / (self.step.mass() * self.span).sqrt()
    }

    /// Jet of `u`.
    pub fn u_jet(&self, lambda: f64, order: usize) -> Jet {
        let y = lambda / self.span;
        bump_jet(0.5 * self.step.beta, y, order)
            .chain_linear(1.0 / self.span)
            .scale(1.0 / (self.step.mass() * self.span).sqrt())
    }

    /// Infimum of `supp f'` (zero by construction).
    pub fn support_start(&self) -> f64 {
        0.0
    }
}

impl Smooth for FFunction {
    fn jet(&self, x: f64, order: usize) -> Jet {
        self.step
            .jet(x / self.span, order)
            .chain_linear(1.0 / self.span)
    }

    fn value(&self, x: f64) -> f64 {
        self.f(x)
    }

    fn transition(&self) -> Option<(f64, f64)> {
        Some((0.0, self.span))
    }
}

/// Admissible profile `h = φ̃²` with `φ̃ = exp(-q/(λ(w-λ)))`, supported in `(0, w)`.
#[derive(Clone, Debug)]
pub struct AdmissibleFunction {
    pub span: f64,
    pub sharpness: f64,
    step: MollifiedStep,
}

impl AdmissibleFunction {
    pub fn new(span: f64, sharpness: f64) -> Result<Self> {
        if !(span > 0.0 && sharpness > 0.0) {
            return Err(Error::Invalid(
                "admissible profile needs positive span and sharpness".into(),
            ));
        }
        Ok(AdmissibleFunction {
            span,
            sharpness,
            step: MollifiedStep::new(2.0 * sharpness / (span * span))?,
        })
    }

    pub fn h(&self, lambda: f64) -> f64 {
        let r = self.root(lambda);
        r * r
    }

    /// `ũ = sqrt(h) = φ̃`.
    pub fn root(&self, lambda: f64) -> f64 {
        if lambda <= 0.0 || lambda >= self.span {
            0.0
        } else {
            (-self.sharpness / (lambda * (self.span - lambda))).exp()
        }
    }

    /// `∫ h`.
    pub fn integral(&self) -> f64 {
        self.step.mass() * self.span
    }

    /// The rescaled antiderivative `∫_{-∞}^λ h / ∫ h`, a member of the cone family.
    pub fn antiderivative(&self, lambda: f64) -> f64 {
        self.step.step(lambda / self.span)
    }
}

/// `tanh(x / scale)`, a bounded test function with bounded derivatives.
#[derive(Clone, Copy, Debug)]
pub struct Tanh {
    pub scale: f64,
}

impl Smooth for Tanh {
    fn jet(&self, x: f64, order: usize) -> Jet {
        // tanh(y) = 1 - 2 / (exp(2y) + 1)
        let e = Jet::variable(x / self.scale, order)
            .chain_linear(1.0 / self.scale)
            .scale(2.0)
            .exp();
        e.offset(1.0).recip().scale(-2.0).offset(1.0)
    }
}

/// A constant function.
#[derive(Clone, Copy, Debug)]
pub struct Constant(pub f64);

impl Smooth for Constant {
    fn jet(&self, _x: f64, order: usize) -> Jet {
        Jet::constant(self.0, order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_step(beta: f64, y: f64) -> f64 {
        // fine composite Simpson on the bump
        let m = 200_000;
        let simpson = |a: f64, b: f64| {
            let h = (b - a) / m as f64;
            let mut s = bump(beta, a) + bump(beta, b);
            for i in 1..m {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * bump(beta, a + i as f64 * h);
            }
            s * h / 3.0
        };
        simpson(0.0, y) / simpson(0.0, 1.0)
    }

    #[test]
    fn step_matches_simpson_reference() {
        for beta in [0.5, 1.0, 8.0] {
            let s = MollifiedStep::new(beta).unwrap();
            for y in [0.05, 0.2, 0.37, 0.5, 0.61, 0.9, 0.99] {
                let r = reference_step(beta, y);
                assert!(
                    (s.step(y) - r).abs() < 1e-12,
                    "beta={beta} y={y}: {} vs {r}",
                    s.step(y)
                );
            }
        }
    }

    #[test]
    fn step_symmetry_and_limits() {
        let s = MollifiedStep::new(1.0).unwrap();
        assert_eq!(s.step(-0.1), 0.0);
        assert_eq!(s.step(1.2), 1.0);
        assert!((s.step(0.5) - 0.5).abs() < 1e-15);
        for y in [0.1, 0.25, 0.4] {
            assert!((s.step(y) + s.step(1.0 - y) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cutoff_derivatives_match_finite_differences() {
        let g = SpectralCutoff::new(-1.0, 0.5, 0.5).unwrap();
        let h = 1e-4;
        for x in [-0.8, -0.6, 0.1, 0.3, 0.45] {
            let j = g.jet(x, 3);
            // the central difference carries h^2 g'''/6, so take a finer step here
            let h1 = 1e-5;
            let fd1 = (g.eval(x + h1) - g.eval(x - h1)) / (2.0 * h1);
            let fd2 = (g.eval(x + h) - 2.0 * g.eval(x) + g.eval(x - h)) / (h * h);
            assert!((j.derivative(1) - fd1).abs() < 1e-6, "x={x}");
            assert!((j.derivative(2) - fd2).abs() < 1e-4, "x={x}");
            let fd3 = (j.derivative(2) - g.jet(x - h, 2).derivative(2)) / h;
            assert!(
                (j.derivative(3) - fd3).abs() < 1e-2 * (1.0 + fd3.abs()),
                "x={x}"
            );
        }
    }

    #[test]
    fn cutoff_shape() {
        let g = SpectralCutoff::new(0.0, 2.0, 0.3).unwrap();
        assert_eq!(g.eval(-0.01), 0.0);
        assert_eq!(g.eval(2.01), 0.0);
        for x in [0.3, 1.0, 1.7] {
            assert!((g.eval(x) - 1.0).abs() < 1e-15);
        }
        let wide = g.widened();
        for x in [0.0, 0.5, 2.0] {
            assert!((wide.eval(x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn f_function_laws() {
        let f = FFunction::new(0.5).unwrap();
        assert_eq!(f.f(0.0), 0.0);
        assert_eq!(f.f(0.5), 1.0);
        let n = 1000;
        let mut prev = 0.0;
        let mut integral = 0.0;
        let h = 0.5 / n as f64;
        for i in 0..=n {
            let x = i as f64 * h;
            let v = f.f(x);
            assert!(v >= prev - 1e-15);
            assert!(f.f_prime(x) >= 0.0);
            assert!((f.u(x).powi(2) - f.f_prime(x)).abs() < 1e-12 * (1.0 + f.f_prime(x)));
            prev = v;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            integral += w * f.f_prime(x) * h;
        }
        assert!((integral - 1.0).abs() < 1e-9);
    }

    #[test]
    fn u_jet_matches_u() {
        let f = FFunction::new(1.0).unwrap();
        let h = 1e-5;
        for x in [0.2, 0.5, 0.8] {
            let j = f.u_jet(x, 1);
            assert!((j.value() - f.u(x)).abs() < 1e-14);
            assert!((j.derivative(1) - (f.u(x + h) - f.u(x - h)) / (2.0 * h)).abs() < 1e-7);
        }
    }

    #[test]
    fn admissible_antiderivative_is_cone_function() {
        let a = AdmissibleFunction::new(0.5, 1.0).unwrap();
        let f = FFunction::new(0.5).unwrap();
        // sharpness 1 reproduces the f' profile
        for x in [0.1, 0.25, 0.4] {
            assert!((a.antiderivative(x) - f.f(x)).abs() < 1e-13);
            assert!((a.h(x) / a.integral() - f.f_prime(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn tanh_jet() {
        let t = Tanh { scale: 2.0 };
        let x: f64 = 0.7;
        let j = t.jet(x, 2);
        let th = (x / 2.0).tanh();
        assert!((j.value() - th).abs() < 1e-15);
        assert!((j.derivative(1) - 0.5 * (1.0 - th * th)).abs() < 1e-14);
        assert!((j.derivative(2) - (-0.5 * th * (1.0 - th * th))).abs() < 1e-14);
    }
}
