//! Truncated Taylor series ("jets") for exact high-order derivatives of the
//! closed-form cutoffs. Coefficient `k` is `f^{(k)}(x0) / k!`.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet(pub Vec<f64>);

impl Jet {
    pub fn constant(c: f64, order: usize) -> Self {
        let mut v = vec![0.0; order + 1];
        v[0] = c;
        Jet(v)
    }

    /// The identity `x0 + h`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut v = vec![0.0; order + 1];
        v[0] = x0;
        if order > 0 {
            v[1] = 1.0;
        }
        Jet(v)
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.0[0]
    }

    /// `f^{(k)}(x0)`.
    pub fn derivative(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(0.0) * factorial(k)
    }

    pub fn derivatives(&self) -> Vec<f64> {
        (0..self.0.len()).map(|k| self.derivative(k)).collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Jet(self.0.iter().map(|c| c * s).collect())
    }

    pub fn offset(&self, c: f64) -> Self {
        let mut v = self.0.clone();
        v[0] += c;
        Jet(v)
    }

    /// Rescale the expansion variable: coefficients of `f(x0 + s h)`.
    pub fn chain_linear(&self, s: f64) -> Self {
        let mut p = 1.0;
        Jet(self
            .0
            .iter()
            .map(|c| {
                let r = c * p;
                p *= s;
                r
            })
            .collect())
    }

    pub fn exp(&self) -> Self {
        let a = &self.0;
        let mut e = vec![0.0; a.len()];
        e[0] = a[0].exp();
        for k in 1..a.len() {
            let s: f64 = (1..=k).map(|j| j as f64 * a[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Jet(e)
    }

    pub fn recip(&self) -> Self {
        let a = &self.0;
        let mut r = vec![0.0; a.len()];
        r[0] = 1.0 / a[0];
        for k in 1..a.len() {
            let s: f64 = (1..=k).map(|j| a[j] * r[k - j]).sum();
            r[k] = -s * r[0];
        }
        Jet(r)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let n = self.0.len().min(o.0.len());
        let mut out = vec![0.0; n];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = (0..=k).map(|j| self.0[j] * o.0[k - j]).sum();
        }
        Jet(out)
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_linear_matches_closed_form() {
        // exp(2x) at x0 = 0.3: f^(k) = 2^k exp(0.6)
        let j = Jet::variable(0.3, 6).scale(2.0).exp();
        for k in 0..=6 {
            let want = 2f64.powi(k as i32) * 0.6f64.exp();
            assert!((j.derivative(k) - want).abs() < 1e-12 * want, "k={k}");
        }
    }

    #[test]
    fn recip_matches_closed_form() {
        // 1/x at x0 = 2: f^(k) = (-1)^k k! / 2^{k+1}
        let j = Jet::variable(2.0, 5).recip();
        for k in 0..=5 {
            let want = (-1f64).powi(k as i32) * factorial(k) / 2f64.powi(k as i32 + 1);
            assert!((j.derivative(k) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn product_rule() {
        let x = Jet::variable(0.7, 4);
        let sq = &x * &x;
        assert!((sq.derivative(0) - 0.49).abs() < 1e-15);
        assert!((sq.derivative(1) - 1.4).abs() < 1e-15);
        assert!((sq.derivative(2) - 2.0).abs() < 1e-15);
        assert_eq!(sq.derivative(3), 0.0);
    }

    #[test]
    fn chain_linear_rescales() {
        let j = Jet::variable(0.0, 3).exp().chain_linear(3.0);
        assert!((j.derivative(3) - 27.0).abs() < 1e-12);
    }
}
