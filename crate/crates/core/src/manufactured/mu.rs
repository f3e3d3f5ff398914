//! Spatial source profiles `mu(x)` and their sine coefficients.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::gauss_legendre;
use crate::error::{config, Error, Result};

/// Source profile on `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MuSpec {
    /// `x / theta` on `[0, theta]`, `(1 - x) / (1 - theta)` on `[theta, 1]`.
    Hat { theta: f64 },
    /// Indicator of `[a, b]`.
    Indicator { a: f64, b: f64 },
    /// `1 / sqrt(x)`: in `L^1` and `H^{-1}` but not in `L^2`.
    InverseSqrt,
    /// Piecewise linear interpolation of `(x, value)` knots covering `[0, 1]`.
    Table { x: Vec<f64>, value: Vec<f64> },
}

/// One linear piece `alpha + beta x` on `[u, v]`.
type Piece = (f64, f64, f64, f64);

impl MuSpec {
    pub fn ex3() -> Self {
        MuSpec::Hat { theta: 1.0 / 3.0 }
    }

    pub fn ex4() -> Self {
        MuSpec::Indicator { a: 0.2, b: 0.5 }
    }

    pub fn ex5() -> Self {
        MuSpec::InverseSqrt
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MuSpec::Hat { theta } if !(*theta > 0.0 && *theta < 1.0) => {
                config(format!("hat apex must lie in (0,1), got {theta}"))
            }
            MuSpec::Indicator { a, b } if !(0.0 <= *a && a < b && *b <= 1.0) => {
                config(format!("indicator support [{a}, {b}] must satisfy 0 <= a < b <= 1"))
            }
            MuSpec::Table { x, value } => {
                if x.len() < 2 || x.len() != value.len() {
                    return config("source table needs at least two (x, value) pairs of equal length");
                }
                if x[0] > 0.0 || *x.last().unwrap() < 1.0 {
                    return config("source table must cover [0, 1]");
                }
                if x.windows(2).any(|w| !(w[1] > w[0])) || value.iter().any(|v| !v.is_finite()) {
                    return config("source table abscissae must increase strictly and values be finite");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            MuSpec::Hat { theta } => {
                if x <= *theta {
                    x / theta
                } else {
                    (1.0 - x) / (1.0 - theta)
                }
            }
            MuSpec::Indicator { a, b } => f64::from(x >= *a && x <= *b),
            MuSpec::InverseSqrt => 1.0 / x.sqrt(),
            MuSpec::Table { x: xs, value } => {
                let k = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
                let s = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                value[k - 1] * (1.0 - s) + value[k] * s
            }
        }
    }

    /// Linear pieces for the piecewise linear profiles.
    fn pieces(&self) -> Option<Vec<Piece>> {
        match self {
            MuSpec::Hat { theta } => Some(vec![
                (0.0, *theta, 0.0, 1.0 / theta),
                (*theta, 1.0, 1.0 / (1.0 - theta), -1.0 / (1.0 - theta)),
            ]),
            MuSpec::Indicator { a, b } => Some(vec![(*a, *b, 1.0, 0.0)]),
            MuSpec::Table { x, value } => Some(
                x.windows(2)
                    .zip(value.windows(2))
                    .filter_map(|(xw, vw)| {
                        let (u, v) = (xw[0].max(0.0), xw[1].min(1.0));
                        (v > u).then(|| {
                            let beta = (vw[1] - vw[0]) / (xw[1] - xw[0]);
                            (u, v, vw[0] - beta * xw[0], beta)
                        })
                    })
                    .collect(),
            ),
            MuSpec::InverseSqrt => None,
        }
    }

    /// Exact moments `(int mu, int x mu)` over `[x0, x1]`.
    pub fn moments(&self, x0: f64, x1: f64) -> (f64, f64) {
        match self.pieces() {
            Some(pieces) => {
                let (mut m0, mut m1) = (0.0, 0.0);
                for (u, v, alpha, beta) in pieces {
                    let (lo, hi) = (u.max(x0), v.min(x1));
                    if hi > lo {
                        let p1 = (hi * hi - lo * lo) / 2.0;
                        let p2 = (hi.powi(3) - lo.powi(3)) / 3.0;
                        m0 += alpha * (hi - lo) + beta * p1;
                        m1 += alpha * p1 + beta * p2;
                    }
                }
                (m0, m1)
            }
            None => (
                2.0 * (x1.sqrt() - x0.sqrt()),
                2.0 / 3.0 * (x1.powf(1.5) - x0.powf(1.5)),
            ),
        }
    }

    /// `int_0^1 sin(p pi x) mu(x) dx`.
    pub fn sine_coefficient(&self, p: usize) -> Result<f64> {
        let w = p as f64 * PI;
        if let MuSpec::InverseSqrt = self {
            // x = u^2 removes the singularity: 2 int_0^1 sin(w u^2) du
            return substituted_inverse_sqrt(w);
        }
        let pieces = self.pieces().expect("piecewise linear profile");
        let anti = |x: f64, alpha: f64, beta: f64| -(alpha + beta * x) * (w * x).cos() / w + beta * (w * x).sin() / (w * w);
        Ok(pieces
            .into_iter()
            .map(|(u, v, alpha, beta)| anti(v, alpha, beta) - anti(u, alpha, beta))
            .sum())
    }

    /// Sine coefficients for `p = 1..=modes`.
    pub fn sine_coefficients(&self, modes: usize) -> Result<Vec<f64>> {
        self.validate()?;
        (1..=modes).map(|p| self.sine_coefficient(p)).collect()
    }

    /// `||mu||^2_{H^{-1}} = sum_p 2 m_p^2 / (p pi)^2`, truncated after `modes` terms.
    pub fn hminus1_norm_sq_spectral(&self, modes: usize) -> Result<f64> {
        Ok(self
            .sine_coefficients(modes)?
            .iter()
            .enumerate()
            .map(|(i, m)| 2.0 * m * m / ((i + 1) as f64 * PI).powi(2))
            .sum())
    }
}

/// `2 int_0^1 sin(w u^2) du` by composite 8-point Gauss-Legendre, with panel
/// doubling until two successive values agree to `1e-13`.
fn substituted_inverse_sqrt(w: f64) -> Result<f64> {
    let (g, gw) = gauss_legendre(8);
    let composite = |panels: usize| -> f64 {
        let h = 1.0 / panels as f64;
        let mut s = 0.0;
        for j in 0..panels {
            for (x, wt) in g.iter().zip(&gw) {
                let u = (j as f64 + x) * h;
                s += wt * (w * u * u).sin();
            }
        }
        2.0 * s * h
    };
    // about four panels per half period of the integrand
    let mut panels = 8 + (w / PI).ceil() as usize;
    let mut prev = composite(panels);
    for _ in 0..6 {
        panels *= 2;
        let next = composite(panels);
        if (next - prev).abs() <= 1e-13 * next.abs().max(1.0) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!("sine coefficient of 1/sqrt(x) at frequency {w}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric(mu: &MuSpec, p: usize, breaks: &[f64]) -> f64 {
        let w = p as f64 * PI;
        let mut grid: Vec<f64> = (0..=400).map(|k| k as f64 / 400.0).chain(breaks.iter().cloned()).collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let (g, gw) = gauss_legendre(10);
        grid.windows(2)
            .map(|s| {
                let h = s[1] - s[0];
                g.iter()
                    .zip(&gw)
                    .map(|(x, wt)| {
                        let xx = s[0] + x * h;
                        wt * h * (w * xx).sin() * mu.eval(xx)
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let hat = MuSpec::ex3();
        let ind = MuSpec::ex4();
        for p in [1, 2, 5, 17, 40] {
            let w = p as f64 * PI;
            let theta = 1.0 / 3.0;
            let hat_closed = (w * theta).sin() / (w * w * theta * (1.0 - theta));
            assert!((hat.sine_coefficient(p).unwrap() - hat_closed).abs() < 1e-14);
            assert!((hat_closed - numeric(&hat, p, &[theta])).abs() < 1e-11);
            let ind_closed = ((0.2 * w).cos() - (0.5 * w).cos()) / w;
            assert!((ind.sine_coefficient(p).unwrap() - ind_closed).abs() < 1e-14);
            assert!((ind_closed - numeric(&ind, p, &[0.2, 0.5])).abs() < 1e-11);
        }
        let first = ind.sine_coefficient(1).unwrap();
        assert!((first - (0.2 * PI).cos() / PI).abs() < 1e-15);
    }

    #[test]
    fn inverse_sqrt_coefficients_agree_with_adaptive_quadrature() {
        let mu = MuSpec::ex5();
        for p in [1usize, 2, 3, 10, 37, 100, 150, 200] {
            let w = p as f64 * PI;
            let fast = mu.sine_coefficient(p).unwrap();
            // direct integrand sin(w x)/sqrt(x) ~ w sqrt(x) near 0, no substitution;
            // double-exponential rule on each half period
            let slow: f64 = (0..p)
                .map(|k| {
                    let (lo, hi) = (k as f64 / p as f64, (k + 1) as f64 / p as f64);
                    quadrature::integrate(|x: f64| (w * x).sin() / x.sqrt(), lo, hi, 1e-14).integral
                })
                .sum();
            assert!((fast - slow).abs() < 1e-8, "p={p}: {fast} vs {slow}");
        }
    }

    #[test]
    fn table_reproduces_the_hat() {
        let table = MuSpec::Table {
            x: vec![0.0, 1.0 / 3.0, 1.0],
            value: vec![0.0, 1.0, 0.0],
        };
        table.validate().unwrap();
        let hat = MuSpec::ex3();
        for p in 1..20 {
            assert!((table.sine_coefficient(p).unwrap() - hat.sine_coefficient(p).unwrap()).abs() < 1e-13);
        }
        for x in [0.0, 0.1, 0.5, 0.99] {
            assert!((table.eval(x) - hat.eval(x)).abs() < 1e-15);
        }
        let (a, b) = table.moments(0.2, 0.7);
        let (c, d) = hat.moments(0.2, 0.7);
        assert!((a - c).abs() < 1e-15 && (b - d).abs() < 1e-15);
    }

    #[test]
    fn moments_of_inverse_sqrt_and_indicator() {
        let (m0, m1) = MuSpec::ex5().moments(0.0, 1.0);
        assert!((m0 - 2.0).abs() < 1e-15 && (m1 - 2.0 / 3.0).abs() < 1e-15);
        let (m0, m1) = MuSpec::ex4().moments(0.0, 0.3);
        assert!((m0 - 0.1).abs() < 1e-15 && (m1 - 0.025).abs() < 1e-15);
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        assert!(MuSpec::Hat { theta: 1.0 }.validate().is_err());
        assert!(MuSpec::Indicator { a: 0.5, b: 0.2 }.validate().is_err());
        assert!(MuSpec::Table { x: vec![0.1, 1.0], value: vec![1.0, 1.0] }.validate().is_err());
    }
}
