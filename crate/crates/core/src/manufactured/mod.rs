//! Exact Fourier-series solutions used to synthesize observations and to
//! measure errors.
//!
//! Two families are provided. Free waves with initial data,
//! `y = sum_k (a_k cos(k pi t) + b_k / (k pi) sin(k pi t)) sqrt(2) sin(k pi x)`,
//! and waves driven from rest by a separable source `sigma(t) mu(x)`,
//! `y = sum_p b_p(t) sin(p pi x)` with `b_p'' + (p pi)^2 b_p = 2 sigma(t) m_p`
//! and `m_p = int_0^1 sin(p pi x) mu(x) dx`. Both assume `c = 1`, `d = 0`.

mod mu;

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::assembly::{NoiseSpec, ObservationTrace, Sigma};
use crate::basis::gauss_legendre;
use crate::error::{config, Result};
use crate::mesh::{MeshSpec, Side};

pub use mu::MuSpec;

/// Modes used for field values and `L^2(Q_T)` errors.
pub const FIELD_MODES: usize = 2000;
/// Modes used for boundary traces, whose series decay only like `1/k`.
pub const TRACE_MODES: usize = 20000;

#[derive(Debug, Clone)]
enum Profile {
    /// `a_k cos(w t) + b_k / w sin(w t)`.
    Free { a: Vec<f64>, b: Vec<f64> },
    /// Response from rest to the forcing `2 sigma(t) m_p`.
    Driven { m: Vec<f64>, sigma: Sigma },
}

/// Truncated sine series in `x` with explicit time coefficients.
#[derive(Debug, Clone)]
pub struct FourierState {
    profile: Profile,
    /// Spatial basis `scale * sin(k pi x)`.
    scale: f64,
    /// Bound on the squared `L^2(Q_T)` truncation error, when known.
    tail_bound_sq: Option<f64>,
}

impl FourierState {
    /// Free wave with cosine amplitudes `a` and velocity amplitudes `b`
    /// on the basis `sqrt(2) sin(k pi x)`.
    pub fn free(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return config("free wave needs equally many (>= 1) position and velocity coefficients");
        }
        Ok(Self {
            profile: Profile::Free { a, b },
            scale: SQRT_2,
            tail_bound_sq: None,
        })
    }

    /// `sin(pi x) cos(pi t)`.
    pub fn single_mode() -> Self {
        Self::free(vec![1.0 / SQRT_2], vec![0.0]).expect("one mode")
    }

    /// Wave from rest driven by `sigma(t) mu(x)`, from the sine coefficients of `mu`.
    pub fn driven(m: Vec<f64>, sigma: Sigma) -> Result<Self> {
        if m.is_empty() {
            return config("driven wave needs at least one mode");
        }
        Ok(Self {
            profile: Profile::Driven { m, sigma },
            scale: 1.0,
            tail_bound_sq: None,
        })
    }

    pub fn modes(&self) -> usize {
        match &self.profile {
            Profile::Free { a, .. } => a.len(),
            Profile::Driven { m, .. } => m.len(),
        }
    }

    /// Known bound on `sum over dropped modes` of the squared `L^2(Q_T)` norm.
    pub fn tail_bound_sq(&self) -> Option<f64> {
        self.tail_bound_sq
    }

    /// Free-wave amplitudes `(a_k, b_k)`, if this is a free wave.
    pub fn free_coefficients(&self) -> Option<(&[f64], &[f64])> {
        match &self.profile {
            Profile::Free { a, b } => Some((a, b)),
            Profile::Driven { .. } => None,
        }
    }

    /// Time coefficient of mode `k` (1-based) and its first two derivatives.
    pub fn time_coefficient(&self, k: usize, t: f64) -> [f64; 3] {
        let w = k as f64 * PI;
        let (s, c) = (w * t).sin_cos();
        match &self.profile {
            Profile::Free { a, b } => {
                let (a, b) = (a[k - 1], b[k - 1]);
                let v = a * c + b / w * s;
                [v, -a * w * s + b * c, -w * w * v]
            }
            Profile::Driven { m, sigma } => {
                let f = 2.0 * m[k - 1];
                let (v, d) = match sigma {
                    Sigma::Affine { c0, c1 } => (
                        f / w * (c0 * (1.0 - c) / w + c1 * (t / w - s / (w * w))),
                        f / w * (c0 * s + c1 * (1.0 - c) / w),
                    ),
                    Sigma::Custom(_) => {
                        let (v, d) = duhamel(w, t, |s| sigma.eval(s));
                        (f * v, f * d)
                    }
                };
                [v, d, f * sigma.eval(t) - w * w * v]
            }
        }
    }

    fn spatial(&self, k: usize, x: f64, deriv: usize) -> f64 {
        let w = k as f64 * PI;
        let (s, c) = (w * x).sin_cos();
        self.scale
            * match deriv {
                0 => s,
                1 => w * c,
                2 => -w * w * s,
                _ => panic!("spatial derivative order {deriv} not supported"),
            }
    }

    /// Series value of `d^a/dx^a d^b/dt^b y` with `a, b <= 2`.
    pub fn eval_state(&self, x: f64, t: f64, deriv: (usize, usize)) -> f64 {
        assert!(deriv.1 <= 2, "time derivative order {} not supported", deriv.1);
        (1..=self.modes())
            .map(|k| self.spatial(k, x, deriv.0) * self.time_coefficient(k, t)[deriv.1])
            .sum()
    }

    /// `dn y = +y_x` at `x = 1` and `-y_x` at `x = 0`.
    pub fn normal_trace(&self, side: Side, t: f64) -> f64 {
        match &self.profile {
            Profile::Free { a, b } => side.normal() * self.free_trace(a, b, side, t),
            Profile::Driven { .. } => side.normal() * self.eval_state(side.x(), t, (1, 0)),
        }
    }

    /// `y_x` of a free wave at `x = 0` or `1`: `cos(k pi x) = (+-1)^k` there, and
    /// `cos(k pi t)`, `sin(k pi t)` follow from rotating by `pi t`, re-anchored
    /// every 256 modes so that rounding cannot accumulate.
    fn free_trace(&self, a: &[f64], b: &[f64], side: Side, t: f64) -> f64 {
        let (s1, c1) = (PI * t).sin_cos();
        let flip = side == Side::Right;
        let (mut s, mut c) = (0.0, 1.0);
        let mut sum = 0.0;
        for (i, (&ak, &bk)) in a.iter().zip(b).enumerate() {
            let k = i + 1;
            if k % 256 == 0 {
                (s, c) = (k as f64 * PI * t).sin_cos();
            } else {
                (s, c) = (s * c1 + c * s1, c * c1 - s * s1);
            }
            let term = k as f64 * PI * ak * c + bk * s;
            sum += if flip && k % 2 == 1 { -term } else { term };
        }
        self.scale * sum
    }

    /// Values at every `(xs[i], ts[j])`, as a `ts.len() x xs.len()` matrix.
    ///
    /// Separability turns this into one matrix product, which is much cheaper
    /// than pointwise evaluation on quadrature grids.
    pub fn eval_grid(&self, xs: &[f64], ts: &[f64], deriv: (usize, usize)) -> DMatrix<f64> {
        let k = self.modes();
        let tm = DMatrix::from_fn(ts.len(), k, |j, m| self.time_coefficient(m + 1, ts[j])[deriv.1]);
        let xm = DMatrix::from_fn(k, xs.len(), |m, i| self.spatial(m + 1, xs[i], deriv.0));
        tm * xm
    }

    /// Normal trace at many times.
    pub fn normal_trace_many(&self, side: Side, ts: &[f64]) -> Vec<f64> {
        self.eval_grid(&[side.x()], ts, (1, 0)).iter().map(|v| side.normal() * v).collect()
    }

    /// `int_0^T c_k(t)^2 dt` for every mode.
    fn time_energy(&self, t_final: f64) -> Vec<f64> {
        match &self.profile {
            Profile::Free { a, b } => a
                .iter()
                .zip(b)
                .enumerate()
                .map(|(i, (&a, &b))| {
                    let w = (i + 1) as f64 * PI;
                    let bw = b / w;
                    let s2 = (2.0 * w * t_final).sin() / (4.0 * w);
                    let sq = (w * t_final).sin().powi(2) / w;
                    a * a * (t_final / 2.0 + s2) + bw * bw * (t_final / 2.0 - s2) + a * bw * sq
                })
                .collect(),
            Profile::Driven { m, .. } => {
                let (g, gw) = gauss_legendre(8);
                (1..=m.len())
                    .map(|k| {
                        let panels = 2 + (k as f64 * t_final).ceil() as usize;
                        let h = t_final / panels as f64;
                        (0..panels)
                            .flat_map(|j| g.iter().zip(&gw).map(move |(x, w)| ((j as f64 + x) * h, w * h)))
                            .map(|(t, w)| w * self.time_coefficient(k, t)[0].powi(2))
                            .sum()
                    })
                    .collect()
            }
        }
    }

    /// `||y||^2_{L^2(Q_T)}` by Parseval.
    pub fn l2_norm_sq(&self, t_final: f64) -> f64 {
        self.time_energy(t_final).iter().sum::<f64>() * self.scale * self.scale / 2.0
    }

    /// `||dn y||^2_{L^2((0,T))}` on either side, by Parseval.
    pub fn trace_norm_sq(&self, t_final: f64) -> f64 {
        self.time_energy(t_final)
            .iter()
            .enumerate()
            .map(|(i, e)| e * (self.scale * (i + 1) as f64 * PI).powi(2))
            .sum()
    }
}

/// `(int_0^t sin(w(t-s)) sigma(s) ds / w, int_0^t cos(w(t-s)) sigma(s) ds)`.
fn duhamel(w: f64, t: f64, sigma: impl Fn(f64) -> f64) -> (f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0);
    }
    let (g, gw) = gauss_legendre(8);
    let panels = 4 + (w * t / PI).ceil() as usize * 2;
    let h = t / panels as f64;
    let (mut v, mut d) = (0.0, 0.0);
    for j in 0..panels {
        for (x, wt) in g.iter().zip(&gw) {
            let s = (j as f64 + x) * h;
            let (sn, cs) = (w * (t - s)).sin_cos();
            let f = sigma(s) * wt * h;
            v += sn * f;
            d += cs * f;
        }
    }
    (v / w, d)
}

/// The free wave with `y_0 = 1 - |2x - 1|` and velocity coefficients
/// `b_k = (cos(k pi / 3) - cos(2 k pi / 3)) / (k pi)`.
pub fn ex1_series(modes: usize) -> Result<FourierState> {
    if modes == 0 {
        return config("EX1 series needs at least one mode");
    }
    let (a, b): (Vec<f64>, Vec<f64>) = (1..=modes)
        .map(|k| {
            let kf = k as f64;
            let a = if k % 2 == 0 {
                0.0
            } else {
                4.0 * SQRT_2 / (PI * PI * kf * kf) * (PI * kf / 2.0).sin()
            };
            (a, ((PI * kf / 3.0).cos() - (2.0 * PI * kf / 3.0).cos()) / (PI * kf))
        })
        .unzip();
    let mut fs = FourierState::free(a, b)?;
    // |a_k|^2 + |b_k / (k pi)|^2 <= 36 / (pi^4 k^4), summed beyond K: <= 12 / (pi^4 K^3)
    fs.tail_bound_sq = Some(12.0 / (PI.powi(4) * (modes as f64).powi(3)));
    Ok(fs)
}

/// The wave from rest driven by `sigma(t) mu(x)`.
pub fn source_series(mu: &MuSpec, sigma: Sigma, modes: usize) -> Result<FourierState> {
    if modes == 0 {
        return config("source series needs at least one mode");
    }
    FourierState::driven(mu.sine_coefficients(modes)?, sigma)
}

/// Observation `dn y` on `side`, optionally tabulated at `8 nt + 1` times and
/// perturbed with seeded noise relative to the trace's RMS.
pub fn sample_observation(
    fs: &FourierState,
    mesh: &MeshSpec,
    side: Side,
    noise: Option<NoiseSpec>,
) -> Result<ObservationTrace> {
    let shared = Arc::new(fs.clone());
    let exact = ObservationTrace::analytic(side, move |t| shared.normal_trace(side, t));
    match noise {
        Some(spec) => exact.with_noise(mesh.t_final, 8 * mesh.nt + 1, spec),
        None => Ok(exact),
    }
}

#[cfg(test)]
mod tests;
