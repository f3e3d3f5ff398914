use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Side;

/// Additive Gaussian noise applied at the tabulation times.
///
/// Each sample is perturbed by `amplitude * rms * N(0,1)`, where `rms` is the
/// root mean square of the clean samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub amplitude: f64,
    pub seed: u64,
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
#[derive(Debug, Clone, PartialEq)]
pub struct Pchip {
    t: Vec<f64>,
    v: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    pub fn new(t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if t.len() != v.len() {
            return Err(Error::Data(format!("{} times but {} values", t.len(), v.len())));
        }
        if t.len() < 2 {
            return Err(Error::Data("a table needs at least two samples".into()));
        }
        if let Some(k) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Data(format!("times must be strictly increasing (row {})", k + 2)));
        }
        if let Some(k) = t.iter().chain(&v).position(|x| !x.is_finite()) {
            return Err(Error::Data(format!("non-finite entry at position {k}")));
        }
        let slopes = pchip_slopes(&t, &v);
        Ok(Self { t, v, slopes })
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.t.len();
        let k = match self.t.partition_point(|&ti| ti <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.t[k + 1] - self.t[k];
        let s = (x - self.t[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.v[k] + h * h10 * self.slopes[k] + h01 * self.v[k + 1] + h * h11 * self.slopes[k + 1]
    }
}

fn pchip_slopes(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (v[k + 1] - v[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    m[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

// one-sided three-point estimate, shape preserving
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[derive(Clone)]
enum TraceSource {
    Analytic(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Table(Pchip),
}

/// Observed normal derivative on `{side} x (0,T)`.
#[derive(Clone)]
pub struct ObservationTrace {
    side: Side,
    source: TraceSource,
    noise: Option<NoiseSpec>,
}

impl fmt::Debug for ObservationTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.source {
            TraceSource::Analytic(_) => "analytic".to_string(),
            TraceSource::Table(p) => format!("table[{}]", p.times().len()),
        };
        f.debug_struct("ObservationTrace")
            .field("side", &self.side)
            .field("source", &kind)
            .field("noise", &self.noise)
            .finish()
    }
}

impl ObservationTrace {
    pub fn analytic<F>(side: Side, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            side,
            source: TraceSource::Analytic(Arc::new(f)),
            noise: None,
        }
    }

    pub fn zero(side: Side) -> Self {
        Self::analytic(side, |_| 0.0)
    }

    pub fn tabulated(side: Side, t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        Ok(Self {
            side,
            source: TraceSource::Table(Pchip::new(t, v)?),
            noise: None,
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn noise(&self) -> Option<NoiseSpec> {
        self.noise
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.source, TraceSource::Table(_))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.source {
            TraceSource::Analytic(f) => f(t),
            TraceSource::Table(p) => p.eval(t),
        }
    }

    /// Samples the trace at `n` uniform times covering `[0, t_final]`.
    pub fn tabulate(&self, t_final: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        if let TraceSource::Table(p) = &self.source {
            if n == 0 {
                return (p.times().to_vec(), p.values().to_vec());
            }
        }
        let n = n.max(2);
        let t: Vec<f64> = (0..n).map(|k| t_final * k as f64 / (n - 1) as f64).collect();
        let v = t.iter().map(|&s| self.eval(s)).collect();
        (t, v)
    }

    /// Tabulates at `n` uniform times and perturbs the samples with seeded noise.
    pub fn with_noise(&self, t_final: f64, n: usize, noise: NoiseSpec) -> Result<Self> {
        if !(noise.amplitude >= 0.0) || !noise.amplitude.is_finite() {
            return Err(Error::Config(format!("noise amplitude must be >= 0, got {}", noise.amplitude)));
        }
        let (t, mut v) = self.tabulate(t_final, n);
        let rms = (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        for x in v.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x += noise.amplitude * rms * z;
        }
        let mut out = Self::tabulated(self.side, t, v)?;
        out.noise = Some(noise);
        Ok(out)
    }

    /// Writes `t,value` rows at the given times.
    pub fn write_csv<W: Write>(&self, writer: W, times: &[f64]) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "value"])?;
        for &t in times {
            w.write_record([format!("{t:.17e}"), format!("{:.17e}", self.eval(t))])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, times: &[f64]) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?, times)
    }

    /// Reads a `t,value` table that must cover `[0, t_final]`.
    pub fn read_csv<R: Read>(reader: R, side: Side, t_final: f64) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            t: f64,
            value: f64,
        }
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rd.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "value" {
            return Err(Error::Data(format!("expected header 't,value', found '{}'", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut t = Vec::new();
        let mut v = Vec::new();
        for row in rd.deserialize() {
            let row: Row = row?;
            t.push(row.t);
            v.push(row.value);
        }
        let tol = 1e-12 * t_final.max(1.0);
        match (t.first(), t.last()) {
            (Some(&a), Some(&b)) if a <= tol && b >= t_final - tol => {}
            _ => {
                return Err(Error::Data(format!(
                    "observation times must cover [0, {t_final}]"
                )))
            }
        }
        Self::tabulated(side, t, v)
    }

    pub fn load_csv(path: &Path, side: Side, t_final: f64) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, side, t_final)
    }
}
