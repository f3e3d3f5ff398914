use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::gauss_legendre;
use crate::error::{config, Result};
use crate::mesh::MeshSpec;

type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Known time profile of a separable source `sigma(t) mu(x)`.
#[derive(Clone)]
pub enum Sigma {
    /// `c0 + c1 t`.
    Affine { c0: f64, c1: f64 },
    Custom(Fn1),
}

impl Sigma {
    /// The profile `1 + t` used by the source examples.
    pub fn one_plus_t() -> Self {
        Sigma::Affine { c0: 1.0, c1: 1.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Sigma::Affine { c0, c1 } => c0 + c1 * t,
            Sigma::Custom(f) => f(t),
        }
    }
}

impl fmt::Debug for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma::Affine { c0, c1 } => write!(f, "Sigma::Affine({c0} + {c1} t)"),
            Sigma::Custom(_) => f.write_str("Sigma::Custom(..)"),
        }
    }
}

/// Serializable description of the coefficients, for reports and manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub c: String,
    pub d: String,
    pub sigma: Option<String>,
    pub quadrature_order: usize,
}

/// Coefficients of `L y = y_tt - (c y_x)_x + d y` and the source profile.
#[derive(Clone)]
pub struct Coefficients {
    c: Fn1,
    c_prime: Option<Fn1>,
    d: Fn2,
    sigma: Option<Sigma>,
    quad_order: usize,
    constant: Option<(f64, f64)>,
}

impl fmt::Debug for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coefficients")
            .field("constant", &self.constant)
            .field("sigma", &self.sigma)
            .field("quad_order", &self.quad_order)
            .finish_non_exhaustive()
    }
}

impl Default for Coefficients {
    fn default() -> Self {
        Self::constant(1.0, 0.0)
    }
}

impl Coefficients {
    /// Constant `c` and `d`; quadrature is then exact with the default order 4.
    pub fn constant(c: f64, d: f64) -> Self {
        Self {
            c: Arc::new(move |_| c),
            c_prime: Some(Arc::new(|_| 0.0)),
            d: Arc::new(move |_, _| d),
            sigma: None,
            quad_order: 4,
            constant: Some((c, d)),
        }
    }

    /// Variable wave speed; `c_prime` is approximated by central differences when absent.
    pub fn with_c<F>(mut self, c: F, c_prime: Option<Fn1>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.c = Arc::new(c);
        self.c_prime = c_prime;
        self.constant = None;
        self
    }

    pub fn with_d<F>(mut self, d: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.d = Arc::new(d);
        self.constant = None;
        self
    }

    pub fn with_sigma(mut self, sigma: Sigma) -> Self {
        self.sigma = Some(sigma);
        self
    }

    /// Points per direction of the element quadrature.
    pub fn with_quadrature(mut self, order: usize) -> Self {
        self.quad_order = order;
        self
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    pub fn c(&self, x: f64) -> f64 {
        (self.c)(x)
    }

    /// `c'(x)`, analytic when available, else a central difference with step `step`.
    pub fn c_prime(&self, x: f64, step: f64) -> f64 {
        match &self.c_prime {
            Some(f) => f(x),
            None => ((self.c)(x + step) - (self.c)(x - step)) / (2.0 * step),
        }
    }

    pub fn d(&self, x: f64, t: f64) -> f64 {
        (self.d)(x, t)
    }

    pub fn sigma(&self) -> Option<&Sigma> {
        self.sigma.as_ref()
    }

    /// Checks `c >= c0 > 0` at every quadrature abscissa of the mesh and the
    /// quadrature order range.
    pub fn validate(&self, mesh: &MeshSpec) -> Result<()> {
        if !(1..=10).contains(&self.quad_order) {
            return config(format!("quadrature order must lie in 1..=10, got {}", self.quad_order));
        }
        let (xi, _) = gauss_legendre(self.quad_order);
        let mut c_min = f64::INFINITY;
        for ie in 0..mesh.nx {
            for &s in xi.iter().chain([0.0, 1.0].iter()) {
                let x = (ie as f64 + s) * mesh.dx;
                c_min = c_min.min(self.c(x));
            }
        }
        if !(c_min > 0.0) {
            return config(format!("wave speed must stay positive, found c = {c_min:e}"));
        }
        Ok(())
    }

    /// Checks that a source profile is present with `sigma(0) != 0`.
    pub fn validate_source(&self) -> Result<()> {
        match &self.sigma {
            None => config("source reconstruction needs a time profile sigma"),
            Some(s) if s.eval(0.0) == 0.0 => config("source time profile must satisfy sigma(0) != 0"),
            Some(_) => Ok(()),
        }
    }

    pub fn summary(&self) -> CoefficientSummary {
        let (c, d) = match self.constant {
            Some((c, d)) => (format!("{c}"), format!("{d}")),
            None => ("variable".into(), "variable".into()),
        };
        CoefficientSummary {
            c,
            d,
            sigma: self.sigma.as_ref().map(|s| match s {
                Sigma::Affine { c0, c1 } => format!("{c0} + {c1} t"),
                Sigma::Custom(_) => "custom".into(),
            }),
            quadrature_order: self.quad_order,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_speed() {
        let mesh = MeshSpec::new(4, 4, 1.0).unwrap();
        assert!(Coefficients::default().validate(&mesh).is_ok());
        let bad = Coefficients::default().with_c(|x| x - 0.5, None);
        assert!(bad.validate(&mesh).is_err());
        assert!(Coefficients::default().with_quadrature(0).validate(&mesh).is_err());
    }

    #[test]
    fn derivative_fallback_is_accurate() {
        let k = Coefficients::default().with_c(|x| 1.0 + x * x, None);
        assert!((k.c_prime(0.3, 1e-4) - 0.6).abs() < 1e-9);
    }

    #[test]
    fn source_profile_checks() {
        assert!(Coefficients::default().validate_source().is_err());
        let zero_at_start = Coefficients::default().with_sigma(Sigma::Affine { c0: 0.0, c1: 1.0 });
        assert!(zero_at_start.validate_source().is_err());
        let ok = Coefficients::default().with_sigma(Sigma::one_plus_t());
        assert!(ok.validate_source().is_ok());
        assert_eq!(ok.sigma().unwrap().eval(2.0), 3.0);
    }
}
