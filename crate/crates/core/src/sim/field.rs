use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Scalar test functions on the plane with analytic gradients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarField2D {
    /// `x² + y²`
    Quadratic,
    /// `log |x/2 + tanh y|`; undefined on the curve `x = -2 tanh y`.
    LogTanh,
    /// `(x² + y - 11)² + (x + y² - 7)²`, four minima of value 0.
    Himmelblau,
}

/// Below this `|x/2 + tanh y|` the log field is treated as singular.
pub const LOG_SINGULAR_EPS: f64 = 1e-12;

impl ScalarField2D {
    pub fn eval(self, x: f64, y: f64) -> f64 {
        match self {
            ScalarField2D::Quadratic => x * x + y * y,
            ScalarField2D::LogTanh => {
                let u = 0.5 * x + y.tanh();
                if u.abs() < LOG_SINGULAR_EPS {
                    f64::NAN
                } else {
                    u.abs().ln()
                }
            }
            ScalarField2D::Himmelblau => {
                let a = x * x + y - 11.0;
                let b = x + y * y - 7.0;
                a * a + b * b
            }
        }
    }

    /// Analytic gradient; NaN on the log singularity.
    pub fn grad(self, x: f64, y: f64) -> [f64; 2] {
        match self {
            ScalarField2D::Quadratic => [2.0 * x, 2.0 * y],
            ScalarField2D::LogTanh => {
                let u = 0.5 * x + y.tanh();
                if u.abs() < LOG_SINGULAR_EPS {
                    return [f64::NAN, f64::NAN];
                }
                let sech2 = 1.0 - y.tanh().powi(2);
                [0.5 / u, sech2 / u]
            }
            ScalarField2D::Himmelblau => {
                let a = x * x + y - 11.0;
                let b = x + y * y - 7.0;
                [4.0 * x * a + 2.0 * b, 2.0 * a + 4.0 * y * b]
            }
        }
    }

    pub fn eval_at(self, p: &[f64]) -> f64 {
        self.eval(p[0], p[1])
    }

    pub fn grad_at(self, p: &[f64]) -> Vec<f64> {
        self.grad(p[0], p[1]).to_vec()
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarField2D::Quadratic => "quadratic",
            ScalarField2D::LogTanh => "logtanh",
            ScalarField2D::Himmelblau => "himmelblau",
        }
    }
}

impl fmt::Display for ScalarField2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScalarField2D {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "quadratic" => Ok(ScalarField2D::Quadratic),
            "logtanh" => Ok(ScalarField2D::LogTanh),
            "himmelblau" => Ok(ScalarField2D::Himmelblau),
            other => Err(Error::Parse(format!(
                "unknown field `{other}` (quadratic, logtanh or himmelblau)"
            ))),
        }
    }
}
