use std::f64::consts::PI;

use crate::error::{Result, WgError};
use crate::field::ScalarField;
use crate::mesh::Point;

/// Exact solution and its gradient, for error studies.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub u: ScalarField,
    pub ux: ScalarField,
    pub uy: ScalarField,
}

impl ExactSolution {
    pub fn gradient(&self, p: Point) -> Result<[f64; 2]> {
        Ok([self.ux.eval(p)?, self.uy.eval(p)?])
    }
}

/// `-div(a grad u) + div(b u) + c u = f` in the domain, `u = g` on its boundary.
///
/// The diffusion tensor is stored by its three independent entries so it is
/// symmetric by construction.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub a11: ScalarField,
    pub a12: ScalarField,
    pub a22: ScalarField,
    pub b1: ScalarField,
    pub b2: ScalarField,
    pub c: ScalarField,
    pub f: ScalarField,
    pub g: ScalarField,
    pub exact: Option<ExactSolution>,
    /// Required lower bound on the eigenvalues of `a`.
    pub alpha: f64,
}

pub const DEFAULT_ALPHA: f64 = 1e-8;

impl ProblemSpec {
    /// `-lap u = f`, `u = g` on the boundary.
    pub fn poisson(f: ScalarField, g: ScalarField) -> Self {
        ProblemSpec {
            name: "poisson".into(),
            a11: ScalarField::constant(1.0),
            a12: ScalarField::zero(),
            a22: ScalarField::constant(1.0),
            b1: ScalarField::zero(),
            b2: ScalarField::zero(),
            c: ScalarField::zero(),
            f,
            g,
            exact: None,
            alpha: DEFAULT_ALPHA,
        }
    }

    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// True when the convection term vanishes identically, which makes the
    /// discrete system symmetric.
    pub fn is_symmetric(&self) -> bool {
        self.b1.is_zero() && self.b2.is_zero()
    }

    /// Diffusion tensor at `p`, after checking its smallest eigenvalue.
    pub fn diffusion(&self, p: Point) -> Result<[[f64; 2]; 2]> {
        let a11 = self.a11.eval(p)?;
        let a12 = self.a12.eval(p)?;
        let a22 = self.a22.eval(p)?;
        let lambda_min = min_eigenvalue(a11, a12, a22);
        if !(lambda_min >= self.alpha) {
            return Err(WgError::Ellipticity {
                x: p[0],
                y: p[1],
                lambda_min,
                alpha: self.alpha,
            });
        }
        Ok([[a11, a12], [a12, a22]])
    }

    pub fn convection(&self, p: Point) -> Result<[f64; 2]> {
        Ok([self.b1.eval(p)?, self.b2.eval(p)?])
    }

    /// Sample `a` on an `n x n` grid of the box and fail at the first point
    /// where it is not uniformly positive definite.
    pub fn check_ellipticity(&self, lo: Point, hi: Point, n: usize) -> Result<()> {
        for i in 0..n {
            for k in 0..n {
                let s = (i as f64 + 0.5) / n as f64;
                let t = (k as f64 + 0.5) / n as f64;
                self.diffusion([lo[0] + s * (hi[0] - lo[0]), lo[1] + t * (hi[1] - lo[1])])?;
            }
        }
        Ok(())
    }
}

pub fn min_eigenvalue(a11: f64, a12: f64, a22: f64) -> f64 {
    let mean = 0.5 * (a11 + a22);
    let dev = (0.5 * (a11 - a22)).hypot(a12);
    mean - dev
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 5] = ["sinsin", "linear", "quadratic", "variable-coeff", "convection"];

fn sinsin_parts() -> (ScalarField, ScalarField, ScalarField) {
    (
        ScalarField::from_fn(|x, y| (PI * x).sin() * (PI * y).sin()),
        ScalarField::from_fn(|x, y| PI * (PI * x).cos() * (PI * y).sin()),
        ScalarField::from_fn(|x, y| PI * (PI * x).sin() * (PI * y).cos()),
    )
}

/// Manufactured problems on the unit square.
pub fn builtin(name: &str) -> Option<ProblemSpec> {
    let s = |x: f64, y: f64| (PI * x).sin() * (PI * y).sin();
    let sx = |x: f64, y: f64| PI * (PI * x).cos() * (PI * y).sin();
    let sy = |x: f64, y: f64| PI * (PI * x).sin() * (PI * y).cos();
    let spec = match name {
        "sinsin" => {
            let (u, ux, uy) = sinsin_parts();
            ProblemSpec::poisson(
                ScalarField::from_fn(move |x, y| 2.0 * PI * PI * s(x, y)),
                u.clone(),
            )
            .with_exact(ExactSolution { u, ux, uy })
        }
        "linear" => {
            let u = ScalarField::from_fn(|x, y| 1.0 + 2.0 * x - 3.0 * y);
            ProblemSpec::poisson(ScalarField::zero(), u.clone()).with_exact(ExactSolution {
                u,
                ux: ScalarField::constant(2.0),
                uy: ScalarField::constant(-3.0),
            })
        }
        "quadratic" => {
            let u = ScalarField::from_fn(|x, y| x * x - y * y + x * y);
            ProblemSpec::poisson(ScalarField::zero(), u.clone()).with_exact(ExactSolution {
                u,
                ux: ScalarField::from_fn(|x, y| 2.0 * x + y),
                uy: ScalarField::from_fn(|x, y| x - 2.0 * y),
            })
        }
        "variable-coeff" => {
            let (u, ux, uy) = sinsin_parts();
            // -(a11 u_x)_x - (a22 u_y)_y + b . grad u + c u   (b constant)
            let f = move |x: f64, y: f64| {
                -2.0 * x * sx(x, y) - 2.0 * y * sy(x, y)
                    + (2.0 + x * x + y * y) * PI * PI * s(x, y)
                    + sx(x, y)
                    - sy(x, y)
                    + (1.0 + x * y) * s(x, y)
            };
            ProblemSpec {
                a11: ScalarField::from_fn(|x, _| 1.0 + x * x),
                a22: ScalarField::from_fn(|_, y| 1.0 + y * y),
                b1: ScalarField::constant(1.0),
                b2: ScalarField::constant(-1.0),
                c: ScalarField::from_fn(|x, y| 1.0 + x * y),
                ..ProblemSpec::poisson(ScalarField::from_fn(f), u.clone())
            }
            .with_exact(ExactSolution { u, ux, uy })
        }
        "convection" => {
            let (u, ux, uy) = sinsin_parts();
            let f = move |x: f64, y: f64| 2.0 * PI * PI * s(x, y) + 2.0 * sx(x, y) + sy(x, y);
            ProblemSpec {
                b1: ScalarField::constant(2.0),
                b2: ScalarField::constant(1.0),
                ..ProblemSpec::poisson(ScalarField::from_fn(f), u.clone())
            }
            .with_exact(ExactSolution { u, ux, uy })
        }
        _ => return None,
    };
    Some(spec.with_name(name))
}

/// Strong-form residual `-div(a grad u) + div(b u) + c u - f` at `p` by
/// central differences of the coefficient fields and the exact solution.
pub fn pde_residual_fd(problem: &ProblemSpec, p: Point, h: f64) -> Result<f64> {
    let exact = problem
        .exact
        .as_ref()
        .ok_or_else(|| WgError::MissingExact(problem.name.clone()))?;
    let u = |x: f64, y: f64| exact.u.eval([x, y]);
    let [x, y] = p;
    let u0 = u(x, y)?;
    let ev = |fld: &ScalarField, x: f64, y: f64| fld.eval([x, y]);

    // d/dx(a11 u_x) + d/dy(a22 u_y) in conservative three-point form
    let dxx = (ev(&problem.a11, x + h / 2.0, y)? * (u(x + h, y)? - u0)
        - ev(&problem.a11, x - h / 2.0, y)? * (u0 - u(x - h, y)?))
        / (h * h);
    let dyy = (ev(&problem.a22, x, y + h / 2.0)? * (u(x, y + h)? - u0)
        - ev(&problem.a22, x, y - h / 2.0)? * (u0 - u(x, y - h)?))
        / (h * h);
    // mixed terms: d/dx(a12 u_y) + d/dy(a12 u_x)
    let flux_y = |x: f64, y: f64| -> Result<f64> {
        Ok(ev(&problem.a12, x, y)? * (u(x, y + h)? - u(x, y - h)?) / (2.0 * h))
    };
    let flux_x = |x: f64, y: f64| -> Result<f64> {
        Ok(ev(&problem.a12, x, y)? * (u(x + h, y)? - u(x - h, y)?) / (2.0 * h))
    };
    let dxy = (flux_y(x + h, y)? - flux_y(x - h, y)?) / (2.0 * h)
        + (flux_x(x, y + h)? - flux_x(x, y - h)?) / (2.0 * h);
    let bu = |x: f64, y: f64| -> Result<[f64; 2]> {
        let uu = u(x, y)?;
        Ok([ev(&problem.b1, x, y)? * uu, ev(&problem.b2, x, y)? * uu])
    };
    let div_bu = (bu(x + h, y)?[0] - bu(x - h, y)?[0]) / (2.0 * h)
        + (bu(x, y + h)?[1] - bu(x, y - h)?[1]) / (2.0 * h);
    Ok(-(dxx + dyy + dxy) + div_bu + ev(&problem.c, x, y)? * u0 - ev(&problem.f, x, y)?)
}
