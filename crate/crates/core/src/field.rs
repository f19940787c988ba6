use std::fmt;
use std::sync::Arc;

use crate::expr::{EvalError, Expr};
use crate::mesh::Point;

type FieldFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A scalar coefficient field evaluable at any point of the domain.
#[derive(Clone)]
pub enum ScalarField {
    Const(f64),
    Expr(Arc<Expr>),
    Func(Arc<FieldFn>),
}

impl ScalarField {
    pub fn constant(v: f64) -> Self {
        ScalarField::Const(v)
    }

    pub fn zero() -> Self {
        ScalarField::Const(0.0)
    }

    pub fn from_fn(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField::Func(Arc::new(f))
    }

    pub fn from_expr(e: Expr) -> Self {
        match e {
            Expr::Num(v) => ScalarField::Const(v),
            e => ScalarField::Expr(Arc::new(e)),
        }
    }

    #[inline]
    pub fn eval(&self, p: Point) -> Result<f64, EvalError> {
        match self {
            ScalarField::Const(v) => Ok(*v),
            ScalarField::Expr(e) => e.eval(p[0], p[1]),
            ScalarField::Func(f) => Ok(f(p[0], p[1])),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarField::Const(v) if *v == 0.0)
    }

    /// Scale by a constant.
    pub fn scaled(&self, alpha: f64) -> ScalarField {
        match self {
            ScalarField::Const(v) => ScalarField::Const(alpha * v),
            other => {
                let inner = other.clone();
                ScalarField::from_fn(move |x, y| alpha * inner.eval([x, y]).unwrap_or(f64::NAN))
            }
        }
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarField::Const(v) => write!(f, "Const({v})"),
            ScalarField::Expr(e) => write!(f, "Expr({e})"),
            ScalarField::Func(_) => f.write_str("Func(..)"),
        }
    }
}

impl From<f64> for ScalarField {
    fn from(v: f64) -> Self {
        ScalarField::Const(v)
    }
}

impl From<Expr> for ScalarField {
    fn from(e: Expr) -> Self {
        ScalarField::from_expr(e)
    }
}
