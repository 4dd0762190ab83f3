//! Scalar fields on the base chart and on phase space, with optional analytic gradients.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fd;
use crate::sampling::{self, SampleBox};
use nalgebra::DMatrix;
use std::fmt;
use std::sync::Arc;

pub type BaseFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type BaseGradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type PhaseFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type PhaseGradFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type PhaseHessFn = Arc<dyn Fn(&[f64], &[f64]) -> DMatrix<f64> + Send + Sync>;

/// A smooth function `f(q)` on the base chart.
#[derive(Clone)]
pub struct BaseField {
    value: BaseFn,
    gradient: Option<BaseGradFn>,
    finite_differences: bool,
}

impl fmt::Debug for BaseField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BaseField")
            .field("analytic_gradient", &self.gradient.is_some())
            .field("finite_differences", &self.finite_differences)
            .finish()
    }
}

impl BaseField {
    /// Field whose gradient is taken by central differences.
    pub fn new(value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
            finite_differences: true,
        }
    }

    pub fn with_gradient(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            gradient: Some(Arc::new(gradient)),
            finite_differences: true,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::with_gradient(move |_| c, |q| vec![0.0; q.len()])
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// Field defined by an expression over `dim` variables; the gradient is symbolic.
    pub fn from_expr(expr: Expr, dim: usize) -> Self {
        let partials: Vec<Expr> = (0..dim).map(|k| expr.derivative(k)).collect();
        Self::with_gradient(
            move |q| expr.eval(q),
            move |q| partials.iter().map(|d| d.eval(q)).collect(),
        )
    }

    /// Disallow the finite-difference fallback; `gradient` then fails without an analytic gradient.
    pub fn analytic_only(mut self) -> Self {
        self.finite_differences = false;
        self
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn value(&self, q: &[f64]) -> f64 {
        (self.value)(q)
    }

    pub fn gradient(&self, q: &[f64]) -> Result<Vec<f64>> {
        match &self.gradient {
            Some(g) => Ok(g(q)),
            None if self.finite_differences => Ok(fd::gradient(|x| (self.value)(x), q)),
            None => Err(Error::Capability(
                "base field has no gradient and finite differences are disabled".into(),
            )),
        }
    }

    /// Pointwise sum of two fields.
    pub fn plus(&self, other: &BaseField) -> BaseField {
        let (a, b) = (self.clone(), other.clone());
        let (ga, gb) = (self.clone(), other.clone());
        BaseField {
            value: Arc::new(move |q| a.value(q) + b.value(q)),
            gradient: if self.gradient.is_some() && other.gradient.is_some() {
                Some(Arc::new(move |q| {
                    let x = ga.gradient(q).unwrap_or_default();
                    let y = gb.gradient(q).unwrap_or_default();
                    x.iter().zip(&y).map(|(u, v)| u + v).collect()
                }))
            } else {
                None
            },
            finite_differences: self.finite_differences && other.finite_differences,
        }
    }
}

/// A smooth function `F(q, p)` on the dual bundle, in chart coordinates.
#[derive(Clone)]
pub struct ScalarPhaseField {
    value: PhaseFn,
    gradient: Option<PhaseGradFn>,
    hessian: Option<PhaseHessFn>,
}

impl fmt::Debug for ScalarPhaseField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarPhaseField")
            .field("analytic_gradient", &self.gradient.is_some())
            .field("analytic_hessian", &self.hessian.is_some())
            .finish()
    }
}

/// Relative tolerance used when a supplied gradient is probed against finite differences.
pub const GRADIENT_PROBE_RTOL: f64 = 1e-4;
const GRADIENT_PROBES: usize = 5;

impl ScalarPhaseField {
    pub fn new(value: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
            hessian: None,
        }
    }

    /// Field with a supplied gradient, ordered `(dF/dq_1..dF/dq_m, dF/dp_1..dF/dp_n)`.
    pub fn with_gradient(
        value: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            gradient: Some(Arc::new(gradient)),
            hessian: None,
        }
    }

    /// Adds the second derivatives in `(q, p)` order; used to differentiate brackets exactly.
    pub fn with_hessian(
        mut self,
        hessian: impl Fn(&[f64], &[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    /// Like [`with_gradient`](Self::with_gradient) but probes the gradient against
    /// finite differences at five points of `probe` (a box over `(q, p)`).
    pub fn checked(
        value: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        base_dim: usize,
        probe: &SampleBox,
        seed: u64,
    ) -> Result<Self> {
        let field = Self::with_gradient(value, gradient);
        field.validate_gradient(base_dim, probe, seed)?;
        Ok(field)
    }

    /// Field given by an expression over the variables `(q_1..q_m, p_1..p_n)`.
    pub fn from_expr(expr: Expr, base_dim: usize, rank: usize) -> Self {
        let dim = base_dim + rank;
        let partials: Vec<Expr> = (0..dim).map(|k| expr.derivative(k)).collect();
        let joined =
            move |q: &[f64], p: &[f64]| -> Vec<f64> { q.iter().chain(p).copied().collect() };
        let second: Vec<Vec<Expr>> = partials
            .iter()
            .map(|d| (0..dim).map(|k| d.derivative(k)).collect())
            .collect();
        let (j2, j3) = (joined, joined);
        Self::with_gradient(
            move |q, p| expr.eval(&joined(q, p)),
            move |q, p| {
                let x = j2(q, p);
                partials.iter().map(|d| d.eval(&x)).collect()
            },
        )
        .with_hessian(move |q, p| {
            let x = j3(q, p);
            DMatrix::from_fn(dim, dim, |r, c| second[r][c].eval(&x))
        })
    }

    /// Basic field `f(q)` lifted to phase space.
    pub fn basic(field: BaseField) -> Self {
        let g = field.clone();
        Self::with_gradient(
            move |q, _| field.value(q),
            move |q, p| {
                let mut out = g
                    .gradient(q)
                    .unwrap_or_else(|_| fd::gradient(|x| g.value(x), q));
                out.extend(std::iter::repeat_n(0.0, p.len()));
                out
            },
        )
    }

    pub fn constant(c: f64) -> Self {
        Self::with_gradient(move |_, _| c, |q, p| vec![0.0; q.len() + p.len()])
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn has_analytic_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn hessian(&self, q: &[f64], p: &[f64]) -> Option<DMatrix<f64>> {
        self.hessian.as_ref().map(|h| h(q, p))
    }

    pub fn value(&self, q: &[f64], p: &[f64]) -> f64 {
        (self.value)(q, p)
    }

    pub fn gradient(&self, q: &[f64], p: &[f64]) -> Vec<f64> {
        match &self.gradient {
            Some(g) => g(q, p),
            None => self.fd_gradient(q, p),
        }
    }

    pub fn fd_gradient(&self, q: &[f64], p: &[f64]) -> Vec<f64> {
        let m = q.len();
        let x: Vec<f64> = q.iter().chain(p).copied().collect();
        fd::gradient(|y| (self.value)(&y[..m], &y[m..]), &x)
    }

    pub fn validate_gradient(&self, base_dim: usize, probe: &SampleBox, seed: u64) -> Result<()> {
        let Some(g) = &self.gradient else {
            return Ok(());
        };
        let mut rng = sampling::rng(seed);
        for _ in 0..GRADIENT_PROBES {
            let x = probe.uniform(&mut rng);
            let (q, p) = x.split_at(base_dim);
            let supplied = g(q, p);
            let numeric = self.fd_gradient(q, p);
            if supplied.len() != numeric.len() {
                return Err(Error::Dimension(format!(
                    "gradient has {} components, expected {}",
                    supplied.len(),
                    numeric.len()
                )));
            }
            for (k, (a, b)) in supplied.iter().zip(&numeric).enumerate() {
                if (a - b).abs() > GRADIENT_PROBE_RTOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::Model(format!(
                        "supplied gradient component {k} = {a} disagrees with finite differences ({b}) at {x:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Pointwise product, used for Leibniz-rule checks.
    pub fn product(&self, other: &ScalarPhaseField) -> ScalarPhaseField {
        let (a, b) = (self.clone(), other.clone());
        let (ga, gb) = (self.clone(), other.clone());
        ScalarPhaseField::with_gradient(
            move |q, p| a.value(q, p) * b.value(q, p),
            move |q, p| {
                let (fa, fb) = (ga.value(q, p), gb.value(q, p));
                ga.gradient(q, p)
                    .iter()
                    .zip(gb.gradient(q, p))
                    .map(|(da, db)| da * fb + fa * db)
                    .collect()
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_fallback_and_capability_error() {
        let f = BaseField::new(|q| q[0] * q[0] + 3.0 * q[1]);
        let g = f.gradient(&[2.0, 0.0]).unwrap();
        assert!((g[0] - 4.0).abs() < 1e-8 && (g[1] - 3.0).abs() < 1e-8);
        let strict = BaseField::new(|q| q[0]).analytic_only();
        assert!(matches!(strict.gradient(&[1.0]), Err(Error::Capability(_))));
    }

    #[test]
    fn checked_rejects_wrong_gradient() {
        let probe = SampleBox::cube(2, 1.0);
        let good =
            ScalarPhaseField::checked(|q, p| q[0] * p[0], |q, p| vec![p[0], q[0]], 1, &probe, 3);
        assert!(good.is_ok());
        let bad = ScalarPhaseField::checked(
            |q, p| q[0] * p[0],
            |q, p| vec![p[0], 2.0 * q[0]],
            1,
            &probe,
            3,
        );
        assert!(matches!(bad, Err(Error::Model(_))));
    }

    #[test]
    fn expr_phase_field_orders_q_then_p() {
        let vars: Vec<String> = ["th", "p1", "p2"].iter().map(|s| s.to_string()).collect();
        let e = Expr::parse("sin(th) * p2 + p1^2", &vars).unwrap();
        let f = ScalarPhaseField::from_expr(e, 1, 2);
        let g = f.gradient(&[0.3], &[2.0, 5.0]);
        assert!((g[0] - 5.0 * 0.3f64.cos()).abs() < 1e-14);
        assert_eq!(g[1], 4.0);
        assert!((g[2] - 0.3f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn product_gradient() {
        let f = ScalarPhaseField::with_gradient(|q, _| q[0], |_, _| vec![1.0, 0.0]);
        let g = ScalarPhaseField::with_gradient(|_, p| p[0], |_, _| vec![0.0, 1.0]);
        let fg = f.product(&g);
        assert_eq!(fg.gradient(&[2.0], &[3.0]), vec![3.0, 2.0]);
    }
}
