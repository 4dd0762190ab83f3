//! Lie algebroids in a single coordinate chart.
//!
//! An algebroid of rank `n` over an `m`-dimensional chart is given by its
//! local structure functions: the anchor matrix `rho[i][alpha](q)` and the
//! bracket coefficients `C^gamma_{alpha beta}(q)` of the frame
//! `[e_alpha, e_beta] = C^gamma_{alpha beta} e_gamma`. Derivatives of both
//! can be supplied analytically; otherwise central differences are used.

use crate::error::{ensure_finite, Error, Result};
use crate::fd;
use crate::fields::BaseField;
use crate::sampling::{self, SampleBox};
use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::sync::Arc;

/// Coordinate chart on the base: names plus an open axis-aligned box.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseChart {
    coord_names: Vec<String>,
    domain: Vec<(f64, f64)>,
}

impl BaseChart {
    /// `domain[i] = (lower, upper)`; infinite bounds mark an unbounded axis.
    pub fn new(coord_names: Vec<String>, domain: Vec<(f64, f64)>) -> Result<Self> {
        if coord_names.len() != domain.len() {
            return Err(Error::Dimension(format!(
                "{} coordinate names but {} domain intervals",
                coord_names.len(),
                domain.len()
            )));
        }
        for (i, &(lo, hi)) in domain.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::Model(format!(
                    "empty domain interval ({lo}, {hi}) for coordinate {i}"
                )));
            }
        }
        Ok(Self {
            coord_names,
            domain,
        })
    }

    pub fn unbounded(coord_names: &[&str]) -> Self {
        Self {
            coord_names: coord_names.iter().map(|s| s.to_string()).collect(),
            domain: vec![(f64::NEG_INFINITY, f64::INFINITY); coord_names.len()],
        }
    }

    /// Chart of a zero-dimensional base (a point).
    pub fn point() -> Self {
        Self {
            coord_names: Vec::new(),
            domain: Vec::new(),
        }
    }

    pub fn base_dim(&self) -> usize {
        self.coord_names.len()
    }

    pub fn coord_names(&self) -> &[String] {
        &self.coord_names
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        self.check(q).is_ok()
    }

    pub fn check(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.base_dim() {
            return Err(Error::Dimension(format!(
                "base point has {} coordinates, chart has {}",
                q.len(),
                self.base_dim()
            )));
        }
        ensure_finite(q, "base point")?;
        for (axis, (&x, &(lower, upper))) in q.iter().zip(&self.domain).enumerate() {
            if !(x > lower && x < upper) {
                return Err(Error::OutOfChart {
                    axis,
                    value: x,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }

    /// A closed sampling box inside the chart. Bounded axes are shrunk by a relative
    /// margin; unbounded sides extend `half_width` from the finite bound (or from 0).
    pub fn sample_box(&self, half_width: f64, margin: f64) -> SampleBox {
        SampleBox::new(
            self.domain
                .iter()
                .map(|&(lo, hi)| match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => {
                        let pad = (hi - lo) * margin;
                        (lo + pad, hi - pad)
                    }
                    (true, false) => (lo + margin, lo + margin + 2.0 * half_width),
                    (false, true) => (hi - margin - 2.0 * half_width, hi - margin),
                    (false, false) => (-half_width, half_width),
                })
                .collect(),
        )
    }
}

/// Bracket coefficients `C^gamma_{alpha beta}` stored densely as `n x n x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTensor {
    n: usize,
    data: Vec<f64>,
}

impl StructureTensor {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, gamma: usize, alpha: usize, beta: usize) -> usize {
        (gamma * self.n + alpha) * self.n + beta
    }

    #[inline]
    pub fn get(&self, gamma: usize, alpha: usize, beta: usize) -> f64 {
        self.data[self.idx(gamma, alpha, beta)]
    }

    pub fn set(&mut self, gamma: usize, alpha: usize, beta: usize, value: f64) {
        let i = self.idx(gamma, alpha, beta);
        self.data[i] = value;
    }

    /// Sets `[e_alpha, e_beta]` to have `e_gamma`-component `value`, and the mirrored entry.
    pub fn set_bracket(&mut self, gamma: usize, alpha: usize, beta: usize, value: f64) {
        self.set(gamma, alpha, beta, value);
        self.set(gamma, beta, alpha, -value);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn from_flat(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n * n {
            return Err(Error::Dimension(format!(
                "structure tensor of rank {n} needs {} entries, got {}",
                n * n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    /// Largest `|C^g_{ab} + C^g_{ba}|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for g in 0..n {
            for a in 0..n {
                for b in a..n {
                    worst = worst.max((self.get(g, a, b) + self.get(g, b, a)).abs());
                }
            }
        }
        worst
    }

    /// Trace of `ad_{e_alpha}`: `sum_beta C^beta_{alpha beta}`.
    pub fn ad_trace(&self, alpha: usize) -> f64 {
        (0..self.n).map(|b| self.get(b, alpha, b)).sum()
    }
}

/// Dense real tensor used for residual outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    fn offset(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(&self.shape)
            .fold(0, |acc, (&i, &s)| acc * s + i)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let o = self.offset(index);
        self.data[o] = value;
    }

    /// Max-norm; zero for an empty tensor.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

/// A covector `theta_alpha e^alpha` in the fibre of `A*` over a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebroidCovector {
    pub base_point: Vec<f64>,
    pub components: DVector<f64>,
}

impl AlgebroidCovector {
    pub fn max_abs(&self) -> f64 {
        self.components.amax()
    }
}

pub type AnchorFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type StructureFn = Arc<dyn Fn(&[f64]) -> StructureTensor + Send + Sync>;
pub type AnchorJacFn = Arc<dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync>;
pub type StructureJacFn = Arc<dyn Fn(&[f64]) -> Vec<StructureTensor> + Send + Sync>;
pub type CovectorFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
pub type CovectorJacFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// A section of `A*` over the chart, with optional `q`-Jacobian (`n x m`, entry `[beta][i]`).
#[derive(Clone)]
pub struct CovectorField {
    components: CovectorFn,
    jacobian: Option<CovectorJacFn>,
    finite_differences: bool,
}

impl fmt::Debug for CovectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CovectorField")
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

impl CovectorField {
    pub fn new(components: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Self {
            components: Arc::new(components),
            jacobian: None,
            finite_differences: true,
        }
    }

    pub fn with_jacobian(
        components: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
        jacobian: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            components: Arc::new(components),
            jacobian: Some(Arc::new(jacobian)),
            finite_differences: true,
        }
    }

    pub fn constant(theta: DVector<f64>) -> Self {
        let n = theta.len();
        Self::with_jacobian(move |_| theta.clone(), move |q| DMatrix::zeros(n, q.len()))
    }

    pub fn analytic_only(mut self) -> Self {
        self.finite_differences = false;
        self
    }

    pub fn components(&self, q: &[f64]) -> DVector<f64> {
        (self.components)(q)
    }

    pub fn jacobian(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        if let Some(j) = &self.jacobian {
            return Ok(j(q));
        }
        if !self.finite_differences {
            return Err(Error::Capability(
                "covector field has no jacobian and finite differences are disabled".into(),
            ));
        }
        let n = self.components(q).len();
        let m = q.len();
        let mut out = DMatrix::zeros(n, m);
        for i in 0..m {
            let col = fd::partial_five_point(|x| (self.components)(x).as_slice().to_vec(), q, i);
            for b in 0..n {
                out[(b, i)] = col[b];
            }
        }
        Ok(out)
    }
}

/// Where derivatives of the structure functions come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeSource {
    Analytic,
    FiniteDifferences,
}

/// A Lie algebroid described in one chart.
#[derive(Clone)]
pub struct ChartedAlgebroid {
    chart: BaseChart,
    rank: usize,
    anchor: AnchorFn,
    structure: StructureFn,
    anchor_jac: Option<AnchorJacFn>,
    structure_jac: Option<StructureJacFn>,
    finite_differences: bool,
}

impl fmt::Debug for ChartedAlgebroid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartedAlgebroid")
            .field("chart", &self.chart)
            .field("rank", &self.rank)
            .field("analytic_anchor_jac", &self.anchor_jac.is_some())
            .field("analytic_structure_jac", &self.structure_jac.is_some())
            .finish()
    }
}

/// Number of probe points used to validate antisymmetry of the bracket on construction.
const ANTISYMMETRY_PROBES: usize = 10;
const ANTISYMMETRY_TOL: f64 = 1e-12;

pub struct AlgebroidBuilder {
    chart: BaseChart,
    rank: usize,
    anchor: Option<AnchorFn>,
    structure: Option<StructureFn>,
    anchor_jac: Option<AnchorJacFn>,
    structure_jac: Option<StructureJacFn>,
    finite_differences: bool,
}

impl AlgebroidBuilder {
    pub fn anchor(mut self, f: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        self.anchor = Some(Arc::new(f));
        self
    }

    pub fn structure(
        mut self,
        f: impl Fn(&[f64]) -> StructureTensor + Send + Sync + 'static,
    ) -> Self {
        self.structure = Some(Arc::new(f));
        self
    }

    /// Constant structure coefficients (Lie algebra frames, product structures).
    pub fn constant_structure(self, c: StructureTensor) -> Self {
        let m = self.chart.base_dim();
        let n = c.rank();
        self.structure(move |_| c.clone())
            .structure_jacobian(move |_| vec![StructureTensor::zeros(n); m])
    }

    /// `d rho / d q^j` for each base coordinate `j`.
    pub fn anchor_jacobian(
        mut self,
        f: impl Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.anchor_jac = Some(Arc::new(f));
        self
    }

    /// `d C / d q^j` for each base coordinate `j`.
    pub fn structure_jacobian(
        mut self,
        f: impl Fn(&[f64]) -> Vec<StructureTensor> + Send + Sync + 'static,
    ) -> Self {
        self.structure_jac = Some(Arc::new(f));
        self
    }

    pub fn finite_differences(mut self, enabled: bool) -> Self {
        self.finite_differences = enabled;
        self
    }

    pub fn build(self) -> Result<ChartedAlgebroid> {
        let m = self.chart.base_dim();
        let n = self.rank;
        if n == 0 {
            return Err(Error::Model("algebroid rank must be at least 1".into()));
        }
        let anchor = match self.anchor {
            Some(a) => a,
            None if m == 0 => Arc::new(move |_: &[f64]| DMatrix::zeros(0, n)) as AnchorFn,
            None => return Err(Error::Model("anchor map missing".into())),
        };
        let anchor_jac = match (self.anchor_jac, m) {
            (None, 0) => Some(Arc::new(|_: &[f64]| Vec::new()) as AnchorJacFn),
            (j, _) => j,
        };
        let (structure, structure_jac) = match self.structure {
            Some(s) => (s, self.structure_jac),
            None => {
                let zero = StructureTensor::zeros(n);
                (
                    Arc::new(move |_: &[f64]| zero.clone()) as StructureFn,
                    Some(
                        Arc::new(move |_: &[f64]| vec![StructureTensor::zeros(n); m])
                            as StructureJacFn,
                    ),
                )
            }
        };
        let structure_jac = match (structure_jac, m) {
            (None, 0) => Some(Arc::new(|_: &[f64]| Vec::new()) as StructureJacFn),
            (j, _) => j,
        };
        let alg = ChartedAlgebroid {
            chart: self.chart,
            rank: n,
            anchor,
            structure,
            anchor_jac,
            structure_jac,
            finite_differences: self.finite_differences,
        };
        alg.validate_shapes_and_antisymmetry()?;
        Ok(alg)
    }
}

impl ChartedAlgebroid {
    pub fn builder(chart: BaseChart, rank: usize) -> AlgebroidBuilder {
        AlgebroidBuilder {
            chart,
            rank,
            anchor: None,
            structure: None,
            anchor_jac: None,
            structure_jac: None,
            finite_differences: true,
        }
    }

    /// A Lie algebra viewed as an algebroid over a point.
    pub fn lie_algebra(c: StructureTensor) -> Result<Self> {
        let n = c.rank();
        Self::builder(BaseChart::point(), n)
            .constant_structure(c)
            .build()
    }

    fn validate_shapes_and_antisymmetry(&self) -> Result<()> {
        let (m, n) = (self.base_dim(), self.rank);
        let probe = self.chart.sample_box(1.0, 1e-3);
        let mut rng = sampling::rng(0);
        for _ in 0..ANTISYMMETRY_PROBES {
            let q = probe.uniform(&mut rng);
            let rho = (self.anchor)(&q);
            if rho.nrows() != m || rho.ncols() != n {
                return Err(Error::Dimension(format!(
                    "anchor is {}x{}, expected {m}x{n}",
                    rho.nrows(),
                    rho.ncols()
                )));
            }
            let c = (self.structure)(&q);
            if c.rank() != n {
                return Err(Error::Dimension(format!(
                    "structure tensor has rank {}, expected {n}",
                    c.rank()
                )));
            }
            let scale = c.as_slice().iter().fold(1.0f64, |s, v| s.max(v.abs()));
            let defect = c.antisymmetry_defect();
            if defect > ANTISYMMETRY_TOL * scale {
                return Err(Error::Model(format!(
                    "structure functions are not antisymmetric at {q:?} (defect {defect:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn chart(&self) -> &BaseChart {
        &self.chart
    }

    pub fn base_dim(&self) -> usize {
        self.chart.base_dim()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn derivative_source(&self) -> DerivativeSource {
        if self.anchor_jac.is_some() && self.structure_jac.is_some() {
            DerivativeSource::Analytic
        } else {
            DerivativeSource::FiniteDifferences
        }
    }

    /// Same algebroid with the analytic Jacobians dropped (finite differences only).
    pub fn without_analytic_derivatives(&self) -> Self {
        let mut alg = self.clone();
        if alg.base_dim() > 0 {
            alg.anchor_jac = None;
            alg.structure_jac = None;
        }
        alg.finite_differences = true;
        alg
    }

    pub fn anchor(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        self.chart.check(q)?;
        let rho = (self.anchor)(q);
        ensure_finite(rho.as_slice(), "anchor")?;
        Ok(rho)
    }

    pub fn structure(&self, q: &[f64]) -> Result<StructureTensor> {
        self.chart.check(q)?;
        let c = (self.structure)(q);
        ensure_finite(c.as_slice(), "structure functions")?;
        Ok(c)
    }

    /// `d rho / d q^j`, one `m x n` matrix per base coordinate.
    pub fn anchor_jacobian(&self, q: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        self.chart.check(q)?;
        let (m, n) = (self.base_dim(), self.rank);
        let jac = match &self.anchor_jac {
            Some(j) => j(q),
            None if self.finite_differences => (0..m)
                .map(|j| {
                    let col = fd::partial(|x| (self.anchor)(x).as_slice().to_vec(), q, j);
                    DMatrix::from_vec(m, n, col)
                })
                .collect(),
            None => {
                return Err(Error::Capability(
                    "anchor jacobian not supplied and finite differences disabled".into(),
                ))
            }
        };
        for d in &jac {
            ensure_finite(d.as_slice(), "anchor jacobian")?;
        }
        Ok(jac)
    }

    /// `d C / d q^j`, one tensor per base coordinate.
    pub fn structure_jacobian(&self, q: &[f64]) -> Result<Vec<StructureTensor>> {
        self.chart.check(q)?;
        let n = self.rank;
        let jac = match &self.structure_jac {
            Some(j) => j(q),
            None if self.finite_differences => (0..self.base_dim())
                .map(|j| {
                    let flat = fd::partial(|x| (self.structure)(x).as_slice().to_vec(), q, j);
                    StructureTensor { n, data: flat }
                })
                .collect(),
            None => {
                return Err(Error::Capability(
                    "structure jacobian not supplied and finite differences disabled".into(),
                ))
            }
        };
        for d in &jac {
            ensure_finite(d.as_slice(), "structure jacobian")?;
        }
        Ok(jac)
    }

    /// Divergence-like trace `sum_i d rho^i_alpha / d q^i` for each alpha.
    pub fn anchor_divergence(&self, q: &[f64]) -> Result<DVector<f64>> {
        let jac = self.anchor_jacobian(q)?;
        Ok(DVector::from_fn(self.rank, |a, _| {
            jac.iter().enumerate().map(|(i, d)| d[(i, a)]).sum()
        }))
    }

    /// `R^i_{ab} = rho^j_a d_j rho^i_b - rho^j_b d_j rho^i_a - rho^i_g C^g_{ab}`, shape `[m, n, n]`.
    pub fn anchor_compat_residual(&self, q: &[f64]) -> Result<Tensor> {
        let (m, n) = (self.base_dim(), self.rank);
        let rho = self.anchor(q)?;
        let c = self.structure(q)?;
        let drho = self.anchor_jacobian(q)?;
        let mut out = Tensor::zeros(&[m, n, n]);
        for i in 0..m {
            for a in 0..n {
                for b in 0..n {
                    let mut r = 0.0;
                    for (j, dj) in drho.iter().enumerate() {
                        r += rho[(j, a)] * dj[(i, b)] - rho[(j, b)] * dj[(i, a)];
                    }
                    for g in 0..n {
                        r -= rho[(i, g)] * c.get(g, a, b);
                    }
                    out.set(&[i, a, b], r);
                }
            }
        }
        ensure_finite(&out.data, "anchor compatibility residual")?;
        Ok(out)
    }

    /// `J^nu_{abg} = sum_cyclic(a,b,g) [rho^i_a d_i C^nu_{bg} + C^nu_{a mu} C^mu_{bg}]`,
    /// shape `[n, n, n, n]` indexed `(nu, a, b, g)`.
    pub fn jacobi_residual(&self, q: &[f64]) -> Result<Tensor> {
        let n = self.rank;
        let rho = self.anchor(q)?;
        let c = self.structure(q)?;
        let dc = self.structure_jacobian(q)?;
        let term = |nu: usize, a: usize, b: usize, g: usize| -> f64 {
            let mut t = 0.0;
            for (i, dci) in dc.iter().enumerate() {
                t += rho[(i, a)] * dci.get(nu, b, g);
            }
            for mu in 0..n {
                t += c.get(nu, a, mu) * c.get(mu, b, g);
            }
            t
        };
        let mut out = Tensor::zeros(&[n, n, n, n]);
        for nu in 0..n {
            for a in 0..n {
                for b in 0..n {
                    for g in 0..n {
                        let v = term(nu, a, b, g) + term(nu, b, g, a) + term(nu, g, a, b);
                        out.set(&[nu, a, b, g], v);
                    }
                }
            }
        }
        ensure_finite(&out.data, "jacobi residual")?;
        Ok(out)
    }

    /// `(d^A f)_a = rho^i_a df/dq^i`.
    pub fn differential_of_function(&self, f: &BaseField, q: &[f64]) -> Result<AlgebroidCovector> {
        let rho = self.anchor(q)?;
        let components = if self.base_dim() == 0 {
            DVector::zeros(self.rank)
        } else {
            let grad = DVector::from_vec(f.gradient(q)?);
            ensure_finite(grad.as_slice(), "function gradient")?;
            rho.transpose() * grad
        };
        Ok(AlgebroidCovector {
            base_point: q.to_vec(),
            components,
        })
    }

    /// `(d^A theta)_{ab} = rho^i_a d_i theta_b - rho^i_b d_i theta_a - C^g_{ab} theta_g`.
    pub fn differential_of_section(
        &self,
        theta: &CovectorField,
        q: &[f64],
    ) -> Result<DMatrix<f64>> {
        let n = self.rank;
        let rho = self.anchor(q)?;
        let c = self.structure(q)?;
        let values = theta.components(q);
        if values.len() != n {
            return Err(Error::Dimension(format!(
                "covector has {} components, rank is {n}",
                values.len()
            )));
        }
        // rho^T (n x m) times d theta^T (m x n): entry (a, b) = rho^i_a d_i theta_b
        let directional = if self.base_dim() == 0 {
            DMatrix::zeros(n, n)
        } else {
            let dtheta = theta.jacobian(q)?;
            rho.transpose() * dtheta.transpose()
        };
        let mut out = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let mut v = directional[(a, b)] - directional[(b, a)];
                for g in 0..n {
                    v -= c.get(g, a, b) * values[g];
                }
                out[(a, b)] = v;
            }
        }
        ensure_finite(out.as_slice(), "differential of section")?;
        Ok(out)
    }

    /// Max over `points` of the anchor and Jacobi residual norms.
    pub fn structure_residuals(&self, points: &[Vec<f64>]) -> Result<(f64, f64)> {
        let mut anchor_max: f64 = 0.0;
        let mut jacobi_max: f64 = 0.0;
        for q in points {
            anchor_max = anchor_max.max(self.anchor_compat_residual(q)?.max_abs());
            jacobi_max = jacobi_max.max(self.jacobi_residual(q)?.max_abs());
        }
        Ok((anchor_max, jacobi_max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn standard(m: usize) -> ChartedAlgebroid {
        let names: Vec<String> = (1..=m).map(|i| format!("q{i}")).collect();
        let chart = BaseChart::new(names, vec![(f64::NEG_INFINITY, f64::INFINITY); m]).unwrap();
        ChartedAlgebroid::builder(chart, m)
            .anchor(move |_| DMatrix::identity(m, m))
            .anchor_jacobian(move |_| vec![DMatrix::zeros(m, m); m])
            .build()
            .unwrap()
    }

    fn aff1() -> ChartedAlgebroid {
        let mut c = StructureTensor::zeros(2);
        c.set_bracket(1, 0, 1, 1.0);
        ChartedAlgebroid::lie_algebra(c).unwrap()
    }

    #[test]
    fn chart_rejects_bad_domains_and_points() {
        assert!(BaseChart::new(vec!["x".into()], vec![(1.0, 1.0)]).is_err());
        assert!(BaseChart::new(vec!["x".into()], vec![]).is_err());
        let chart = BaseChart::new(vec!["x".into()], vec![(0.0, 1.0)]).unwrap();
        assert!(matches!(
            chart.check(&[1.0]),
            Err(Error::OutOfChart { axis: 0, .. })
        ));
        assert!(chart.check(&[0.5]).is_ok());
        assert!(matches!(chart.check(&[f64::NAN]), Err(Error::NonFinite(_))));
    }

    #[test]
    fn rejects_non_antisymmetric_structure() {
        let mut c = StructureTensor::zeros(2);
        c.set(1, 0, 1, 1.0);
        assert!(matches!(
            ChartedAlgebroid::lie_algebra(c),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn standard_algebroid_residuals_vanish() {
        let alg = standard(3);
        let q = [0.3, -1.0, 2.0];
        assert_eq!(alg.anchor_compat_residual(&q).unwrap().max_abs(), 0.0);
        assert_eq!(alg.jacobi_residual(&q).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn lie_algebra_has_empty_anchor_residual() {
        let alg = aff1();
        let r = alg.anchor_compat_residual(&[]).unwrap();
        assert_eq!(r.shape, vec![0, 2, 2]);
        assert!(r.data.is_empty());
        assert_eq!(alg.jacobi_residual(&[]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn differential_of_function_examples() {
        let f = BaseField::new(|q| q[0]);
        let d = standard(3)
            .differential_of_function(&f, &[1.0, 2.0, 3.0])
            .unwrap();
        assert!((d.components[0] - 1.0).abs() < 1e-10);
        assert!(d.components[1].abs() < 1e-10 && d.components[2].abs() < 1e-10);
        let g = BaseField::new(|_| 42.0).analytic_only();
        let z = aff1().differential_of_function(&g, &[]).unwrap();
        assert_eq!(z.components, DVector::zeros(2));
    }

    #[test]
    fn differential_of_section_on_aff1() {
        let alg = aff1();
        let d1 = alg
            .differential_of_section(
                &CovectorField::constant(DVector::from_vec(vec![1.0, 0.0])),
                &[],
            )
            .unwrap();
        assert_eq!(d1[(0, 1)], 0.0);
        let d2 = alg
            .differential_of_section(
                &CovectorField::constant(DVector::from_vec(vec![0.0, 1.0])),
                &[],
            )
            .unwrap();
        assert_eq!(d2[(0, 1)], -1.0);
        assert_eq!(d2[(1, 0)], 1.0);
        let zero = alg
            .differential_of_section(&CovectorField::constant(DVector::zeros(2)), &[])
            .unwrap();
        assert_eq!(zero.amax(), 0.0);
    }

    #[test]
    fn d_squared_vanishes_on_standard_algebroid() {
        let alg = standard(2);
        let f = BaseField::with_gradient(
            |q| (q[0] * q[1]).sin() + q[0].powi(3),
            |q| {
                vec![
                    q[1] * (q[0] * q[1]).cos() + 3.0 * q[0] * q[0],
                    q[0] * (q[0] * q[1]).cos(),
                ]
            },
        );
        let alg2 = alg.clone();
        let theta =
            CovectorField::new(move |q| alg2.differential_of_function(&f, q).unwrap().components);
        let dd = alg.differential_of_section(&theta, &[0.4, -0.9]).unwrap();
        assert!(dd.amax() < 1e-8, "{}", dd.amax());
    }

    #[test]
    fn missing_jacobian_without_fd_is_a_capability_error() {
        let chart = BaseChart::unbounded(&["x"]);
        let alg = ChartedAlgebroid::builder(chart, 1)
            .anchor(|q| DMatrix::from_element(1, 1, q[0]))
            .finite_differences(false)
            .build()
            .unwrap();
        assert!(matches!(
            alg.anchor_compat_residual(&[1.0]),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn out_of_chart_evaluation_is_an_error() {
        let chart = BaseChart::new(vec!["x".into()], vec![(0.0, 1.0)]).unwrap();
        let alg = ChartedAlgebroid::builder(chart, 1)
            .anchor(|_| DMatrix::from_element(1, 1, 1.0))
            .build()
            .unwrap();
        assert!(matches!(alg.anchor(&[2.0]), Err(Error::OutOfChart { .. })));
    }
}
