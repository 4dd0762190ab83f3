//! Linear Poisson structure on the dual bundle and Hamiltonian vector fields.
//!
//! Sign convention: `{p_a, p_b} = -C^g_{ab} p_g` and `{q^i, p_a} = rho^i_a`.
//! Linear functions bracket as `{X^, Y^} = -[X, Y]^`, which is the opposite of
//! the sign used in much of the Lie-Poisson literature.

use crate::algebroid::{ChartedAlgebroid, DerivativeSource};
use crate::error::{ensure_finite, Error, Result};
use crate::fd;
use crate::fields::{BaseField, ScalarPhaseField};
use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::sync::Arc;

/// A point `(q, p)` of the dual bundle in chart coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Self {
        Self { q, p }
    }

    /// Splits a flat `(q, p)` state after `base_dim` entries.
    pub fn from_flat(x: &[f64], base_dim: usize) -> Self {
        Self {
            q: x[..base_dim].to_vec(),
            p: x[base_dim..].to_vec(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.q.iter().chain(&self.p).copied().collect()
    }

    pub fn dim(&self) -> usize {
        self.q.len() + self.p.len()
    }

    pub fn validate(&self, alg: &ChartedAlgebroid) -> Result<()> {
        if self.p.len() != alg.rank() {
            return Err(Error::Dimension(format!(
                "phase point has {} momenta, algebroid rank is {}",
                self.p.len(),
                alg.rank()
            )));
        }
        ensure_finite(&self.p, "momenta")?;
        alg.chart().check(&self.q)
    }
}

/// Anything that can act as a Hamiltonian on the dual bundle.
pub trait Hamiltonian: Send + Sync {
    fn energy(&self, q: &[f64], p: &[f64]) -> Result<f64>;

    /// `(dH/dq, dH/dp)`.
    fn gradient(&self, q: &[f64], p: &[f64]) -> Result<(DVector<f64>, DVector<f64>)>;
}

impl Hamiltonian for ScalarPhaseField {
    fn energy(&self, q: &[f64], p: &[f64]) -> Result<f64> {
        let e = self.value(q, p);
        ensure_finite(&[e], "hamiltonian")?;
        Ok(e)
    }

    fn gradient(&self, q: &[f64], p: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        let g = ScalarPhaseField::gradient(self, q, p);
        ensure_finite(&g, "hamiltonian gradient")?;
        let m = q.len();
        Ok((
            DVector::from_column_slice(&g[..m]),
            DVector::from_column_slice(&g[m..]),
        ))
    }
}

pub type CometricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type CometricJacFn = Arc<dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync>;

/// Symmetry tolerance for the cometric.
pub const COMETRIC_SYMMETRY_TOL: f64 = 1e-12;

/// `H(q, p) = 1/2 p . G(q) p + V(q)` with `G` the cometric (inverse bundle metric).
#[derive(Clone)]
pub struct MechanicalHamiltonian {
    cometric: CometricFn,
    cometric_jac: Option<CometricJacFn>,
    potential: BaseField,
}

impl fmt::Debug for MechanicalHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MechanicalHamiltonian")
            .field("analytic_cometric_jac", &self.cometric_jac.is_some())
            .field("potential", &self.potential)
            .finish()
    }
}

impl MechanicalHamiltonian {
    pub fn new(
        cometric: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        potential: BaseField,
    ) -> Self {
        Self {
            cometric: Arc::new(cometric),
            cometric_jac: None,
            potential,
        }
    }

    /// Base-independent cometric.
    pub fn constant(cometric: DMatrix<f64>, potential: BaseField) -> Self {
        Self {
            cometric: Arc::new(move |_| cometric.clone()),
            cometric_jac: Some(Arc::new(|q| vec![DMatrix::zeros(0, 0); q.len()])),
            potential,
        }
    }

    /// `G` constant, `V = 0`.
    pub fn kinetic(cometric: DMatrix<f64>) -> Self {
        Self::constant(cometric, BaseField::zero())
    }

    pub fn with_cometric_jacobian(
        mut self,
        jac: impl Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.cometric_jac = Some(Arc::new(jac));
        self
    }

    pub fn potential(&self) -> &BaseField {
        &self.potential
    }

    /// `G(q)`, checked symmetric and positive-definite.
    pub fn cometric(&self, q: &[f64]) -> Result<DMatrix<f64>> {
        let g = (self.cometric)(q);
        ensure_finite(g.as_slice(), "cometric")?;
        if !g.is_square() {
            return Err(Error::Model("cometric is not square".into()));
        }
        let scale = g.amax().max(1.0);
        if (&g - g.transpose()).amax() > COMETRIC_SYMMETRY_TOL * scale {
            return Err(Error::Model(format!("cometric is not symmetric at {q:?}")));
        }
        if g.clone().cholesky().is_none() {
            return Err(Error::Model(format!(
                "cometric is not positive-definite at {q:?}"
            )));
        }
        Ok(g)
    }

    /// `dG/dq^j` for each base coordinate.
    pub fn cometric_jacobian(&self, q: &[f64]) -> Vec<DMatrix<f64>> {
        match &self.cometric_jac {
            Some(j) => {
                let out = j(q);
                // constant cometrics report empty matrices
                if out.iter().all(|d| d.is_empty()) {
                    let n = (self.cometric)(q).nrows();
                    return vec![DMatrix::zeros(n, n); q.len()];
                }
                out
            }
            None => {
                let n = (self.cometric)(q).nrows();
                (0..q.len())
                    .map(|j| {
                        let col = fd::partial(|x| (self.cometric)(x).as_slice().to_vec(), q, j);
                        DMatrix::from_vec(n, n, col)
                    })
                    .collect()
            }
        }
    }

    pub fn kinetic_energy(&self, q: &[f64], p: &[f64]) -> Result<f64> {
        let g = self.cometric(q)?;
        let pv = DVector::from_column_slice(p);
        Ok(0.5 * pv.dot(&(&g * &pv)))
    }
}

impl Hamiltonian for MechanicalHamiltonian {
    fn energy(&self, q: &[f64], p: &[f64]) -> Result<f64> {
        let e = self.kinetic_energy(q, p)? + self.potential.value(q);
        ensure_finite(&[e], "energy")?;
        Ok(e)
    }

    fn gradient(&self, q: &[f64], p: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        let g = self.cometric(q)?;
        let pv = DVector::from_column_slice(p);
        let dp = &g * &pv;
        let mut dq = DVector::from_vec(self.potential.gradient(q)?);
        for (j, dg) in self.cometric_jacobian(q).iter().enumerate() {
            dq[j] += 0.5 * pv.dot(&(dg * &pv));
        }
        ensure_finite(dq.as_slice(), "dH/dq")?;
        Ok((dq, dp))
    }
}

/// The bivector `Pi(x)` as an antisymmetric `(m+n) x (m+n)` matrix in `(q, p)` order.
pub fn poisson_bivector(alg: &ChartedAlgebroid, x: &PhasePoint) -> Result<DMatrix<f64>> {
    x.validate(alg)?;
    let (m, n) = (alg.base_dim(), alg.rank());
    let rho = alg.anchor(&x.q)?;
    let c = alg.structure(&x.q)?;
    let mut pi = DMatrix::zeros(m + n, m + n);
    for i in 0..m {
        for a in 0..n {
            pi[(i, m + a)] = rho[(i, a)];
            pi[(m + a, i)] = -rho[(i, a)];
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let v: f64 = -(0..n).map(|g| c.get(g, a, b) * x.p[g]).sum::<f64>();
            pi[(m + a, m + b)] = v;
            pi[(m + b, m + a)] = -v;
        }
    }
    Ok(pi)
}

/// `{F, G}(x) = dF . Pi(x) . dG`, summed so that swapping `F` and `G` negates the result exactly.
pub fn poisson_bracket(
    alg: &ChartedAlgebroid,
    f: &ScalarPhaseField,
    g: &ScalarPhaseField,
    x: &PhasePoint,
) -> Result<f64> {
    let pi = poisson_bivector(alg, x)?;
    let df = f.gradient(&x.q, &x.p);
    let dg = g.gradient(&x.q, &x.p);
    ensure_finite(&df, "bracket gradient")?;
    ensure_finite(&dg, "bracket gradient")?;
    let dim = x.dim();
    let mut acc = 0.0;
    for k in 0..dim {
        for l in (k + 1)..dim {
            let w = pi[(k, l)];
            if w != 0.0 {
                acc += w * (df[k] * dg[l] - df[l] * dg[k]);
            }
        }
    }
    Ok(acc)
}

/// `d Pi / d x^s` for every phase coordinate, in `(q, p)` order.
pub fn poisson_bivector_derivatives(
    alg: &ChartedAlgebroid,
    x: &PhasePoint,
) -> Result<Vec<DMatrix<f64>>> {
    x.validate(alg)?;
    let (m, n) = (alg.base_dim(), alg.rank());
    let drho = alg.anchor_jacobian(&x.q)?;
    let dc = alg.structure_jacobian(&x.q)?;
    let c = alg.structure(&x.q)?;
    let mut out = Vec::with_capacity(m + n);
    for k in 0..m {
        let mut d = DMatrix::zeros(m + n, m + n);
        for i in 0..m {
            for a in 0..n {
                d[(i, m + a)] = drho[k][(i, a)];
                d[(m + a, i)] = -drho[k][(i, a)];
            }
        }
        for a in 0..n {
            for b in (a + 1)..n {
                let v: f64 = -(0..n).map(|g| dc[k].get(g, a, b) * x.p[g]).sum::<f64>();
                d[(m + a, m + b)] = v;
                d[(m + b, m + a)] = -v;
            }
        }
        out.push(d);
    }
    for g in 0..n {
        let mut d = DMatrix::zeros(m + n, m + n);
        for a in 0..n {
            for b in (a + 1)..n {
                d[(m + a, m + b)] = -c.get(g, a, b);
                d[(m + b, m + a)] = c.get(g, a, b);
            }
        }
        out.push(d);
    }
    Ok(out)
}

fn bracket_gradient(
    alg: &ChartedAlgebroid,
    f: &ScalarPhaseField,
    g: &ScalarPhaseField,
    x: &PhasePoint,
) -> Result<Vec<f64>> {
    let (hf, hg) = match (f.hessian(&x.q, &x.p), g.hessian(&x.q, &x.p)) {
        (Some(hf), Some(hg)) => (hf, hg),
        _ => return Err(Error::Capability("bracket gradient needs hessians".into())),
    };
    let pi = poisson_bivector(alg, x)?;
    let dpi = poisson_bivector_derivatives(alg, x)?;
    let df = f.gradient(&x.q, &x.p);
    let dg = g.gradient(&x.q, &x.p);
    let dim = x.dim();
    let grad = (0..dim)
        .map(|s| {
            let mut acc = 0.0;
            for k in 0..dim {
                for l in (k + 1)..dim {
                    acc += dpi[s][(k, l)] * (df[k] * dg[l] - df[l] * dg[k]);
                    acc += pi[(k, l)]
                        * (hf[(k, s)] * dg[l] + df[k] * hg[(l, s)]
                            - hf[(l, s)] * dg[k]
                            - df[l] * hg[(k, s)]);
                }
            }
            acc
        })
        .collect();
    Ok(grad)
}

/// The bracket `{F, G}` as a phase field. Its gradient is exact when both fields carry
/// Hessians and the algebroid supplies analytic derivatives, and finite differences otherwise.
pub fn bracket_field(
    alg: &ChartedAlgebroid,
    f: &ScalarPhaseField,
    g: &ScalarPhaseField,
) -> ScalarPhaseField {
    let (alg, f, g) = (alg.clone(), f.clone(), g.clone());
    let value = {
        let (alg, f, g) = (alg.clone(), f.clone(), g.clone());
        move |q: &[f64], p: &[f64]| {
            poisson_bracket(&alg, &f, &g, &PhasePoint::new(q.to_vec(), p.to_vec()))
                .unwrap_or(f64::NAN)
        }
    };
    let exact = alg.derivative_source() == DerivativeSource::Analytic
        && f.has_analytic_hessian()
        && g.has_analytic_hessian();
    if !exact {
        return ScalarPhaseField::new(value);
    }
    ScalarPhaseField::with_gradient(value, move |q, p| {
        let dim = q.len() + p.len();
        bracket_gradient(&alg, &f, &g, &PhasePoint::new(q.to_vec(), p.to_vec()))
            .unwrap_or_else(|_| vec![f64::NAN; dim])
    })
}

fn vector_field_from_gradient(
    alg: &ChartedAlgebroid,
    x: &PhasePoint,
    dh_dq: &DVector<f64>,
    dh_dp: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (m, n) = (alg.base_dim(), alg.rank());
    let rho = alg.anchor(&x.q)?;
    let c = alg.structure(&x.q)?;
    let mut out = DVector::zeros(m + n);
    // dq^i/dt = dH/dp_a rho^i_a
    for i in 0..m {
        out[i] = (0..n).map(|a| rho[(i, a)] * dh_dp[a]).sum();
    }
    // dp_a/dt = -(dH/dq^i rho^i_a + dH/dp_b C^g_{ab} p_g)
    for a in 0..n {
        let mut v: f64 = (0..m).map(|i| dh_dq[i] * rho[(i, a)]).sum();
        for b in 0..n {
            if dh_dp[b] == 0.0 {
                continue;
            }
            let cp: f64 = (0..n).map(|g| c.get(g, a, b) * x.p[g]).sum();
            v += dh_dp[b] * cp;
        }
        out[m + a] = -v;
    }
    ensure_finite(out.as_slice(), "hamiltonian vector field")?;
    Ok(out)
}

/// Hamiltonian vector field `X_H = Pi . dH` in `(q, p)` order.
pub fn hamiltonian_vector_field(
    alg: &ChartedAlgebroid,
    h: &dyn Hamiltonian,
    x: &PhasePoint,
) -> Result<DVector<f64>> {
    x.validate(alg)?;
    let (dq, dp) = h.gradient(&x.q, &x.p)?;
    vector_field_from_gradient(alg, x, &dq, &dp)
}

/// Hamilton's equations for a mechanical Hamiltonian with analytic fibre derivatives.
pub fn mechanical_rhs(
    alg: &ChartedAlgebroid,
    mech: &MechanicalHamiltonian,
    x: &PhasePoint,
) -> Result<DVector<f64>> {
    x.validate(alg)?;
    let (dq, dp) = Hamiltonian::gradient(mech, &x.q, &x.p)?;
    vector_field_from_gradient(alg, x, &dq, &dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::{BaseChart, StructureTensor};

    fn so3() -> ChartedAlgebroid {
        let mut c = StructureTensor::zeros(3);
        c.set_bracket(2, 0, 1, 1.0);
        c.set_bracket(0, 1, 2, 1.0);
        c.set_bracket(1, 2, 0, 1.0);
        ChartedAlgebroid::lie_algebra(c).unwrap()
    }

    fn aff1() -> ChartedAlgebroid {
        let mut c = StructureTensor::zeros(2);
        c.set_bracket(1, 0, 1, 1.0);
        ChartedAlgebroid::lie_algebra(c).unwrap()
    }

    fn standard1() -> ChartedAlgebroid {
        ChartedAlgebroid::builder(BaseChart::unbounded(&["q"]), 1)
            .anchor(|_| DMatrix::identity(1, 1))
            .anchor_jacobian(|_| vec![DMatrix::zeros(1, 1)])
            .build()
            .unwrap()
    }

    fn linear(k: usize) -> ScalarPhaseField {
        ScalarPhaseField::with_gradient(
            move |q, p| q.iter().chain(p).nth(k).copied().unwrap(),
            move |q, p| {
                let mut g = vec![0.0; q.len() + p.len()];
                g[k] = 1.0;
                g
            },
        )
    }

    #[test]
    fn standard_bivector_is_canonical() {
        let pi = poisson_bivector(&standard1(), &PhasePoint::new(vec![0.7], vec![-2.0])).unwrap();
        assert_eq!(pi, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
    }

    #[test]
    fn so3_bivector_and_bracket() {
        let alg = so3();
        let x = PhasePoint::new(vec![], vec![0.0, 0.0, 1.0]);
        let pi = poisson_bivector(&alg, &x).unwrap();
        assert_eq!(pi[(0, 1)], -1.0);
        assert_eq!(pi[(1, 0)], 1.0);
        assert_eq!(pi[(0, 2)], 0.0);
        assert_eq!(pi[(1, 2)], 0.0);
        let y = PhasePoint::new(vec![], vec![0.3, -1.2, 2.5]);
        assert_eq!(
            poisson_bracket(&alg, &linear(0), &linear(1), &y).unwrap(),
            -2.5
        );
        let zero = poisson_bivector(&alg, &PhasePoint::new(vec![], vec![0.0; 3])).unwrap();
        assert_eq!(zero.amax(), 0.0);
    }

    #[test]
    fn harmonic_oscillator_vector_field() {
        let h = MechanicalHamiltonian::constant(
            DMatrix::identity(1, 1),
            BaseField::with_gradient(|q| 0.5 * q[0] * q[0], |q| vec![q[0]]),
        );
        let v = mechanical_rhs(&standard1(), &h, &PhasePoint::new(vec![0.0], vec![2.0])).unwrap();
        assert_eq!(v.as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn euler_top_principal_axis_is_stationary() {
        let h = MechanicalHamiltonian::kinetic(DMatrix::from_diagonal(&DVector::from_vec(vec![
            1.0,
            0.5,
            1.0 / 3.0,
        ])));
        let v = mechanical_rhs(&so3(), &h, &PhasePoint::new(vec![], vec![0.0, 0.0, 1.0])).unwrap();
        assert_eq!(v.amax(), 0.0);
    }

    #[test]
    fn aff1_lie_poisson_equations() {
        let h = MechanicalHamiltonian::kinetic(DMatrix::identity(2, 2));
        let v = mechanical_rhs(&aff1(), &h, &PhasePoint::new(vec![], vec![1.0, 2.0])).unwrap();
        assert_eq!(v.as_slice(), &[-4.0, 2.0]);
    }

    #[test]
    fn non_spd_cometric_is_a_model_error() {
        let h =
            MechanicalHamiltonian::kinetic(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]));
        let r = mechanical_rhs(&aff1(), &h, &PhasePoint::new(vec![], vec![1.0, 1.0]));
        assert!(matches!(r, Err(Error::Model(_))));
        let asym =
            MechanicalHamiltonian::kinetic(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]));
        assert!(asym.cometric(&[]).is_err());
    }

    #[test]
    fn energy_is_bounded_below_by_potential() {
        let h = MechanicalHamiltonian::constant(
            DMatrix::identity(1, 1),
            BaseField::with_gradient(|q| q[0].cos(), |q| vec![-q[0].sin()]),
        );
        assert_eq!(h.energy(&[0.3], &[0.0]).unwrap(), 0.3f64.cos());
        assert!(h.energy(&[0.3], &[1e-3]).unwrap() > 0.3f64.cos());
    }

    #[test]
    fn bracket_of_field_with_itself_is_zero() {
        let alg = so3();
        let f = ScalarPhaseField::new(|_, p| p[0] * p[1].sin() + p[2].exp());
        let x = PhasePoint::new(vec![], vec![0.2, 0.9, -0.4]);
        assert_eq!(poisson_bracket(&alg, &f, &f, &x).unwrap(), 0.0);
    }

    #[test]
    fn wrong_momentum_count_is_rejected() {
        assert!(matches!(
            poisson_bivector(&so3(), &PhasePoint::new(vec![], vec![1.0])),
            Err(Error::Dimension(_))
        ));
    }
}
