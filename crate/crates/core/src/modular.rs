//! Modular sections, characters and unimodularity certificates.
//!
//! Volumes are carried as log-densities in the chart: the base volume is
//! `nu = exp(sigma_nu) dq^1 ^ ... ^ dq^m` and the fibre multivector is
//! `Lambda = exp(lambda) e_1 ^ ... ^ e_n`. In these terms the modular section is
//!
//! ```text
//! M_a = C^b_{ab} + d rho^i_a / d q^i + rho^i_a d(sigma_nu + lambda) / d q^i
//! ```
//!
//! and the algebroid is unimodular when `M = -d^A sigma` for some base function `sigma`.

use crate::algebroid::{AlgebroidCovector, ChartedAlgebroid, CovectorField, DerivativeSource};
use crate::error::{ensure_finite, Error, Result};
use crate::fields::{BaseField, ScalarPhaseField};
use crate::poisson::MechanicalHamiltonian;
use crate::sampling::{self, SampleBox};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::fmt;
use std::sync::Arc;

/// Log-densities of the base volume and the fibre multivector.
#[derive(Debug, Clone)]
pub struct VolumeSpec {
    pub base_log_density: BaseField,
    pub fiber_log_density: BaseField,
}

impl VolumeSpec {
    pub fn new(base_log_density: BaseField, fiber_log_density: BaseField) -> Self {
        Self {
            base_log_density,
            fiber_log_density,
        }
    }

    /// Coordinate Lebesgue measure `dq dp`.
    pub fn lebesgue() -> Self {
        Self::new(BaseField::zero(), BaseField::zero())
    }

    /// `sigma_nu(q) + lambda(q)`.
    pub fn log_density(&self, q: &[f64]) -> f64 {
        self.base_log_density.value(q) + self.fiber_log_density.value(q)
    }

    /// Gradient of `sigma_nu + lambda`.
    pub fn log_density_gradient(&self, q: &[f64]) -> Result<Vec<f64>> {
        if q.is_empty() {
            return Ok(Vec::new());
        }
        let a = self.base_log_density.gradient(q)?;
        let b = self.fiber_log_density.gradient(q)?;
        Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect())
    }

    /// Volume with the fibre density shifted by `mu`.
    pub fn with_fiber_shift(&self, mu: &BaseField) -> Self {
        Self::new(
            self.base_log_density.clone(),
            self.fiber_log_density.plus(mu),
        )
    }

    /// Volume with the base density shifted by `sigma` (i.e. `exp(sigma) nu`).
    pub fn with_base_shift(&self, sigma: &BaseField) -> Self {
        Self::new(
            self.base_log_density.plus(sigma),
            self.fiber_log_density.clone(),
        )
    }

    fn is_analytic(&self) -> bool {
        self.base_log_density.has_analytic_gradient()
            && self.fiber_log_density.has_analytic_gradient()
    }
}

type HessianFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Phase-space log-density factor `sigma~(q, p)` of a volume `exp(sigma~) nu ^ Lambda`.
#[derive(Clone)]
pub struct PhaseDensity {
    pub sigma_tilde: ScalarPhaseField,
    fiber_hessian: Option<HessianFn>,
}

impl fmt::Debug for PhaseDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseDensity")
            .field("sigma_tilde", &self.sigma_tilde)
            .field("analytic_fiber_hessian", &self.fiber_hessian.is_some())
            .finish()
    }
}

/// Finite-difference step in `p` for the fibre Hessian at the zero section.
pub const FIBER_HESSIAN_STEP: f64 = 1e-4;

impl PhaseDensity {
    pub fn new(sigma_tilde: ScalarPhaseField) -> Self {
        Self {
            sigma_tilde,
            fiber_hessian: None,
        }
    }

    /// Supplies `d^2 sigma~ / dp_a dp_b` at `p = 0` analytically.
    pub fn with_fiber_hessian(
        mut self,
        hessian: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.fiber_hessian = Some(Arc::new(hessian));
        self
    }

    /// `sigma~ = sigma o tau`, which has zero fibre Hessian.
    pub fn basic(sigma: BaseField, rank: usize) -> Self {
        Self::new(ScalarPhaseField::basic(sigma))
            .with_fiber_hessian(move |_| DMatrix::zeros(rank, rank))
    }

    pub fn zero(rank: usize) -> Self {
        Self::basic(BaseField::zero(), rank)
    }

    pub fn value(&self, q: &[f64], p: &[f64]) -> f64 {
        self.sigma_tilde.value(q, p)
    }

    /// `sigma(q) = sigma~(q, 0)`.
    pub fn sigma_at_zero(&self, q: &[f64], rank: usize) -> f64 {
        self.sigma_tilde.value(q, &vec![0.0; rank])
    }

    /// `d^2 sigma~ / dp_a dp_b` on the zero section over `q`.
    pub fn fiber_hessian_at_zero(&self, q: &[f64], rank: usize) -> DMatrix<f64> {
        if let Some(h) = &self.fiber_hessian {
            return h(q);
        }
        let h = FIBER_HESSIAN_STEP;
        let m = q.len();
        let mut out = DMatrix::zeros(rank, rank);
        if self.sigma_tilde.has_analytic_gradient() {
            for b in 0..rank {
                let mut p = vec![0.0; rank];
                p[b] = h;
                let plus = self.sigma_tilde.gradient(q, &p);
                p[b] = -h;
                let minus = self.sigma_tilde.gradient(q, &p);
                for a in 0..rank {
                    out[(a, b)] = (plus[m + a] - minus[m + a]) / (2.0 * h);
                }
            }
            return (&out + out.transpose()) * 0.5;
        }
        let f = |p: &[f64]| self.sigma_tilde.value(q, p);
        let mut p = vec![0.0; rank];
        let f0 = f(&p);
        for a in 0..rank {
            p[a] = h;
            let fp = f(&p);
            p[a] = -h;
            let fm = f(&p);
            p[a] = 0.0;
            out[(a, a)] = (fp - 2.0 * f0 + fm) / (h * h);
            for b in (a + 1)..rank {
                let mut corner = |sa: f64, sb: f64| {
                    p[a] = sa * h;
                    p[b] = sb * h;
                    let v = f(&p);
                    p[a] = 0.0;
                    p[b] = 0.0;
                    v
                };
                let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0)
                    + corner(-1.0, -1.0))
                    / (4.0 * h * h);
                out[(a, b)] = v;
                out[(b, a)] = v;
            }
        }
        out
    }
}

/// A candidate function `sigma` with `M = -d^A sigma`.
#[derive(Debug, Clone)]
pub struct UnimodularityCertificate {
    pub sigma: BaseField,
    pub claimed: bool,
}

impl UnimodularityCertificate {
    pub fn new(sigma: BaseField) -> Self {
        Self {
            sigma,
            claimed: true,
        }
    }
}

/// `lambda(q) = 1/2 log det G(q)`: the log-density of the metric volume `Lambda^G`.
pub fn metric_lambda_log_density(mech: &MechanicalHamiltonian, q: &[f64]) -> Result<f64> {
    let g = mech.cometric(q)?;
    let chol = g
        .cholesky()
        .ok_or_else(|| Error::Model("cometric is not positive-definite".into()))?;
    let l = chol.l();
    Ok((0..l.nrows()).map(|i| l[(i, i)].ln()).sum())
}

/// `lambda^G` as a base field with gradient `1/2 tr(G^-1 dG/dq^j)`.
pub fn metric_fiber_density(mech: &MechanicalHamiltonian) -> BaseField {
    let (v, g) = (mech.clone(), mech.clone());
    BaseField::with_gradient(
        move |q| metric_lambda_log_density(&v, q).unwrap_or(f64::NAN),
        move |q| {
            let Ok(gm) = g.cometric(q) else {
                return vec![f64::NAN; q.len()];
            };
            let Some(inv) = gm.try_inverse() else {
                return vec![f64::NAN; q.len()];
            };
            g.cometric_jacobian(q)
                .iter()
                .map(|dg| 0.5 * (&inv * dg).trace())
                .collect()
        },
    )
}

/// Modular section of `alg` with respect to `vol`, at `q`.
pub fn modular_section(
    alg: &ChartedAlgebroid,
    vol: &VolumeSpec,
    q: &[f64],
) -> Result<AlgebroidCovector> {
    let n = alg.rank();
    let c = alg.structure(q)?;
    let mut components = DVector::from_fn(n, |a, _| c.ad_trace(a));
    if alg.base_dim() > 0 {
        components += alg.anchor_divergence(q)?;
        let rho = alg.anchor(q)?;
        let grad = DVector::from_vec(vol.log_density_gradient(q)?);
        components += rho.transpose() * grad;
    }
    ensure_finite(components.as_slice(), "modular section")?;
    Ok(AlgebroidCovector {
        base_point: q.to_vec(),
        components,
    })
}

/// The modular section as a covector field (for applying `d^A`).
pub fn modular_section_field(alg: &ChartedAlgebroid, vol: &VolumeSpec) -> CovectorField {
    let (alg, vol) = (alg.clone(), vol.clone());
    let n = alg.rank();
    CovectorField::new(move |q| {
        // Finite-difference probes may step outside an open chart boundary.
        modular_section_unchecked(&alg, &vol, q)
            .unwrap_or_else(|_| DVector::from_element(n, f64::NAN))
    })
}

fn modular_section_unchecked(
    alg: &ChartedAlgebroid,
    vol: &VolumeSpec,
    q: &[f64],
) -> Result<DVector<f64>> {
    modular_section(alg, vol, q).map(|m| m.components)
}

/// Trace of the adjoint representation, for algebroids over a point.
pub fn modular_character(alg: &ChartedAlgebroid) -> Result<DVector<f64>> {
    if alg.base_dim() != 0 {
        return Err(Error::Precondition(
            "modular character needs a zero-dimensional base; use modular_section".into(),
        ));
    }
    let c = alg.structure(&[])?;
    Ok(DVector::from_fn(alg.rank(), |a, _| c.ad_trace(a)))
}

/// `d^A M` at `q`; vanishes for every valid algebroid.
pub fn modular_cocycle_residual(
    alg: &ChartedAlgebroid,
    vol: &VolumeSpec,
    q: &[f64],
) -> Result<DMatrix<f64>> {
    alg.chart().check(q)?;
    alg.differential_of_section(&modular_section_field(alg, vol), q)
}

/// `M + d^A sigma`; identically zero iff `sigma` certifies unimodularity for `vol`.
pub fn unimodularity_residual(
    alg: &ChartedAlgebroid,
    vol: &VolumeSpec,
    cert: &UnimodularityCertificate,
    q: &[f64],
) -> Result<AlgebroidCovector> {
    let mut m = modular_section(alg, vol, q)?;
    let d_sigma = alg.differential_of_function(&cert.sigma, q)?;
    m.components += d_sigma.components;
    Ok(m)
}

/// Thresholds for certificate verification on sampled points.
pub const CERTIFICATE_TOL_ANALYTIC: f64 = 1e-6;
pub const CERTIFICATE_TOL_FINITE_DIFF: f64 = 1e-4;
/// Uniform random points added to the Halton grid.
pub const CERTIFICATE_RANDOM_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub max_residual: f64,
    pub points: usize,
    pub threshold: f64,
    pub verified: bool,
}

/// Checks `M + d^A sigma = 0` on the verification grid of `sample_box`.
///
/// For a zero-dimensional base the check reduces to the modular character and is exact.
pub fn verify_certificate(
    alg: &ChartedAlgebroid,
    vol: &VolumeSpec,
    cert: &UnimodularityCertificate,
    sample_box: &SampleBox,
    seed: u64,
) -> Result<CertificateReport> {
    let analytic = alg.derivative_source() == DerivativeSource::Analytic
        && vol.is_analytic()
        && cert.sigma.has_analytic_gradient();
    let threshold = if analytic {
        CERTIFICATE_TOL_ANALYTIC
    } else {
        CERTIFICATE_TOL_FINITE_DIFF
    };
    if alg.base_dim() == 0 {
        let max_residual = modular_character(alg)?.amax();
        return Ok(CertificateReport {
            max_residual,
            points: 1,
            threshold,
            verified: max_residual <= threshold,
        });
    }
    let points =
        sample_box.verification_points(CERTIFICATE_RANDOM_POINTS, &mut sampling::rng(seed));
    let residuals: Vec<f64> = points
        .par_iter()
        .map(|q| unimodularity_residual(alg, vol, cert, q).map(|r| r.max_abs()))
        .collect::<Result<_>>()?;
    let max_residual = residuals.into_iter().fold(0.0, f64::max);
    Ok(CertificateReport {
        max_residual,
        points: points.len(),
        threshold,
        verified: max_residual <= threshold,
    })
}
