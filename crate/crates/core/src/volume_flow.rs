//! Volume behaviour of Hamiltonian flows.
//!
//! For a volume `Phi = exp(s) dq dp` with `s = sigma~ + sigma_nu + lambda`, the
//! divergence of `X_H` is `sum_k dX^k/dx^k + X_H(s)`. The flow preserves `Phi`
//! exactly when this vanishes; along a trajectory `log det(dphi_t/dx) + s(x_t) - s(x_0)`
//! records the accumulated change of `Phi`-volume.

use crate::algebroid::{ChartedAlgebroid, DerivativeSource};
use crate::error::{ensure_finite, Error, Result};
use crate::fd;
use crate::fields::BaseField;
use crate::integrate::rk4_step;
use crate::modular::{metric_fiber_density, modular_section, PhaseDensity, VolumeSpec};
use crate::poisson::{hamiltonian_vector_field, Hamiltonian, MechanicalHamiltonian, PhasePoint};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Divergence of `X_H` at a point, split into its two contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub point: PhasePoint,
    pub divergence: f64,
    /// `sum_k dX^k / dx^k`
    pub coordinate_divergence: f64,
    /// `X_H(s)`
    pub density_advection: f64,
}

/// Volume change accumulated along one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeDriftReport {
    pub t_final: f64,
    /// `log det Y(T)` for the variational matrix `Y`.
    pub log_det_jacobian: f64,
    /// Quadrature of the coordinate divergence along the same discrete trajectory.
    pub integrated_divergence: f64,
    /// `|log_det_jacobian - integrated_divergence|`
    pub discrepancy: f64,
    /// `log_det_jacobian + s(x_T) - s(x_0)`; zero when the flow preserves `Phi`.
    pub volume_log_change: f64,
}

/// Which Hamiltonian drives the flow; mechanical ones get analytic divergences.
#[derive(Clone, Copy)]
pub enum FlowHamiltonian<'a> {
    Mechanical(&'a MechanicalHamiltonian),
    General(&'a dyn Hamiltonian),
}

impl<'a> FlowHamiltonian<'a> {
    pub fn as_dyn(&self) -> &'a dyn Hamiltonian {
        match *self {
            FlowHamiltonian::Mechanical(m) => m,
            FlowHamiltonian::General(h) => h,
        }
    }
}

impl<'a> From<&'a MechanicalHamiltonian> for FlowHamiltonian<'a> {
    fn from(m: &'a MechanicalHamiltonian) -> Self {
        FlowHamiltonian::Mechanical(m)
    }
}

impl<'a> From<&'a crate::fields::ScalarPhaseField> for FlowHamiltonian<'a> {
    fn from(f: &'a crate::fields::ScalarPhaseField) -> Self {
        FlowHamiltonian::General(f)
    }
}

fn flat_vector_field(alg: &ChartedAlgebroid, h: &dyn Hamiltonian, x: &[f64]) -> Vec<f64> {
    let point = PhasePoint::from_flat(x, alg.base_dim());
    match hamiltonian_vector_field(alg, h, &point) {
        Ok(v) => v.as_slice().to_vec(),
        Err(_) => vec![f64::NAN; x.len()],
    }
}

/// Central-difference Jacobian of `X_H` in `(q, p)` coordinates.
pub fn vector_field_jacobian(
    alg: &ChartedAlgebroid,
    h: &dyn Hamiltonian,
    x: &PhasePoint,
) -> Result<DMatrix<f64>> {
    x.validate(alg)?;
    let flat = x.to_flat();
    let rows = fd::jacobian(|y| flat_vector_field(alg, h, y), &flat);
    let dim = flat.len();
    let jac = DMatrix::from_fn(dim, dim, |r, c| rows[r][c]);
    ensure_finite(jac.as_slice(), "vector field jacobian")?;
    Ok(jac)
}

/// `sum_k dX^k/dx^k` for a mechanical Hamiltonian, differentiated term by term.
fn mechanical_coordinate_divergence(
    alg: &ChartedAlgebroid,
    mech: &MechanicalHamiltonian,
    x: &PhasePoint,
) -> Result<f64> {
    let (m, n) = (alg.base_dim(), alg.rank());
    let g = mech.cometric(&x.q)?;
    let p = DVector::from_column_slice(&x.p);
    let v = &g * &p;
    let rho = alg.anchor(&x.q)?;
    let drho = alg.anchor_jacobian(&x.q)?;
    let c = alg.structure(&x.q)?;
    let dg_p: Vec<DVector<f64>> = mech
        .cometric_jacobian(&x.q)
        .iter()
        .map(|d| d * &p)
        .collect();

    // d(qdot^i)/dq^i with qdot^i = rho^i_a (G p)_a
    let mut div_q = 0.0;
    for i in 0..m {
        for a in 0..n {
            div_q += drho[i][(i, a)] * v[a] + rho[(i, a)] * dg_p[i][a];
        }
    }
    // d(pdot_a)/dp_a with pdot_a = -(dH/dq^i rho^i_a + (G p)_b C^g_{ab} p_g)
    let mut div_p = 0.0;
    for a in 0..n {
        let mut t = 0.0;
        for i in 0..m {
            t += dg_p[i][a] * rho[(i, a)];
        }
        for b in 0..n {
            let cp: f64 = (0..n).map(|gm| c.get(gm, a, b) * p[gm]).sum();
            t += g[(b, a)] * cp + v[b] * c.get(a, a, b);
        }
        div_p -= t;
    }
    Ok(div_q + div_p)
}

/// Coordinate divergence `sum_k dX^k/dx^k` (analytic for mechanical Hamiltonians on
/// algebroids with analytic derivatives, central differences otherwise).
pub fn coordinate_divergence(
    alg: &ChartedAlgebroid,
    h: FlowHamiltonian<'_>,
    x: &PhasePoint,
) -> Result<f64> {
    match h {
        FlowHamiltonian::Mechanical(mech)
            if alg.derivative_source() == DerivativeSource::Analytic =>
        {
            x.validate(alg)?;
            mechanical_coordinate_divergence(alg, mech, x)
        }
        other => Ok(vector_field_jacobian(alg, other.as_dyn(), x)?.trace()),
    }
}

/// Total log-density `s = sigma~ + sigma_nu + lambda` at `x`.
pub fn phase_log_density(vol: &VolumeSpec, density: &PhaseDensity, x: &PhasePoint) -> f64 {
    density.value(&x.q, &x.p) + vol.log_density(&x.q)
}

/// Divergence of `X_H` with respect to `exp(sigma~) nu ^ Lambda`.
pub fn divergence(
    alg: &ChartedAlgebroid,
    h: FlowHamiltonian<'_>,
    vol: &VolumeSpec,
    density: &PhaseDensity,
    x: &PhasePoint,
) -> Result<DivergenceReport> {
    x.validate(alg)?;
    let total = phase_log_density(vol, density, x);
    ensure_finite(&[total], "phase-space density")?;
    let m = alg.base_dim();
    let field = hamiltonian_vector_field(alg, h.as_dyn(), x)?;
    let coord = coordinate_divergence(alg, h, x)?;
    let mut grad_s = density.sigma_tilde.gradient(&x.q, &x.p);
    for (k, d) in vol
        .log_density_gradient(&x.q)?
        .into_iter()
        .enumerate()
        .take(m)
    {
        grad_s[k] += d;
    }
    ensure_finite(&grad_s, "density gradient")?;
    let advection: f64 = field.iter().zip(&grad_s).map(|(a, b)| a * b).sum();
    Ok(DivergenceReport {
        point: x.clone(),
        divergence: coord + advection,
        coordinate_divergence: coord,
        density_advection: advection,
    })
}

/// Vertical lift of the modular section: zeros in the `q` slots, `M_a(q)` in the `p` slots.
pub fn modular_vector_field_value(
    alg: &ChartedAlgebroid,
    vol: &VolumeSpec,
    x: &PhasePoint,
) -> Result<DVector<f64>> {
    x.validate(alg)?;
    let m = alg.base_dim();
    let section = modular_section(alg, vol, &x.q)?;
    let mut out = DVector::zeros(x.dim());
    out.rows_mut(m, alg.rank()).copy_from(&section.components);
    Ok(out)
}

/// Fibre derivative `d sigma~ / dp_a` at `x`.
pub fn vertical_derivative(density: &PhaseDensity, x: &PhasePoint) -> Result<DVector<f64>> {
    let g = density.sigma_tilde.gradient(&x.q, &x.p);
    ensure_finite(&g, "vertical derivative")?;
    Ok(DVector::from_column_slice(&g[x.q.len()..]))
}

/// Tolerance for `sigma~(q, 0) = sigma(q)` in [`zero_section_obstruction`].
pub const ZERO_SECTION_CONSISTENCY_TOL: f64 = 1e-8;

/// Residual of the zero-section identity that any preserved `exp(sigma~) nu ^ Lambda^G` obeys:
///
/// ```text
/// R_mu = G^{mu a} M_a - dV/dq^i rho^i_a (d^2 sigma~ / dp_a dp_mu)|_{p=0}
/// ```
///
/// where `M` is the modular section for `(exp(sigma) nu, Lambda^G)`. A non-zero value
/// rules out preservation; zero is necessary but not sufficient.
pub fn zero_section_obstruction(
    alg: &ChartedAlgebroid,
    mech: &MechanicalHamiltonian,
    vol: &VolumeSpec,
    density: &PhaseDensity,
    cert_sigma: &BaseField,
    q: &[f64],
) -> Result<DVector<f64>> {
    alg.chart().check(q)?;
    let n = alg.rank();
    let on_zero = density.sigma_at_zero(q, n);
    let claimed = cert_sigma.value(q);
    if (on_zero - claimed).abs() > ZERO_SECTION_CONSISTENCY_TOL {
        return Err(Error::Precondition(format!(
            "sigma~ on the zero section ({on_zero}) differs from sigma ({claimed}) at {q:?}"
        )));
    }
    let shifted = VolumeSpec::new(
        vol.base_log_density.plus(cert_sigma),
        metric_fiber_density(mech),
    );
    let section = modular_section(alg, &shifted, q)?.components;
    let g = mech.cometric(q)?;
    let d_v = alg
        .differential_of_function(mech.potential(), q)?
        .components;
    let hess = density.fiber_hessian_at_zero(q, n);
    let out = &g * section - hess.transpose() * d_v;
    ensure_finite(out.as_slice(), "zero-section obstruction")?;
    Ok(out)
}

/// Integrates `x' = X_H(x)`, `Y' = DX_H(x) Y`, `I' = div(x)` in lock-step RK4 from
/// `Y(0) = I` and reports `log det Y(T)` against the integrated coordinate divergence.
///
/// With `volume` given, `volume_log_change` adds `s(x_T) - s(x_0)` for that density.
pub fn jacobian_log_det(
    alg: &ChartedAlgebroid,
    h: FlowHamiltonian<'_>,
    x0: &PhasePoint,
    t_final: f64,
    dt: f64,
    volume: Option<(&VolumeSpec, &PhaseDensity)>,
) -> Result<VolumeDriftReport> {
    x0.validate(alg)?;
    if !(t_final >= 0.0) || !(dt > 0.0) {
        return Err(Error::Precondition(format!(
            "need t_final >= 0 and dt > 0 (got {t_final}, {dt})"
        )));
    }
    let m = alg.base_dim();
    let dim = x0.dim();
    let steps = if t_final == 0.0 {
        0
    } else {
        (t_final / dt - 1e-9).ceil().max(1.0) as usize
    };
    let h_step = if steps == 0 {
        0.0
    } else {
        t_final / steps as f64
    };

    let mut z = DVector::zeros(dim + dim * dim + 1);
    z.rows_mut(0, dim).copy_from_slice(&x0.to_flat());
    for k in 0..dim {
        z[dim + k * dim + k] = 1.0;
    }

    let rhs = |z: &DVector<f64>| -> Result<DVector<f64>> {
        let x = PhasePoint::from_flat(&z.as_slice()[..dim], m);
        let field = hamiltonian_vector_field(alg, h.as_dyn(), &x)?;
        let jac = vector_field_jacobian(alg, h.as_dyn(), &x)?;
        let div = coordinate_divergence(alg, h, &x)?;
        let y = DMatrix::from_column_slice(dim, dim, &z.as_slice()[dim..dim + dim * dim]);
        let dy = jac * y;
        let mut out = DVector::zeros(z.len());
        out.rows_mut(0, dim).copy_from(&field);
        out.rows_mut(dim, dim * dim).copy_from_slice(dy.as_slice());
        out[dim + dim * dim] = div;
        Ok(out)
    };

    for step in 0..steps {
        let t_next = (step + 1) as f64 * h_step;
        z = match rk4_step(rhs, &z, h_step) {
            Ok(next) => next,
            Err(Error::OutOfChart { .. }) => return Err(Error::Escape { time: t_next }),
            Err(e) => return Err(e),
        };
        if !alg.chart().contains(&z.as_slice()[..m]) {
            return Err(Error::Escape { time: t_next });
        }
    }

    let y = DMatrix::from_column_slice(dim, dim, &z.as_slice()[dim..dim + dim * dim]);
    let det = y.lu().determinant();
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::Numeric(format!(
            "variational determinant is {det}, expected positive"
        )));
    }
    let log_det = det.ln();
    let integrated = z[dim + dim * dim];
    let x_final = PhasePoint::from_flat(&z.as_slice()[..dim], m);
    let density_change = match volume {
        Some((vol, density)) => {
            phase_log_density(vol, density, &x_final) - phase_log_density(vol, density, x0)
        }
        None => 0.0,
    };
    Ok(VolumeDriftReport {
        t_final,
        log_det_jacobian: log_det,
        integrated_divergence: integrated,
        discrepancy: (log_det - integrated).abs(),
        volume_log_change: log_det + density_change,
    })
}
