//! Built-in example systems.
//!
//! Each builder returns a [`ModelBundle`]: an algebroid, a mechanical Hamiltonian, a
//! base/fibre volume, an optional unimodularity certificate and the properties the
//! system is expected to have. Builders check the structure equations on a sample grid
//! before returning.
//!
//! | name | base | rank | notes |
//! |---|---|---|---|
//! | `harmonic-oscillator` | `R` | 1 | `TQ`, `V = q^2/2` |
//! | `free-particle` | `R^2` | 2 | `TQ`, `V = 0` |
//! | `so3`, `se2`, `aff1`, `heisenberg` | point | 3, 3, 2, 3 | Lie-Poisson systems |
//! | `heavy-top` | `S^2` chart `(theta, phi)` | 3 | action algebroid `so(3) x S^2` |
//! | `beanie` | `S^1` chart `theta` | 4 | Atiyah algebroid `se(2) x TS^1` |
//! | `atiyah-so3`, `atiyah-aff1` | `R` | 4, 3 | trivial Atiyah `g x TR` |

mod file;

pub use file::{load_model_file, parse_model_file};

use crate::algebroid::{BaseChart, ChartedAlgebroid, StructureTensor};
use crate::error::{Error, Result};
use crate::fields::{BaseField, ScalarPhaseField};
use crate::modular::{
    metric_fiber_density, modular_character, verify_certificate, CertificateReport, PhaseDensity,
    UnimodularityCertificate, VolumeSpec,
};
use crate::poisson::{MechanicalHamiltonian, PhasePoint};
use crate::sampling::{self, SampleBox, SampleRng};
use nalgebra::{DMatrix, DVector};
use std::collections::BTreeMap;

/// Residual bound enforced on every built-in bundle.
pub const STRUCTURE_TOL: f64 = 1e-8;
/// Uniform random points added to the Halton grid when validating structure.
pub const VALIDATION_RANDOM_POINTS: usize = 100;

pub const BUILTIN_NAMES: [&str; 10] = [
    "harmonic-oscillator",
    "free-particle",
    "so3",
    "se2",
    "aff1",
    "heisenberg",
    "heavy-top",
    "beanie",
    "atiyah-so3",
    "atiyah-aff1",
];

#[derive(Debug, Clone)]
pub struct Casimir {
    pub name: String,
    pub field: ScalarPhaseField,
}

#[derive(Debug, Clone, Default)]
pub struct ExpectedProperties {
    /// `None` when nothing is known (file models without a certificate).
    pub unimodular: Option<bool>,
    pub casimirs: Vec<Casimir>,
}

/// Where to draw test points: a box in the chart and a box of initial conditions whose
/// trajectories stay inside the chart for `T <= 20`.
#[derive(Debug, Clone)]
pub struct SamplingHints {
    pub base: SampleBox,
    pub momentum: SampleBox,
    pub initial_conditions: SampleBox,
}

impl SamplingHints {
    fn new(base: SampleBox, momentum_half_width: f64, rank: usize) -> Self {
        let momentum = SampleBox::cube(rank, momentum_half_width);
        let mut initial = base.bounds.clone();
        initial.extend(momentum.bounds.iter().copied());
        SamplingHints {
            base,
            momentum,
            initial_conditions: SampleBox::new(initial),
        }
    }

    fn with_initial_conditions(mut self, initial: SampleBox) -> Self {
        self.initial_conditions = initial;
        self
    }

    pub fn phase_point(&self, rng: &mut SampleRng) -> PhasePoint {
        PhasePoint::new(self.base.uniform(rng), self.momentum.uniform(rng))
    }

    pub fn initial_condition(&self, rng: &mut SampleRng) -> PhasePoint {
        PhasePoint::from_flat(&self.initial_conditions.uniform(rng), self.base.dim())
    }
}

#[derive(Debug, Clone)]
pub struct ModelBundle {
    pub name: String,
    pub description: String,
    pub algebroid: ChartedAlgebroid,
    pub hamiltonian: MechanicalHamiltonian,
    /// `(sigma_nu, lambda)`; built-ins use `lambda = lambda^G`.
    pub volume: VolumeSpec,
    pub certificate: Option<UnimodularityCertificate>,
    pub params: BTreeMap<String, f64>,
    pub expected: ExpectedProperties,
    pub sampling: SamplingHints,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureReport {
    pub max_anchor_residual: f64,
    pub max_jacobi_residual: f64,
    pub grid_size: usize,
}

impl StructureReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_anchor_residual < tol && self.max_jacobi_residual < tol
    }
}

impl ModelBundle {
    /// Assembles a bundle without checking the structure equations.
    #[allow(clippy::too_many_arguments)]
    pub fn unchecked(
        name: impl Into<String>,
        description: impl Into<String>,
        algebroid: ChartedAlgebroid,
        hamiltonian: MechanicalHamiltonian,
        volume: VolumeSpec,
        certificate: Option<UnimodularityCertificate>,
        params: BTreeMap<String, f64>,
        expected: ExpectedProperties,
        sampling: SamplingHints,
    ) -> Self {
        ModelBundle {
            name: name.into(),
            description: description.into(),
            algebroid,
            hamiltonian,
            volume,
            certificate,
            params,
            expected,
            sampling,
        }
    }

    /// Like [`ModelBundle::unchecked`], then rejects bundles failing [`STRUCTURE_TOL`].
    #[allow(clippy::too_many_arguments)]
    pub fn checked(
        name: impl Into<String>,
        description: impl Into<String>,
        algebroid: ChartedAlgebroid,
        hamiltonian: MechanicalHamiltonian,
        volume: VolumeSpec,
        certificate: Option<UnimodularityCertificate>,
        params: BTreeMap<String, f64>,
        expected: ExpectedProperties,
        sampling: SamplingHints,
    ) -> Result<Self> {
        let bundle = Self::unchecked(
            name,
            description,
            algebroid,
            hamiltonian,
            volume,
            certificate,
            params,
            expected,
            sampling,
        );
        let report = bundle.structure_report(0)?;
        if !report.passes(STRUCTURE_TOL) {
            return Err(Error::Model(format!(
                "{}: structure residuals {:e} (anchor), {:e} (jacobi) exceed {STRUCTURE_TOL:e}",
                bundle.name, report.max_anchor_residual, report.max_jacobi_residual
            )));
        }
        for q in bundle.validation_points(0) {
            bundle.hamiltonian.cometric(&q)?;
        }
        Ok(bundle)
    }

    pub fn base_dim(&self) -> usize {
        self.algebroid.base_dim()
    }

    pub fn rank(&self) -> usize {
        self.algebroid.rank()
    }

    /// Halton grid plus [`VALIDATION_RANDOM_POINTS`] seeded uniform points in the base box.
    pub fn validation_points(&self, seed: u64) -> Vec<Vec<f64>> {
        if self.base_dim() == 0 {
            return vec![Vec::new()];
        }
        self.sampling
            .base
            .verification_points(VALIDATION_RANDOM_POINTS, &mut sampling::rng(seed))
    }

    pub fn structure_report(&self, seed: u64) -> Result<StructureReport> {
        let points = self.validation_points(seed);
        let (anchor, jacobi) = self.algebroid.structure_residuals(&points)?;
        Ok(StructureReport {
            max_anchor_residual: anchor,
            max_jacobi_residual: jacobi,
            grid_size: points.len(),
        })
    }

    pub fn verify_certificate(&self, seed: u64) -> Result<Option<CertificateReport>> {
        self.certificate
            .as_ref()
            .map(|cert| {
                verify_certificate(
                    &self.algebroid,
                    &self.volume,
                    cert,
                    &self.sampling.base,
                    seed,
                )
            })
            .transpose()
    }

    /// `(e^sigma nu, Lambda^G)` split as base/fibre log-densities plus `sigma~ = sigma o tau`,
    /// the volume a certified bundle's flow preserves.
    pub fn certified_volume(&self) -> Option<(VolumeSpec, PhaseDensity)> {
        let cert = self.certificate.as_ref()?;
        let vol = VolumeSpec::new(
            self.volume.base_log_density.clone(),
            metric_fiber_density(&self.hamiltonian),
        );
        Some((vol, PhaseDensity::basic(cert.sigma.clone(), self.rank())))
    }
}

fn param_map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn quadratic_casimir(name: &str, slots: Vec<usize>) -> Casimir {
    let (value_slots, grad_slots) = (slots.clone(), slots);
    Casimir {
        name: name.into(),
        field: ScalarPhaseField::with_gradient(
            move |_, p| value_slots.iter().map(|&a| p[a] * p[a]).sum(),
            move |q, p| {
                let mut g = vec![0.0; q.len() + p.len()];
                for &a in &grad_slots {
                    g[q.len() + a] = 2.0 * p[a];
                }
                g
            },
        ),
    }
}

fn linear_casimir(name: &str, slot: usize) -> Casimir {
    Casimir {
        name: name.into(),
        field: ScalarPhaseField::with_gradient(
            move |_, p| p[slot],
            move |q, p| {
                let mut g = vec![0.0; q.len() + p.len()];
                g[q.len() + slot] = 1.0;
                g
            },
        ),
    }
}

fn symmetric_inverse(name: &str, matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if (matrix - matrix.transpose()).amax() > 0.0 {
        return Err(Error::Model(format!("{name} must be symmetric")));
    }
    let chol = matrix
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Model(format!("{name} must be positive-definite")))?;
    let inv = chol.inverse();
    Ok((&inv + inv.transpose()) * 0.5)
}

/// The tangent bundle of `R^m`: `rho = 1`, `C = 0`, `G = 1`, `H = |p|^2/2 + V(q)`.
///
/// Unimodular with `sigma = 0`; the flow preserves Lebesgue measure `dq dp`.
pub fn make_standard(m: usize, potential: BaseField) -> Result<ModelBundle> {
    if m == 0 {
        return Err(Error::Model("standard model needs m >= 1".into()));
    }
    let names: Vec<String> = (1..=m).map(|i| format!("q{i}")).collect();
    let chart = BaseChart::new(names, vec![(f64::NEG_INFINITY, f64::INFINITY); m])?;
    let alg = ChartedAlgebroid::builder(chart, m)
        .anchor(move |_| DMatrix::identity(m, m))
        .anchor_jacobian(move |_| vec![DMatrix::zeros(m, m); m])
        .build()?;
    let base = alg.chart().sample_box(2.0, 0.0);
    ModelBundle::checked(
        format!("standard-{m}"),
        "Tangent bundle of R^m with the Euclidean metric",
        alg,
        MechanicalHamiltonian::constant(DMatrix::identity(m, m), potential),
        VolumeSpec::lebesgue(),
        Some(UnimodularityCertificate::new(BaseField::zero())),
        param_map(&[("m", m as f64)]),
        ExpectedProperties {
            unimodular: Some(true),
            casimirs: vec![],
        },
        SamplingHints::new(base, 2.0, m),
    )
}

/// One degree of freedom with `V = q^2/2`.
pub fn harmonic_oscillator() -> Result<ModelBundle> {
    let v = BaseField::with_gradient(|q| 0.5 * q[0] * q[0], |q| vec![q[0]]);
    let mut b = make_standard(1, v)?;
    b.name = "harmonic-oscillator".into();
    Ok(b)
}

/// Two degrees of freedom with `V = 0`.
pub fn free_particle() -> Result<ModelBundle> {
    let mut b = make_standard(2, BaseField::zero())?;
    b.name = "free-particle".into();
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LieAlgebraName {
    So3,
    Se2,
    Aff1,
    Heisenberg,
}

impl LieAlgebraName {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "so3" => Ok(Self::So3),
            "se2" => Ok(Self::Se2),
            "aff1" => Ok(Self::Aff1),
            "heisenberg" => Ok(Self::Heisenberg),
            other => Err(Error::Model(format!(
                "unknown Lie algebra {other:?} (expected so3, se2, aff1 or heisenberg)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::So3 => "so3",
            Self::Se2 => "se2",
            Self::Aff1 => "aff1",
            Self::Heisenberg => "heisenberg",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Self::Aff1 => 2,
            _ => 3,
        }
    }

    /// Structure constants in the basis used throughout the crate:
    ///
    /// * so3: `[e1, e2] = e3` and cyclic.
    /// * se2: `e3` is the rotation, `[e3, e1] = e2`, `[e3, e2] = -e1`, `[e1, e2] = 0`.
    /// * aff1: `[e1, e2] = e2`.
    /// * heisenberg: `[e1, e2] = e3`.
    pub fn structure(self) -> StructureTensor {
        let mut c = StructureTensor::zeros(self.dim());
        match self {
            Self::So3 => {
                c.set_bracket(2, 0, 1, 1.0);
                c.set_bracket(0, 1, 2, 1.0);
                c.set_bracket(1, 2, 0, 1.0);
            }
            Self::Se2 => {
                c.set_bracket(1, 2, 0, 1.0);
                c.set_bracket(0, 2, 1, -1.0);
            }
            Self::Aff1 => c.set_bracket(1, 0, 1, 1.0),
            Self::Heisenberg => c.set_bracket(2, 0, 1, 1.0),
        }
        c
    }

    pub fn default_inertia(self) -> DMatrix<f64> {
        match self {
            Self::So3 => DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0])),
            _ => DMatrix::identity(self.dim(), self.dim()),
        }
    }

    pub fn unimodular(self) -> bool {
        !matches!(self, Self::Aff1)
    }

    fn casimirs(self, offset: usize) -> Vec<Casimir> {
        match self {
            Self::So3 => vec![quadratic_casimir(
                "p_squared",
                (offset..offset + 3).collect(),
            )],
            Self::Se2 => vec![quadratic_casimir(
                "translation_momentum_squared",
                vec![offset, offset + 1],
            )],
            Self::Heisenberg => vec![linear_casimir("p3", offset + 2)],
            Self::Aff1 => vec![],
        }
    }
}

/// A Lie algebra (base a point) with kinetic Hamiltonian `H = p . I^-1 p / 2`.
///
/// The Hamilton equations are the Lie-Poisson equations `pdot_a = -C^g_{ab} (I^-1 p)_b p_g`.
/// Unimodular exactly when the character `a -> tr ad_{e_a}` vanishes.
pub fn make_lie_algebra(name: &str, inertia: Option<DMatrix<f64>>) -> Result<ModelBundle> {
    let lie = LieAlgebraName::parse(name)?;
    let n = lie.dim();
    let inertia = inertia.unwrap_or_else(|| lie.default_inertia());
    if inertia.shape() != (n, n) {
        return Err(Error::Dimension(format!("{name} inertia must be {n}x{n}")));
    }
    let cometric = symmetric_inverse("inertia", &inertia)?;
    let alg = ChartedAlgebroid::lie_algebra(lie.structure())?;
    let character = modular_character(&alg)?;
    let unimodular = character.amax() == 0.0;
    debug_assert_eq!(unimodular, lie.unimodular());
    let mut p = BTreeMap::new();
    for i in 0..n {
        p.insert(format!("I{}", i + 1), inertia[(i, i)]);
    }
    ModelBundle::checked(
        name,
        format!("Lie-Poisson dynamics on {name}*"),
        alg,
        MechanicalHamiltonian::kinetic(cometric),
        VolumeSpec::lebesgue(),
        unimodular.then(|| UnimodularityCertificate::new(BaseField::zero())),
        p,
        ExpectedProperties {
            unimodular: Some(unimodular),
            casimirs: lie.casimirs(0),
        },
        SamplingHints::new(SampleBox::new(vec![]), 2.0, n),
    )
}

/// Pole guard of the spherical chart.
pub const POLE_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct HeavyTopParams {
    pub mass: f64,
    pub gravity: f64,
    pub length: f64,
    pub inertia: DMatrix<f64>,
    pub axis: [f64; 3],
}

impl Default for HeavyTopParams {
    fn default() -> Self {
        HeavyTopParams {
            mass: 1.0,
            gravity: 1.0,
            length: 1.0,
            inertia: LieAlgebraName::So3.default_inertia(),
            axis: [1.0, 0.0, 0.0],
        }
    }
}

fn sphere_point(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// The action algebroid `so(3) x S^2` of rotations acting on the unit sphere, in the
/// chart `(theta, phi)` with `x = (sin theta cos phi, sin theta sin phi, cos theta)`.
///
/// The anchor sends `e_a` to the generator `x -> x x e_a`, so
/// `rho^theta = (sin phi, -cos phi, 0)` and `rho^phi = (cot theta cos phi, cot theta sin phi, -1)`;
/// `C = so(3)`. `H = p . I^-1 p / 2 + m g l x . e`. The base volume is
/// `nu = sin theta dtheta dphi`, for which the modular section vanishes, so `sigma = 0`
/// certifies unimodularity and the flow preserves `dp ^ sin theta dtheta dphi`.
/// `p . x` is a Casimir.
pub fn make_heavy_top(params: HeavyTopParams) -> Result<ModelBundle> {
    let HeavyTopParams {
        mass,
        gravity,
        length,
        inertia,
        axis,
    } = params;
    let norm = dot(axis, axis).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::Model(format!(
            "heavy-top axis must be a unit vector, |e| = {norm}"
        )));
    }
    for (k, v) in [("mass", mass), ("gravity", gravity), ("length", length)] {
        if !v.is_finite() {
            return Err(Error::Model(format!("heavy-top {k} must be finite")));
        }
    }
    if inertia.shape() != (3, 3) {
        return Err(Error::Dimension("heavy-top inertia must be 3x3".into()));
    }
    let cometric = symmetric_inverse("inertia", &inertia)?;
    let chart = BaseChart::new(
        vec!["theta".into(), "phi".into()],
        vec![
            (POLE_GUARD, std::f64::consts::PI - POLE_GUARD),
            (f64::NEG_INFINITY, f64::INFINITY),
        ],
    )?;
    let alg = ChartedAlgebroid::builder(chart, 3)
        .anchor(|q| {
            let (sp, cp) = q[1].sin_cos();
            let cot = q[0].cos() / q[0].sin();
            DMatrix::from_row_slice(2, 3, &[sp, -cp, 0.0, cot * cp, cot * sp, -1.0])
        })
        .anchor_jacobian(|q| {
            let (sp, cp) = q[1].sin_cos();
            let (st, ct) = q[0].sin_cos();
            let cot = ct / st;
            let csc2 = 1.0 / (st * st);
            vec![
                DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 0.0, -cp * csc2, -sp * csc2, 0.0]),
                DMatrix::from_row_slice(2, 3, &[cp, sp, 0.0, -cot * sp, cot * cp, 0.0]),
            ]
        })
        .constant_structure(LieAlgebraName::So3.structure())
        .build()?;
    let mgl = mass * gravity * length;
    let potential = BaseField::with_gradient(
        move |q| mgl * dot(sphere_point(q[0], q[1]), axis),
        move |q| {
            let (st, ct) = q[0].sin_cos();
            let (sp, cp) = q[1].sin_cos();
            let e_theta = [ct * cp, ct * sp, -st];
            let e_phi = [-sp, cp, 0.0];
            vec![mgl * dot(e_theta, axis), mgl * st * dot(e_phi, axis)]
        },
    );
    let base_density =
        BaseField::with_gradient(|q| q[0].sin().ln(), |q| vec![q[0].cos() / q[0].sin(), 0.0]);
    let hamiltonian = MechanicalHamiltonian::constant(cometric, potential);
    let volume = VolumeSpec::new(base_density, metric_fiber_density(&hamiltonian));
    let base = SampleBox::new(vec![
        (POLE_GUARD + 0.05, std::f64::consts::PI - POLE_GUARD - 0.05),
        (-std::f64::consts::PI, std::f64::consts::PI),
    ]);
    // Initial conditions near the potential minimum x = -e with H < 0 stay in
    // {x . e < 0}; for the default axis that excludes both poles.
    let mut sampling = SamplingHints::new(base, 2.0, 3);
    if axis == [1.0, 0.0, 0.0] {
        let kinetic = (0.4 * mgl.abs()).sqrt() / 3f64.sqrt();
        let pi = std::f64::consts::PI;
        sampling = sampling.with_initial_conditions(SampleBox::new(vec![
            (pi / 2.0 - 0.3, pi / 2.0 + 0.3),
            (pi - 0.3, pi + 0.3),
            (-kinetic, kinetic),
            (-kinetic, kinetic),
            (-kinetic, kinetic),
        ]));
    }
    let casimir = Casimir {
        name: "p_dot_x".into(),
        field: ScalarPhaseField::with_gradient(
            |q, p| dot([p[0], p[1], p[2]], sphere_point(q[0], q[1])),
            |q, p| {
                let (st, ct) = q[0].sin_cos();
                let (sp, cp) = q[1].sin_cos();
                let p3 = [p[0], p[1], p[2]];
                vec![
                    dot(p3, [ct * cp, ct * sp, -st]),
                    dot(p3, [-st * sp, st * cp, 0.0]),
                    st * cp,
                    st * sp,
                    ct,
                ]
            },
        ),
    };
    ModelBundle::checked(
        "heavy-top",
        "Heavy top as the action algebroid so(3) x S^2",
        alg,
        hamiltonian,
        volume,
        Some(UnimodularityCertificate::new(BaseField::zero())),
        {
            let mut p = params_from_inertia(&inertia);
            p.extend(param_map(&[
                ("mass", mass),
                ("gravity", gravity),
                ("length", length),
                ("e1", axis[0]),
                ("e2", axis[1]),
                ("e3", axis[2]),
            ]));
            p
        },
        ExpectedProperties {
            unimodular: Some(true),
            casimirs: vec![casimir],
        },
        sampling,
    )
}

fn params_from_inertia(inertia: &DMatrix<f64>) -> BTreeMap<String, f64> {
    (0..inertia.nrows())
        .map(|i| (format!("I{}", i + 1), inertia[(i, i)]))
        .collect()
}

/// Two planar rigid bodies joined at a pin, as the Atiyah algebroid `se(2) x TS^1`.
///
/// Slots 1-3 are `se(2)` with `e3` the rotation (same table as [`LieAlgebraName::structure`]),
/// slot 4 is the shape velocity `d/dtheta`. The metric
/// `m (xi1^2 + xi2^2) + (I1 + I2) xi3^2 + I2 t^2 + 2 I2 xi3 t` is inverted once for `G`;
/// `V = 0`. The anchor kills the `se(2)` slots, `C` vanishes off them, and `sigma = 0`
/// certifies unimodularity with respect to `dtheta`.
pub fn make_beanie(mass: f64, i1: f64, i2: f64) -> Result<ModelBundle> {
    if !(mass > 0.0 && i1 > 0.0 && i2 > 0.0) {
        return Err(Error::Model(format!(
            "beanie needs positive mass and inertias (got {mass}, {i1}, {i2})"
        )));
    }
    let mut metric = DMatrix::zeros(4, 4);
    metric[(0, 0)] = mass;
    metric[(1, 1)] = mass;
    metric[(2, 2)] = i1 + i2;
    metric[(3, 3)] = i2;
    metric[(2, 3)] = i2;
    metric[(3, 2)] = i2;
    let cometric = symmetric_inverse("beanie metric", &metric)?;
    let pi = std::f64::consts::PI;
    let chart = BaseChart::new(vec!["theta".into()], vec![(-pi, pi)])?;
    let mut c = StructureTensor::zeros(4);
    let se2 = LieAlgebraName::Se2.structure();
    for g in 0..3 {
        for a in 0..3 {
            for b in 0..3 {
                c.set(g, a, b, se2.get(g, a, b));
            }
        }
    }
    let alg = ChartedAlgebroid::builder(chart, 4)
        .anchor(|_| DMatrix::from_row_slice(1, 4, &[0.0, 0.0, 0.0, 1.0]))
        .anchor_jacobian(|_| vec![DMatrix::zeros(1, 4)])
        .constant_structure(c)
        .build()?;
    let hamiltonian = MechanicalHamiltonian::kinetic(cometric);
    let volume = VolumeSpec::new(BaseField::zero(), metric_fiber_density(&hamiltonian));
    let base = alg.chart().sample_box(0.0, 0.01);
    // theta-dot = (G p)_4 is conserved; with |p| <= 0.05 it stays below 0.2 for the
    // default parameters, so theta in [-0.3, 0.3] cannot reach the cut within T = 10.
    let mut initial = vec![(-0.3, 0.3)];
    initial.extend(vec![(-0.05, 0.05); 4]);
    ModelBundle::checked(
        "beanie",
        "Two pinned planar rigid bodies: Atiyah algebroid se(2) x TS^1",
        alg,
        hamiltonian,
        volume,
        Some(UnimodularityCertificate::new(BaseField::zero())),
        param_map(&[("mass", mass), ("I1", i1), ("I2", i2)]),
        ExpectedProperties {
            unimodular: Some(true),
            casimirs: LieAlgebraName::Se2.casimirs(0),
        },
        SamplingHints::new(base, 2.0, 4).with_initial_conditions(SampleBox::new(initial)),
    )
}

/// The trivial Atiyah algebroid `g x TR^m`: Lie algebra slots first, then the tangent
/// slots with identity anchor. `G = I^-1 (+) 1`, `V = |q|^2/2`. Unimodular iff `g` is.
pub fn make_trivial_atiyah(lie_name: &str, m_base: usize) -> Result<ModelBundle> {
    let lie = LieAlgebraName::parse(lie_name)?;
    if m_base == 0 {
        return Err(Error::Model(
            "trivial Atiyah model needs m_base >= 1".into(),
        ));
    }
    let k = lie.dim();
    let n = k + m_base;
    let names: Vec<String> = (1..=m_base).map(|i| format!("q{i}")).collect();
    let chart = BaseChart::new(names, vec![(f64::NEG_INFINITY, f64::INFINITY); m_base])?;
    let lie_c = lie.structure();
    let mut c = StructureTensor::zeros(n);
    for g in 0..k {
        for a in 0..k {
            for b in 0..k {
                c.set(g, a, b, lie_c.get(g, a, b));
            }
        }
    }
    let anchor = {
        let mut r = DMatrix::zeros(m_base, n);
        for i in 0..m_base {
            r[(i, k + i)] = 1.0;
        }
        r
    };
    let alg = ChartedAlgebroid::builder(chart, n)
        .anchor(move |_| anchor.clone())
        .anchor_jacobian(move |_| vec![DMatrix::zeros(m_base, n); m_base])
        .constant_structure(c)
        .build()?;
    let mut cometric = DMatrix::identity(n, n);
    cometric
        .view_mut((0, 0), (k, k))
        .copy_from(&symmetric_inverse("inertia", &lie.default_inertia())?);
    let potential = BaseField::with_gradient(
        |q| 0.5 * q.iter().map(|v| v * v).sum::<f64>(),
        |q| q.to_vec(),
    );
    let hamiltonian = MechanicalHamiltonian::constant(cometric, potential);
    let unimodular = lie.unimodular();
    let base = alg.chart().sample_box(2.0, 0.0);
    ModelBundle::checked(
        format!("atiyah-{}", lie.as_str()),
        format!("Trivial Atiyah algebroid {} x TR^{m_base}", lie.as_str()),
        alg,
        hamiltonian,
        VolumeSpec::lebesgue(),
        unimodular.then(|| UnimodularityCertificate::new(BaseField::zero())),
        param_map(&[("m_base", m_base as f64)]),
        ExpectedProperties {
            unimodular: Some(unimodular),
            casimirs: lie.casimirs(0),
        },
        SamplingHints::new(base, 2.0, n),
    )
}

/// Built-in bundle by catalog name, with default parameters.
pub fn builtin(name: &str) -> Result<ModelBundle> {
    match name {
        "harmonic-oscillator" => harmonic_oscillator(),
        "free-particle" => free_particle(),
        "so3" | "se2" | "aff1" | "heisenberg" => make_lie_algebra(name, None),
        "heavy-top" => make_heavy_top(HeavyTopParams::default()),
        "beanie" => make_beanie(1.0, 1.0, 0.5),
        "atiyah-so3" => make_trivial_atiyah("so3", 1),
        "atiyah-aff1" => make_trivial_atiyah("aff1", 1),
        other => Err(Error::Model(format!(
            "unknown model {other:?}; known models: {}",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_builds() {
        for name in BUILTIN_NAMES {
            let b = builtin(name).unwrap();
            assert_eq!(b.name, name);
        }
        assert!(matches!(builtin("nope"), Err(Error::Model(_))));
    }

    #[test]
    fn se2_is_rotation_in_third_slot() {
        let c = LieAlgebraName::Se2.structure();
        assert_eq!(c.get(1, 2, 0), 1.0);
        assert_eq!(c.get(0, 2, 1), -1.0);
        assert_eq!(c.get(2, 0, 1), 0.0);
    }

    #[test]
    fn beanie_cometric_inverts_metric() {
        let b = builtin("beanie").unwrap();
        let g = b.hamiltonian.cometric(&[0.0]).unwrap();
        let (i1, i2) = (1.0, 0.5);
        assert!((g[(2, 2)] - 1.0 / i1).abs() < 1e-14);
        assert!((g[(2, 3)] + 1.0 / i1).abs() < 1e-14);
        assert!((g[(3, 3)] - (i1 + i2) / (i1 * i2)).abs() < 1e-14);
        assert_eq!(g[(0, 0)], 1.0);
    }

    #[test]
    fn parameter_violations_are_rejected() {
        assert!(make_beanie(0.0, 1.0, 1.0).is_err());
        assert!(make_standard(0, BaseField::zero()).is_err());
        assert!(make_lie_algebra("so3", Some(DMatrix::from_diagonal_element(3, 3, -1.0))).is_err());
        let tilted = HeavyTopParams {
            axis: [1.0, 1.0, 0.0],
            ..HeavyTopParams::default()
        };
        assert!(make_heavy_top(tilted).is_err());
        assert!(make_trivial_atiyah("gl2", 1).is_err());
    }
}
