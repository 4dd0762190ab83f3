#![allow(dead_code)]

use algebroid::fields::{BaseField, ScalarPhaseField};
use algebroid::sampling::SampleRng;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn coeff(rng: &mut SampleRng) -> f64 {
    rng.random_range(-1.0..1.0)
}

/// `c + b.x + x.A.x/2` over `x = (q, p)` with coefficients in `[-1, 1)` and exact derivatives.
pub fn random_quadratic(rng: &mut SampleRng, m: usize, n: usize) -> ScalarPhaseField {
    let dim = m + n;
    let c = coeff(rng);
    let b = DVector::from_fn(dim, |_, _| coeff(rng));
    let a = DMatrix::from_fn(dim, dim, |_, _| coeff(rng));
    let a = (&a + a.transpose()) * 0.5;
    let (b2, a2, a3) = (b.clone(), a.clone(), a.clone());
    ScalarPhaseField::with_gradient(
        move |q, p| {
            let x = DVector::from_iterator(dim, q.iter().chain(p).copied());
            c + b.dot(&x) + 0.5 * x.dot(&(&a * &x))
        },
        move |q, p| {
            let x = DVector::from_iterator(dim, q.iter().chain(p).copied());
            (&b2 + &a2 * x).as_slice().to_vec()
        },
    )
    .with_hessian(move |_, _| a3.clone())
}

/// `B B^T + n/2` for a random `B`.
pub fn random_spd(rng: &mut SampleRng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| coeff(rng));
    &b * b.transpose() + DMatrix::identity(n, n) * (0.5 * n as f64)
}

/// Quadratic potential on the base with exact gradient.
pub fn random_potential(rng: &mut SampleRng, m: usize) -> BaseField {
    let b = DVector::from_fn(m, |_, _| coeff(rng));
    let a = DMatrix::from_fn(m, m, |_, _| coeff(rng));
    let a = (&a + a.transpose()) * 0.5;
    let (b2, a2) = (b.clone(), a.clone());
    BaseField::with_gradient(
        move |q| {
            let x = DVector::from_column_slice(q);
            b.dot(&x) + 0.5 * x.dot(&(&a * &x))
        },
        move |q| {
            (&b2 + &a2 * DVector::from_column_slice(q))
                .as_slice()
                .to_vec()
        },
    )
}

/// `a + sum_i b_i sin(c_i q_i + d_i)` with exact gradient.
pub fn random_smooth(rng: &mut SampleRng, m: usize) -> BaseField {
    let a = coeff(rng);
    let terms: Vec<[f64; 3]> = (0..m)
        .map(|_| [coeff(rng), 2.0 * coeff(rng), coeff(rng)])
        .collect();
    let t2 = terms.clone();
    BaseField::with_gradient(
        move |q| {
            a + terms
                .iter()
                .zip(q)
                .map(|([b, c, d], x)| b * (c * x + d).sin())
                .sum::<f64>()
        },
        move |q| {
            t2.iter()
                .zip(q)
                .map(|([b, c, d], x)| b * c * (c * x + d).cos())
                .collect()
        },
    )
}
