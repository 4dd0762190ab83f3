//! Central finite differences with per-axis steps.

/// Step used along an axis whose current coordinate is `x`: `cbrt(eps) * max(1, |x|)`.
pub fn step(x: f64) -> f64 {
    f64::EPSILON.cbrt() * x.abs().max(1.0)
}

/// Central-difference gradient of a scalar function.
pub fn gradient<F>(f: F, x: &[f64]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            let h = step(x[k]);
            probe[k] = x[k] + h;
            let plus = f(&probe);
            probe[k] = x[k] - h;
            let minus = f(&probe);
            probe[k] = x[k];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// Central-difference Jacobian of a vector function; entry `[row][col]` is `d f_row / d x_col`.
pub fn jacobian<F>(f: F, x: &[f64]) -> Vec<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut probe = x.to_vec();
    let columns: Vec<Vec<f64>> = (0..x.len())
        .map(|k| {
            let h = step(x[k]);
            probe[k] = x[k] + h;
            let plus = f(&probe);
            probe[k] = x[k] - h;
            let minus = f(&probe);
            probe[k] = x[k];
            plus.iter()
                .zip(&minus)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect()
        })
        .collect();
    let rows = columns.first().map_or(0, Vec::len);
    (0..rows)
        .map(|r| columns.iter().map(|c| c[r]).collect())
        .collect()
}

/// Central-difference derivative along one axis of a function returning a flat buffer.
pub fn partial<F>(f: F, x: &[f64], axis: usize) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut probe = x.to_vec();
    let h = step(x[axis]);
    probe[axis] = x[axis] + h;
    let plus = f(&probe);
    probe[axis] = x[axis] - h;
    let minus = f(&probe);
    plus.iter()
        .zip(&minus)
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect()
}

/// Step for the five-point stencil: `3e-5 * max(1, |x|)`. Smaller than the textbook
/// `eps^(1/5)` so that features on a scale of 0.05 (charts stopped short of a pole) are
/// still resolved; rounding stays near `eps / h`, about 1e-11.
pub fn five_point_step(x: f64) -> f64 {
    3e-5 * x.abs().max(1.0)
}

/// Fourth-order derivative along one axis, for fields whose second derivatives feed a
/// residual that should vanish.
pub fn partial_five_point<F>(f: F, x: &[f64], axis: usize) -> Vec<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut probe = x.to_vec();
    let h = five_point_step(x[axis]);
    let mut at = |offset: f64| {
        probe[axis] = x[axis] + offset * h;
        f(&probe)
    };
    let (p2, p1, m1, m2) = (at(2.0), at(1.0), at(-1.0), at(-2.0));
    (0..p1.len())
        .map(|i| (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h))
        .collect()
}
