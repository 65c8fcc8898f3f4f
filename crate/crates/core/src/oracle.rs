//! Independent reference computations used to cross-check the closed forms.
//! Nothing in here shares a code path with the quantities it is compared to.

use crate::lie::{max_abs, CMat, C64};

/// Generic matrix exponential: scaling and squaring with a truncated Taylor
/// series.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm: f64 = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a.map(|z| z * scale);
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for k in 1..40 {
        term = &term * &x / C64::new(k as f64, 0.0);
        sum += &term;
        if max_abs(&term) < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Sum of central second differences `sum_k (f(q + h e_k) - 2 f(q) + f(q - h e_k)) / h^2`.
pub fn laplacian_fd<F: Fn(&[f64]) -> f64>(f: F, q: &[f64], h: f64) -> f64 {
    let f0 = f(q);
    let mut x = q.to_vec();
    let mut acc = 0.0;
    for k in 0..q.len() {
        x[k] = q[k] + h;
        let fp = f(&x);
        x[k] = q[k] - h;
        let fm = f(&x);
        x[k] = q[k];
        acc += (fp - 2.0 * f0 + fm) / (h * h);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_rotation_generator() {
        let t = 0.9f64;
        let a = CMat::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(t, 0.0), C64::new(-t, 0.0), C64::new(0.0, 0.0)]);
        let e = expm(&a);
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-14);
        assert!((e[(0, 1)].re - t.sin()).abs() < 1e-14);
    }

    #[test]
    fn fd_laplacian_of_quadratic() {
        let v = laplacian_fd(|x| x[0] * x[0] + 3.0 * x[1] * x[1], &[0.3, -0.2], 1e-3);
        assert!((v - 8.0).abs() < 1e-6);
    }
}
