//! Cubic-spline node slopes used to feed the Hermite interpolant.

/// Solves a tridiagonal system in place (`sub[0]` and `sup[n-1]` unused).
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for k in 1..n {
        c[k - 1] = sup[k - 1] / beta;
        beta = diag[k] - sub[k] * c[k - 1];
        rhs[k] = (rhs[k] - sub[k] * rhs[k - 1]) / beta;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= c[k] * rhs[k + 1];
    }
}

/// Slopes of the periodic cubic spline through equally spaced samples:
/// `d[i-1] + 4 d[i] + d[i+1] = 3 (u[i+1] - u[i-1]) / h`.
pub fn periodic_slopes(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    let rhs: Vec<f64> = (0..n)
        .map(|i| 3.0 * (u[(i + 1) % n] - u[(i + n - 1) % n]) / h)
        .collect();
    // Sherman-Morrison on the cyclic corners
    let gamma = -4.0;
    let mut diag = vec![4.0; n];
    diag[0] -= gamma;
    diag[n - 1] -= 1.0 / gamma;
    let off = vec![1.0; n];
    let mut x = rhs;
    thomas(&off, &diag, &off, &mut x);
    let mut z = vec![0.0; n];
    z[0] = gamma;
    z[n - 1] = 1.0;
    thomas(&off, &diag, &off, &mut z);
    let fact = (x[0] + x[n - 1] / gamma) / (1.0 + z[0] + z[n - 1] / gamma);
    for k in 0..n {
        x[k] -= fact * z[k];
    }
    x
}

/// Third-order one-sided derivative at the first sample.
pub fn start_slope(u: &[f64], h: f64) -> f64 {
    (-11.0 * u[0] + 18.0 * u[1] - 9.0 * u[2] + 2.0 * u[3]) / (6.0 * h)
}

/// Third-order one-sided derivative at the last sample.
pub fn end_slope(u: &[f64], h: f64) -> f64 {
    let n = u.len() - 1;
    (11.0 * u[n] - 18.0 * u[n - 1] + 9.0 * u[n - 2] - 2.0 * u[n - 3]) / (6.0 * h)
}

/// Slopes of the clamped cubic spline with prescribed end slopes.
pub fn clamped_slopes(u: &[f64], h: f64, d_start: f64, d_end: f64) -> Vec<f64> {
    let n = u.len() - 1;
    let mut out = vec![0.0; n + 1];
    out[0] = d_start;
    out[n] = d_end;
    if n < 2 {
        return out;
    }
    let m = n - 1;
    let mut rhs: Vec<f64> = (1..n)
        .map(|j| 3.0 * (u[j + 1] - u[j - 1]) / h)
        .collect();
    rhs[0] -= d_start;
    rhs[m - 1] -= d_end;
    let ones = vec![1.0; m];
    thomas(&ones, &vec![4.0; m], &ones, &mut rhs);
    out[1..n].copy_from_slice(&rhs);
    out
}

/// Cubic Hermite basis on `[0, 1]`: values and first derivatives of
/// `[h00, h10, h01, h11]`.
#[inline]
pub fn hermite(t: f64) -> ([f64; 4], [f64; 4]) {
    let t2 = t * t;
    let t3 = t2 * t;
    (
        [
            2.0 * t3 - 3.0 * t2 + 1.0,
            t3 - 2.0 * t2 + t,
            -2.0 * t3 + 3.0 * t2,
            t3 - t2,
        ],
        [
            6.0 * t2 - 6.0 * t,
            3.0 * t2 - 4.0 * t + 1.0,
            -6.0 * t2 + 6.0 * t,
            3.0 * t2 - 2.0 * t,
        ],
    )
}
