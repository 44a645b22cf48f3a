//! Small dense and banded solvers.

/// Solve a symmetric tridiagonal system by the Thomas algorithm.
///
/// `diag` has length n, `off` has length n-1 (the sub/super diagonal).
/// Returns `None` when a pivot is not strictly positive, i.e. the matrix is
/// not positive definite; callers use that to detect an indefinite Newton
/// Hessian.
pub fn solve_spd_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    debug_assert_eq!(rhs.len(), n);
    debug_assert_eq!(off.len(), n.saturating_sub(1));
    if n == 0 {
        return Some(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if !(piv > 0.0) {
        return None;
    }
    c[0] = if n > 1 { off[0] / piv } else { 0.0 };
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - off[i - 1] * c[i - 1];
        if !(piv > 0.0) || !piv.is_finite() {
            return None;
        }
        if i < n - 1 {
            c[i] = off[i] / piv;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / piv;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Some(x)
}

/// Solve a symmetric cyclic tridiagonal system with constant corner
/// coupling `corner` between the first and last unknowns
/// (Sherman-Morrison on top of the Thomas algorithm).
pub fn solve_spd_cyclic(diag: &[f64], off: &[f64], corner: f64, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    if n < 3 {
        return None;
    }
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= corner * corner / gamma;
    let x = solve_spd_tridiagonal(&d, off, rhs)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = corner;
    let z = solve_spd_tridiagonal(&d, off, &u)?;
    let num = x[0] + corner * x[n - 1] / gamma;
    let den = 1.0 + z[0] + corner * z[n - 1] / gamma;
    Some(x.iter().zip(&z).map(|(xi, zi)| xi - num / den * zi).collect())
}

/// Weighted linear least squares by Householder QR.
///
/// `rows[i]` are the regressors of observation i. Returns the coefficient
/// vector, or `None` if the design matrix is numerically rank deficient.
pub fn least_squares(rows: &[Vec<f64>], y: &[f64], weights: Option<&[f64]>) -> Option<Vec<f64>> {
    let m = rows.len();
    if m == 0 {
        return None;
    }
    let n = rows[0].len();
    if m < n {
        return None;
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().map(|x| x * w(i)).collect())
        .collect();
    let mut b: Vec<f64> = y.iter().enumerate().map(|(i, v)| v * w(i)).collect();
    let scale: f64 = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |s, x| s.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    for k in 0..n {
        let norm = (k..m).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm <= 1e-13 * scale {
            return None;
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..n {
            let dot: f64 = (k..m).map(|i| v[i - k] * a[i][j]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                a[i][j] -= f * v[i - k];
            }
        }
        let dot: f64 = (k..m).map(|i| v[i - k] * b[i]).sum();
        let f = 2.0 * dot / vnorm2;
        for i in k..m {
            b[i] -= f * v[i - k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Some(x)
}
