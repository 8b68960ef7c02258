//! Shared oracles for the integration tests.

#![allow(dead_code)]

/// Backward-Euler finite differences for `u_t = α u_xx` on `[0, l]` with
/// zero flux at `x = 0` and `u(l, t) = boundary(t)`. Returns the node
/// coordinates and the profile after `n_steps` steps of `dt`.
pub fn fd_profile_1d(
    alpha: f64,
    l: f64,
    cells: usize,
    dt: f64,
    n_steps: usize,
    initial: f64,
    boundary: impl Fn(f64) -> f64,
) -> (Vec<f64>, Vec<f64>) {
    let h = l / cells as f64;
    let r = alpha * dt / (h * h);
    let n = cells + 1;
    let xs: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let mut u = vec![initial; n];
    // unknowns 0..cells-1; node `cells` is prescribed
    let m = cells;
    let mut c_prime = vec![0.0; m];
    let mut d_prime = vec![0.0; m];
    for step in 1..=n_steps {
        let ub = boundary(step as f64 * dt);
        // row 0 uses the mirrored ghost node: (1+2r)u0 − 2r u1
        let lower = |i: usize| if i == 0 { 0.0 } else { -r };
        let upper = |i: usize| if i == 0 { -2.0 * r } else { -r };
        let diag = 1.0 + 2.0 * r;
        for i in 0..m {
            let mut rhs = u[i];
            if i == m - 1 {
                rhs += r * ub;
            }
            let up = if i == m - 1 { 0.0 } else { upper(i) };
            if i == 0 {
                c_prime[0] = up / diag;
                d_prime[0] = rhs / diag;
            } else {
                let denom = diag - lower(i) * c_prime[i - 1];
                c_prime[i] = up / denom;
                d_prime[i] = (rhs - lower(i) * d_prime[i - 1]) / denom;
            }
        }
        u[m - 1] = d_prime[m - 1];
        for i in (0..m - 1).rev() {
            u[i] = d_prime[i] - c_prime[i] * u[i + 1];
        }
        u[m] = ub;
    }
    (xs, u)
}

pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] * (1.0 - w) + ys[i] * w
}
