//! Wigner small-d functions via the Jacobi-polynomial closed form.
//!
//! Arguments are doubled so that half-integer spins (odd-degree twists) share
//! the same code path: `d(2j, 2m', 2m, beta)` evaluates `d^j_{m' m}(beta)`.

use std::sync::OnceLock;

const LN_FACT_MAX: usize = 512;

fn ln_fact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0.0; LN_FACT_MAX + 1];
        for n in 1..=LN_FACT_MAX {
            t[n] = t[n - 1] + (n as f64).ln();
        }
        t
    })
}

fn ln_binom(n: i64, k: i64) -> f64 {
    let t = ln_fact_table();
    t[n as usize] - t[k as usize] - t[(n - k) as usize]
}

/// Jacobi polynomial P_n^{(a,b)}(x) by the standard three-term recurrence.
pub fn jacobi(n: i64, a: f64, b: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut p0 = 1.0;
    let mut p1 = 0.5 * (a - b + (a + b + 2.0) * x);
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + a + b;
        let a1 = 2.0 * k * (k + a + b) * (c - 2.0);
        let a2 = (c - 1.0) * (a * a - b * b);
        let a3 = (c - 2.0) * (c - 1.0) * c;
        let a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
        let p2 = ((a2 + a3 * x) * p1 - a4 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// d^j_{m' m}(beta) with all angular-momentum labels doubled.
pub fn wigner_d(two_j: i32, two_mp: i32, two_m: i32, beta: f64) -> f64 {
    debug_assert!((two_j - two_m) % 2 == 0 && (two_j - two_mp) % 2 == 0);
    if two_m.abs() > two_j || two_mp.abs() > two_j {
        return 0.0;
    }
    let jpm = ((two_j + two_m) / 2) as i64;
    let jmm = ((two_j - two_m) / 2) as i64;
    let jpmp = ((two_j + two_mp) / 2) as i64;
    let jmmp = ((two_j - two_mp) / 2) as i64;
    let dm = ((two_mp - two_m) / 2) as i64;
    let k = jpm.min(jmm).min(jpmp).min(jmmp);
    let (a, lambda) = if k == jpm {
        (dm, dm)
    } else if k == jmm {
        (-dm, 0)
    } else if k == jpmp {
        (-dm, 0)
    } else {
        (dm, dm)
    };
    let two_j_int = (jpm + jmm) as i64;
    let b = two_j_int - 2 * k - a;
    let sign = if lambda.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let ln_norm = 0.5 * (ln_binom(two_j_int - k, k + a) - ln_binom(k + b, b));
    let (s, c) = (0.5 * beta).sin_cos();
    sign * ln_norm.exp()
        * s.powi(a as i32)
        * c.powi(b as i32)
        * jacobi(k, a as f64, b as f64, beta.cos())
}

/// Normalized spin-weighted polar profile sqrt((2l+1)/4π) d^l_{m,k}(θ).
pub fn spin_profile(two_l: i32, two_m: i32, two_k: i32, theta: f64) -> f64 {
    let l = 0.5 * two_l as f64;
    ((2.0 * l + 1.0) / (4.0 * std::f64::consts::PI)).sqrt() * wigner_d(two_l, two_m, two_k, theta)
}

/// Coefficient of the spin-lowering ladder d_{m,k} -> d_{m,k-1}: sqrt((l+k)(l-k+1)).
pub fn lowering_coeff(two_l: i32, two_k: i32) -> f64 {
    let l = 0.5 * two_l as f64;
    let k = 0.5 * two_k as f64;
    ((l + k) * (l - k + 1.0)).max(0.0).sqrt()
}

/// Coefficient of the spin-raising ladder d_{m,k} -> d_{m,k+1}: sqrt((l-k)(l+k+1)).
pub fn raising_coeff(two_l: i32, two_k: i32) -> f64 {
    let l = 0.5 * two_l as f64;
    let k = 0.5 * two_k as f64;
    ((l - k) * (l + k + 1.0)).max(0.0).sqrt()
}
