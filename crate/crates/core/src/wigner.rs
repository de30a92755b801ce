//! Wigner 3j and 6j symbols from the Racah sums, and the hyperfine
//! recoupling of rank-2 reduced matrix elements.
//!
//! All arguments are exact half-integers; selection-rule violations give 0.

use std::sync::OnceLock;

use crate::halfint::HalfInt;

const TABLE_LEN: usize = 512;

fn log_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_LEN);
        let mut acc = 0.0;
        t.push(0.0);
        for k in 1..TABLE_LEN {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)` for `n >= 0`.
fn ln_fact(n: i32) -> f64 {
    debug_assert!(n >= 0);
    let table = log_factorial_table();
    let n = n as usize;
    if n < table.len() {
        table[n]
    } else {
        table[TABLE_LEN - 1] + ((TABLE_LEN)..=n).map(|k| (k as f64).ln()).sum::<f64>()
    }
}

/// Twice-values to integer: `(a ± b ± c) / 2`, `None` if not an integer.
fn half(twice: i32) -> Option<i32> {
    if twice % 2 == 0 {
        Some(twice / 2)
    } else {
        None
    }
}

/// Whether `(a, b, c)` satisfy the triangle rule with integer perimeter.
pub fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    let (a, b, c) = (a.twice(), b.twice(), c.twice());
    a >= 0 && b >= 0 && c >= 0 && c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// `ln Δ(abc) = ln[(a+b−c)!(a−b+c)!(−a+b+c)!/(a+b+c+1)!]`; triangle assumed.
fn ln_delta(a: HalfInt, b: HalfInt, c: HalfInt) -> f64 {
    let (a, b, c) = (a.twice(), b.twice(), c.twice());
    ln_fact((a + b - c) / 2) + ln_fact((a - b + c) / 2) + ln_fact((-a + b + c) / 2) - ln_fact((a + b + c) / 2 + 1)
}

fn projection_ok(j: HalfInt, m: HalfInt) -> bool {
    m.twice().abs() <= j.twice() && (j.twice() - m.twice()) % 2 == 0
}

fn sign(k: i32) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)`.
pub fn wigner_3j(j1: HalfInt, j2: HalfInt, j3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> f64 {
    if (m1 + m2 + m3).twice() != 0 || !triangle(j1, j2, j3) {
        return 0.0;
    }
    if !projection_ok(j1, m1) || !projection_ok(j2, m2) || !projection_ok(j3, m3) {
        return 0.0;
    }
    // All of these are integers once the checks above pass.
    let i = |x: HalfInt| half(x.twice()).expect("integer combination");
    let a1 = i(j1 + j2 - j3);
    let a2 = i(j1 - m1);
    let a3 = i(j2 + m2);
    let b1 = i(j3 - j2 + m1);
    let b2 = i(j3 - j1 - m2);
    let k_min = 0.max(-b1).max(-b2);
    let k_max = a1.min(a2).min(a3);
    if k_min > k_max {
        return 0.0;
    }
    let ln_pref = 0.5
        * (ln_delta(j1, j2, j3)
            + ln_fact(i(j1 + m1))
            + ln_fact(a2)
            + ln_fact(a3)
            + ln_fact(i(j2 - m2))
            + ln_fact(i(j3 + m3))
            + ln_fact(i(j3 - m3)));
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let ln_den = ln_fact(k) + ln_fact(b1 + k) + ln_fact(b2 + k) + ln_fact(a1 - k) + ln_fact(a2 - k) + ln_fact(a3 - k);
        sum += sign(k) * (ln_pref - ln_den).exp();
    }
    sign(i(j1 - j2 - m3)) * sum
}

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}`.
pub fn wigner_6j(j1: HalfInt, j2: HalfInt, j3: HalfInt, j4: HalfInt, j5: HalfInt, j6: HalfInt) -> f64 {
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if !triads.iter().all(|&(a, b, c)| triangle(a, b, c)) {
        return 0.0;
    }
    let i = |x: HalfInt| half(x.twice()).expect("integer combination");
    let sums: Vec<i32> = triads.iter().map(|&(a, b, c)| i(a + b + c)).collect();
    let tops = [i(j1 + j2 + j4 + j5), i(j2 + j3 + j5 + j6), i(j3 + j1 + j6 + j4)];
    let t_min = *sums.iter().max().unwrap();
    let t_max = *tops.iter().min().unwrap();
    if t_min > t_max {
        return 0.0;
    }
    let ln_pref: f64 = 0.5 * triads.iter().map(|&(a, b, c)| ln_delta(a, b, c)).sum::<f64>();
    let mut sum = 0.0;
    for t in t_min..=t_max {
        let ln_den: f64 = sums.iter().map(|&s| ln_fact(t - s)).sum::<f64>() + tops.iter().map(|&u| ln_fact(u - t)).sum::<f64>();
        sum += sign(t) * (ln_pref + ln_fact(t + 1) - ln_den).exp();
    }
    sum
}

/// Reduced matrix element `⟨J′ I F′‖T⁽²⁾‖J I F⟩` of an operator acting on the
/// electronic part only, from `⟨J′‖T⁽²⁾‖J⟩`.
pub fn hyperfine_reduced_me(j_prime: HalfInt, j: HalfInt, i: HalfInt, f_prime: HalfInt, f: HalfInt, reduced_me: f64) -> f64 {
    let two = HalfInt::from_int(2);
    if !triangle(j, i, f) || !triangle(j_prime, i, f_prime) || !triangle(f_prime, two, f) {
        return 0.0;
    }
    let phase = sign(half((f + j_prime + i).twice()).expect("integer phase"));
    let weight = (((f_prime.twice() + 1) * (f.twice() + 1)) as f64).sqrt();
    phase * weight * wigner_6j(j, i, f, f_prime, two, j_prime) * reduced_me
}
