//! Complex gamma function (Lanczos, g = 7, nine terms) with reflection.

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Beyond this imaginary part `sin(πz)` is handled in log form.
const DIRECT_IM_LIMIT: f64 = 100.0;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `ln Γ(z)` for `Re z >= 0.5`.
fn lanczos_ln(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut a = c(LANCZOS[0]);
    for (i, &coef) in LANCZOS.iter().enumerate().skip(1) {
        a += coef / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
}

/// `ln sin(πz)`, stable for large `|Im z|`.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let w = z * PI;
    let i = Complex64::i();
    if w.im > 20.0 {
        -i * w + (c(1.0) - (2.0 * i * w).exp()).ln() - (-2.0 * i).ln()
    } else if w.im < -20.0 {
        i * w + (c(1.0) - (-2.0 * i * w).exp()).ln() - (2.0 * i).ln()
    } else {
        w.sin().ln()
    }
}

/// Principal-ish `ln Γ(z)`; the imaginary part is only defined modulo `2π`.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re >= 0.5 {
        lanczos_ln(z)
    } else {
        c(PI.ln()) - ln_sin_pi(z) - lanczos_ln(c(1.0) - z)
    }
}

fn is_pole(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re.fract() == 0.0
}

/// `Γ(z)`; infinite at the non-positive integers.
pub fn gamma(z: Complex64) -> Complex64 {
    if is_pole(z) {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    if z.re >= 0.5 {
        lanczos_ln(z).exp()
    } else if z.im.abs() < DIRECT_IM_LIMIT {
        let s = (z * PI).sin();
        c(PI) / (s * lanczos_ln(c(1.0) - z).exp())
    } else {
        ln_gamma(z).exp()
    }
}

/// `1/Γ(z)`, entire; exactly zero at the poles of `Γ`.
pub fn rgamma(z: Complex64) -> Complex64 {
    if is_pole(z) {
        return c(0.0);
    }
    if z.re >= 0.5 {
        (-lanczos_ln(z)).exp()
    } else if z.im.abs() < DIRECT_IM_LIMIT {
        (z * PI).sin() * lanczos_ln(c(1.0) - z).exp() / PI
    } else {
        (-ln_gamma(z)).exp()
    }
}

pub fn gamma_real(x: f64) -> f64 {
    gamma(c(x)).re
}

/// Distance from `z` to the nearest pole of `Γ` (non-positive integer).
pub fn pole_distance(z: Complex64) -> f64 {
    let k = z.re.round().min(0.0);
    (z - k).norm()
}
