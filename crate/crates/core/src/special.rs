//! Special functions needed by the closed-form moment formulas.

/// Lower incomplete gamma function `γ(s, x) = ∫_0^x t^{s-1} e^{-t} dt` for `s > 0`, `x ≥ 0`.
///
/// Series for small arguments, continued fraction for the upper tail otherwise.
pub fn lower_gamma(s: f64, x: f64) -> f64 {
    debug_assert!(s > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < s + 1.0 {
        lower_gamma_series(s, x)
    } else {
        gamma(s) - upper_gamma_cf(s, x)
    }
}

fn lower_gamma_series(s: f64, x: f64) -> f64 {
    // x^s e^{-x} Σ x^n / (s (s+1) ... (s+n))
    let mut term = 1.0 / s;
    let mut sum = term;
    let mut denom = s;
    for _ in 0..10_000 {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() <= sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (s * x.ln() - x).exp()
}

fn upper_gamma_cf(s: f64, x: f64) -> f64 {
    // modified Lentz
    let tiny = 1e-300;
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (s * x.ln() - x).exp() * h
}

/// Gamma function via the Lanczos approximation (g = 7, n = 9).
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + G + 0.5;
        for (i, c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// `∫_a^b v^{s-1} e^{-λ v} dv` for `0 ≤ a ≤ b`, `s > 0`, `λ > 0`.
pub fn weighted_power_integral(s: f64, lambda: f64, a: f64, b: f64) -> f64 {
    debug_assert!(lambda > 0.0 && b >= a);
    let scale = lambda.powf(-s);
    scale * (lower_gamma(s, lambda * b) - lower_gamma(s, lambda * a))
}
