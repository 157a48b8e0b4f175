//! Bessel function of the first kind, order zero.
//!
//! Power series below 8, Miller backward recurrence normalised by
//! `J0 + 2 Σ J2k = 1` up to 25, Hankel asymptotic expansion beyond.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x < 8.0 {
        series(x)
    } else if x < 25.0 {
        miller(x)
    } else {
        asymptotic(x)
    }
}

fn series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn miller(x: f64) -> f64 {
    let mut n = x as usize + 40;
    if n % 2 == 1 {
        n += 1;
    }
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-30; // J_k
    let mut norm = 0.0;
    for k in (1..=n).rev() {
        if k % 2 == 0 {
            norm += 2.0 * cur;
        }
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += cur;
    cur / norm
}

fn asymptotic(x: f64) -> f64 {
    // Hankel symbols (0, k) / (2x)^k with ratio −(2k − 1)² / (8 k x)
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let next = term * -((2.0 * kf - 1.0).powi(2)) / (8.0 * kf * x);
        if next.abs() >= last || next.abs() < 1e-18 {
            break;
        }
        last = next.abs();
        term = next;
        // (−1)^{k/2} for even k, (−1)^{(k−1)/2} for odd k
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
    }
    let (s, c) = x.sin_cos();
    let cos_chi = (c + s) * FRAC_1_SQRT_2;
    let sin_chi = (s - c) * FRAC_1_SQRT_2;
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values at 20 digits
    #[allow(clippy::excessive_precision)]
    const TABLE: [(f64, f64); 14] = [
        (0.0, 1.0),
        (0.5, 0.938_469_807_240_812_904_2),
        (1.0, 0.765_197_686_557_966_551_4),
        (5.0, -0.177_596_771_314_338_304_3),
        (8.0, 0.171_650_807_137_553_906_1),
        (10.0, -0.245_935_764_451_348_335_2),
        (12.5, 0.146_884_054_700_421_102_3),
        (20.0, 0.167_024_664_340_583_154_7),
        (25.0, 0.096_266_783_275_958_116_17),
        (30.0, -0.086_367_983_581_040_211_34),
        (50.0, 0.055_812_327_669_251_815_0),
        (100.0, 0.019_985_850_304_223_122_42),
        (1000.0, 0.024_786_686_152_420_174_56),
        (12345.6, -0.000_529_050_080_739_178_170_7),
    ];

    #[test]
    fn matches_reference_values() {
        for (x, want) in TABLE {
            let got = j0(x);
            assert!((got - want).abs() < 2e-15, "j0({x}) = {got}, want {want}");
        }
        assert!(j0(2.404_825_557_695_773).abs() < 1e-15);
        assert_eq!(j0(-3.0), j0(3.0));
    }

    #[test]
    fn continuous_across_branches() {
        for x in [8.0f64, 25.0] {
            let lo = x - 1e-9;
            assert!((j0(lo) - j0(x)).abs() < 1e-9);
        }
        for x in [3.0f64, 6.0, 7.9] {
            assert!((series(x) - miller(x)).abs() < 1e-14, "{x}");
        }
        // asymptotic and recurrence agree in their overlap
        for x in [25.0f64, 30.0, 40.0] {
            assert!((asymptotic(x) - miller(x)).abs() < 1e-14, "{x}");
        }
    }
}
