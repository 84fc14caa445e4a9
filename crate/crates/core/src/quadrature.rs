//! One-dimensional quadrature and special functions used by the kernel
//! transforms.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One G7K15 panel: (Kronrod estimate, |Kronrod − Gauss|).
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// The interval is first cut into `pieces` equal panels (useful for
/// oscillatory integrands), then panels are bisected until the summed error
/// estimate is below `rel_tol·∫|f| + abs_tol`.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    pieces: usize,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let pieces = pieces.max(1);
    let mut panels: Vec<(f64, f64, f64, f64)> = (0..pieces)
        .map(|i| {
            let lo = a + (b - a) * i as f64 / pieces as f64;
            let hi = a + (b - a) * (i + 1) as f64 / pieces as f64;
            let (v, e) = gk15(&f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    for _ in 0..2000 {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let scale: f64 = panels.iter().map(|p| p.2.abs()).sum::<f64>().max(total.abs());
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= rel_tol * scale + abs_tol {
            return Ok(total);
        }
        // bisect the worst panel
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.3 > acc.1 { (i, p.3) } else { acc });
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
    let total: f64 = panels.iter().map(|p| p.2).sum();
    let err: f64 = panels.iter().map(|p| p.3).sum();
    let scale = panels.iter().map(|p| p.2.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    if err <= rel_tol * scale + abs_tol {
        Ok(total)
    } else {
        Err(Error::Quadrature {
            tol: rel_tol,
            estimate: err / scale,
        })
    }
}

/// Sine integral `Si(x) = ∫₀ˣ sin t / t dt`.
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x <= 2.0 {
        // power series
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x2 / ((2.0 * n) * (2.0 * n + 1.0));
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() {
                return sum;
            }
        }
    }
    // continued fraction for E1(ix) (modified Lentz)
    let tiny = 1e-300;
    let mut b = (1.0, x);
    let mut c = (1.0 / tiny, 0.0);
    let mut d = cdiv((1.0, 0.0), b);
    let mut h = d;
    let mut i = 2.0f64;
    loop {
        let a = -(i - 1.0) * (i - 1.0);
        b.0 += 2.0;
        d = cdiv((1.0, 0.0), cadd(cscale(d, a), b));
        c = cadd(b, cdiv((a, 0.0), c));
        let del = cmul(c, d);
        h = cmul(h, del);
        if (del.0 - 1.0).abs() + del.1.abs() < 1e-16 || i > 10_000.0 {
            break;
        }
        i += 1.0;
    }
    let h = cmul(h, (x.cos(), -x.sin()));
    FRAC_PI_2 + h.1
}

fn cadd(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 + b.0, a.1 + b.1)
}
fn cscale(a: (f64, f64), s: f64) -> (f64, f64) {
    (a.0 * s, a.1 * s)
}
fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}
fn cdiv(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let den = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / den, (a.1 * b.0 - a.0 * b.1) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_polynomial_and_oscillatory() {
        let v = integrate(|x| x * x, 0.0, 3.0, 1, 1e-12, 0.0).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let v = integrate(|x| (20.0 * x).sin(), 0.0, PI, 20, 1e-12, 1e-15).unwrap();
        assert!(v.abs() < 1e-12);
        let v = integrate(|x| x.sqrt(), 0.0, 1.0, 1, 1e-11, 0.0).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn sine_integral_reference_values() {
        // Abramowitz & Stegun table 5.1
        assert!((sine_integral(1.0) - 0.946_083_070_367_183).abs() < 1e-14);
        assert!((sine_integral(5.0) - 1.549_931_244_944_674).abs() < 1e-13);
        assert!((sine_integral(10.0) - 1.658_347_594_218_874).abs() < 1e-13);
        assert!((sine_integral(2.0) - 1.605_412_976_802_695).abs() < 1e-14);
        assert!((sine_integral(1e4) - FRAC_PI_2).abs() < 2e-4);
        assert_eq!(sine_integral(0.0), 0.0);
    }

    #[test]
    fn sine_integral_matches_quadrature() {
        for &x in &[0.3, 2.5, 7.0, 33.0] {
            let q = integrate(|t| if t == 0.0 { 1.0 } else { t.sin() / t }, 0.0, x, 20, 1e-14, 0.0).unwrap();
            assert!((q - sine_integral(x)).abs() < 1e-12, "x = {x}");
        }
    }
}
