//! Standard normal distribution functions.
//!
//! `cdf` goes through the complementary error function so that the lower
//! tail keeps full relative precision; `inv_cdf` is Wichura's AS241
//! rational approximation followed by one Halley step.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Inverse of [`cdf`]. Returns `-inf`/`+inf` at 0 and 1 and NaN outside [0, 1].
pub fn inv_cdf(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    // 1 - p is exact for p >= 0.5, so work in the lower tail throughout.
    if p > 0.5 {
        return -lower_tail_inverse(1.0 - p);
    }
    lower_tail_inverse(p)
}

fn lower_tail_inverse(p: f64) -> f64 {
    let x = as241(p);
    // One Halley step.
    let e = cdf(x) - p;
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    let x1 = x - u / (1.0 + 0.5 * x * u);
    if x1.is_finite() {
        x1
    } else {
        x
    }
}

// Coefficients as published.
#[allow(clippy::excessive_precision)]
fn as241(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2_509.080_928_730_122_7 * r + 33_430.575_583_588_128) * r
                + 67_265.770_927_008_700)
                * r
                + 45_921.953_931_549_871)
                * r
                + 13_731.693_765_509_461)
                * r
                + 1_971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5_226.495_278_852_545_5 * r + 28_729.085_735_721_943) * r
                + 39_307.895_800_092_710)
                * r
                + 21_213.794_301_586_595)
                * r
                + 5_394.196_021_424_751_1)
                * r
                + 687.187_007_492_057_91)
                * r
                + 42.313_330_701_600_911)
                * r
                + 1.0);
    }
    let r0 = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r0.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414_1e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_61)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691_4)
            * r
            + 4.630_337_846_156_545_3)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_344_9e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_07)
                * r
                + 0.689_767_334_985_100_0)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_758_8)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_123)
            * r
            + 0.296_560_571_828_504_89)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114_4)
            * r
            + 6.657_904_643_501_103_8)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446_0e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_132_6e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_81)
                * r
                + 0.599_832_206_555_887_94)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Bivariate standard normal CDF `P(X <= h, Y <= k)` with correlation `r`.
///
/// Integrates the density derivative with respect to the correlation,
/// `Phi2(h,k;r) = Phi(h)Phi(k) + int_0^r phi2(h,k;s) ds`, after the
/// substitution `s = sin(theta)` which removes the endpoint singularity.
pub fn bivariate_cdf(h: f64, k: f64, r: f64) -> f64 {
    assert!((-1.0..=1.0).contains(&r), "correlation {r} outside [-1, 1]");
    let base = cdf(h) * cdf(k);
    if r == 0.0 {
        return base;
    }
    let integrand = |theta: f64| {
        let (s, c) = theta.sin_cos();
        if c <= 0.0 {
            return 0.0;
        }
        (-(h * h - 2.0 * h * k * s + k * k) / (2.0 * c * c)).exp()
    };
    let upper = r.asin();
    let integral = adaptive_simpson(&integrand, 0.0, upper, 1e-15, 50);
    base + integral / (2.0 * PI)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        // Reference values from high-precision tables.
        assert!((cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((cdf(-1.644_853_626_951_472_2) - 0.05).abs() < 1e-15);
        assert!((cdf(-8.0) - 6.220_960_574_271_785e-16).abs() < 1e-28);
    }

    #[test]
    fn inverse_round_trips() {
        for &p in &[1e-300, 1e-12, 1e-6, 0.001, 0.05, 0.3, 0.5, 0.7, 0.95, 0.999, 1.0 - 1e-12] {
            let x = inv_cdf(p);
            let back = cdf(x);
            assert!(
                ((back - p) / p).abs() < 1e-12 || (back - p).abs() < 1e-15,
                "p = {p}: x = {x}, cdf(x) = {back}"
            );
        }
        assert!((inv_cdf(0.05) + 1.644_853_626_951_472_2).abs() < 1e-13);
        assert_eq!(inv_cdf(0.0), f64::NEG_INFINITY);
        assert_eq!(inv_cdf(1.0), f64::INFINITY);
        assert!(inv_cdf(1.5).is_nan());
    }

    #[test]
    fn bivariate_special_cases() {
        // Zero correlation factorises; orthant probability at the origin is
        // 1/4 + asin(r)/(2 pi).
        assert!((bivariate_cdf(0.3, -0.2, 0.0) - cdf(0.3) * cdf(-0.2)).abs() < 1e-15);
        for &r in &[-0.9, -0.5, 0.1, 0.5, 0.9, 0.99] {
            let exact = 0.25 + f64::asin(r) / (2.0 * PI);
            assert!((bivariate_cdf(0.0, 0.0, r) - exact).abs() < 1e-12, "r = {r}");
        }
        // r = 1 collapses to Phi(min(h, k)).
        assert!((bivariate_cdf(-0.4, 0.7, 1.0) - cdf(-0.4)).abs() < 1e-9);
    }

    #[test]
    fn bivariate_matches_conditional_expectation() {
        // Independent route: E[Phi((h - sqrt(r) Y)/sqrt(1-r))^2] by dense
        // trapezoid integration over the factor.
        let h = inv_cdf(0.05);
        let r: f64 = 0.28;
        let (a, b, steps) = (-10.0, 10.0, 40_000);
        let dy = (b - a) / steps as f64;
        let mut acc = 0.0;
        for i in 0..=steps {
            let y = a + i as f64 * dy;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            let c = cdf((h - r.sqrt() * y) / (1.0 - r).sqrt());
            acc += w * c * c * pdf(y);
        }
        acc *= dy;
        assert!((bivariate_cdf(h, h, r) - acc).abs() < 1e-10);
    }
}
