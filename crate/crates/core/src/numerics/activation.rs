use crate::scalar::Scalar;

/// `ln(1 + e^x)`, evaluated without overflow for large `x`.
#[inline]
pub fn softplus<T: Scalar>(x: T) -> T {
    if x > T::lit(30.0) {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Single-precision `e^x` without branches or libm calls, so loops over
/// slices vectorise. Range reduction by `ln 2` in two parts, then a
/// degree-6 Taylor polynomial on `|r| <= ln2 / 2`; error stays within a
/// couple of ulps. Inputs are clamped to the finite range.
#[inline(always)]
pub fn exp_f32(x: f32) -> f32 {
    const LOG2E: f32 = std::f32::consts::LOG2_E;
    const LN2_HI: f32 = 0.693_145_75;
    const LN2_LO: f32 = 1.428_606_8e-6;
    // adding then subtracting 1.5 * 2^23 rounds to the nearest integer
    const ROUND: f32 = 12_582_912.0;
    let x = x.clamp(-87.0, 88.0);
    let n = (x * LOG2E + ROUND) - ROUND;
    let r = (x - n * LN2_HI) - n * LN2_LO;
    let p = 1.0
        + r * (1.0
            + r * (0.5
                + r * (1.0 / 6.0 + r * (1.0 / 24.0 + r * (1.0 / 120.0 + r * (1.0 / 720.0))))));
    // n lies in [-126, 127] after the clamp, so the biased exponent never wraps
    let scale = f32::from_bits(((n as i32).wrapping_add(127) as u32) << 23);
    p * scale
}

/// Logistic function over `f32`, built on [`exp_f32`].
#[inline(always)]
pub fn sigmoid_f32(x: f32) -> f32 {
    1.0 / (1.0 + exp_f32(-x))
}

/// `tanh` over `f32` as `2 sigmoid(2x) - 1`; absolute error near 1e-7.
#[inline(always)]
pub fn tanh_f32(x: f32) -> f32 {
    2.0 / (1.0 + exp_f32(-2.0 * x)) - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_f32_kernels_track_libm() {
        let mut worst = (0.0f64, 0.0f64, 0.0f64);
        for i in -200_000..=200_000 {
            let x = i as f32 * 4.0e-4;
            let e = (x as f64).exp();
            worst.0 = worst.0.max(((exp_f32(x) as f64) - e).abs() / e);
            let s = 1.0 / (1.0 + (-(x as f64)).exp());
            worst.1 = worst.1.max(((sigmoid_f32(x) as f64) - s).abs());
            worst.2 = worst.2.max(((tanh_f32(x) as f64) - (x as f64).tanh()).abs());
        }
        assert!(worst.0 < 3e-7, "exp rel {}", worst.0);
        assert!(worst.1 < 2e-7, "sigmoid abs {}", worst.1);
        assert!(worst.2 < 3e-7, "tanh abs {}", worst.2);
        assert_eq!(exp_f32(-1000.0), exp_f32(-87.0));
        assert!(exp_f32(1000.0).is_finite());
        assert!(sigmoid_f32(-200.0) > 0.0 && sigmoid_f32(-200.0) < 1e-37);
        assert_eq!(tanh_f32(50.0), 1.0);
    }
    use proptest::prelude::*;

    #[test]
    fn softplus_reference_values() {
        assert!((softplus(0.0f64) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((softplus(50.0f64) - 50.0).abs() < 1e-12);
        // ln(1 + e^-20) to 17 significant digits
        let expected = 2.061_153_620_314_381_5e-9;
        assert!((softplus(-20.0f64) - expected).abs() < 1e-22);
        assert!(softplus(1000.0f64).is_finite());
        assert!(softplus(-1000.0f64) >= 0.0);
    }

    #[test]
    fn sigmoid_is_symmetric() {
        for x in [-30.0, -2.0, 0.0, 0.5, 40.0f64] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn softplus_bounds_and_monotone(x in -700.0f64..700.0, dx in 1e-3f64..10.0) {
            let y = softplus(x);
            prop_assert!(y >= 0.0);
            prop_assert!(y >= x);
            prop_assert!(softplus(x + dx) >= y);
        }
    }
}
