//! Special functions on the positive real axis: ln Γ, ln G (Barnes) and
//! ψ^(−2)(z) = ∫₀^z ln Γ(x) dx.
//!
//! Both ln Γ and ln G are evaluated from Taylor series about 1 whose
//! coefficients are Riemann zeta values, shifted into |z − 1| ≤ ½ with the
//! functional recursions. Large arguments of ln Γ use Stirling's series.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_6;
/// ln(2π)
pub const LN_2PI: f64 = 1.837_877_066_409_345_483_6;

const MAX_TAYLOR_ORDER: usize = 64;

/// A strictly positive, finite real number.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PositiveReal(f64);

impl PositiveReal {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::Domain {
                func: "PositiveReal",
                value,
                domain: "(0, inf)",
            })
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PositiveReal {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

/// ζ(k) − 1 for k = 0..MAX_TAYLOR_ORDER (entries 0 and 1 unused).
fn zeta_minus_one() -> &'static [f64; MAX_TAYLOR_ORDER + 1] {
    static TABLE: OnceLock<[f64; MAX_TAYLOR_ORDER + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; MAX_TAYLOR_ORDER + 1];
        for (k, slot) in t.iter_mut().enumerate().skip(2) {
            *slot = zeta_minus_one_em(k as f64);
        }
        t
    })
}

// Bernoulli numbers B_2, B_4, ..., B_20.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// ζ(s) − 1 by Euler–Maclaurin summation with cut N = 10.
fn zeta_minus_one_em(s: f64) -> f64 {
    const N: f64 = 10.0;
    // sum m = 2..9 from the smallest term upwards
    let mut sum = 0.0;
    for m in (2..10).rev() {
        sum += (m as f64).powf(-s);
    }
    let mut tail = N.powf(1.0 - s) / (s - 1.0) + 0.5 * N.powf(-s);
    // rising factorial s(s+1)...(s+2j-2) / (2j)! * N^(-s-2j+1)
    let mut coeff = s / 2.0 * N.powf(-s - 1.0);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b * coeff;
        tail += term;
        if term.abs() < 1e-18 * tail.abs() {
            break;
        }
        let j2 = 2.0 * (j as f64 + 1.0);
        coeff *= (s + j2 - 1.0) * (s + j2) / ((j2 + 1.0) * (j2 + 2.0)) / (N * N);
    }
    sum + tail
}

/// ln Γ(1 + w) for |w| ≤ ½.
fn ln_gamma_1p(w: f64) -> f64 {
    let z = zeta_minus_one();
    let mut acc = 0.0;
    let mut pow = -w;
    for (k, zk) in z.iter().enumerate().skip(2) {
        // (−1)^k w^k
        pow *= -w;
        let term = zk * pow / k as f64;
        acc += term;
        if term.abs() < 1e-19 {
            break;
        }
    }
    -w.ln_1p() + w * (1.0 - EULER_GAMMA) + acc
}

/// ln G(1 + w) for |w| ≤ ½.
fn ln_barnes_g_1p(w: f64) -> f64 {
    let z = zeta_minus_one();
    let mut acc = 0.0;
    let mut pow = -w;
    for (k, zk) in z.iter().enumerate().skip(2) {
        pow *= -w;
        let term = zk * pow * w / (k as f64 + 1.0);
        acc += term;
        if term.abs() < 1e-19 {
            break;
        }
    }
    0.5 * w * LN_2PI - 1.5 * w - 0.5 * EULER_GAMMA * w * w + w.ln_1p() + acc
}

fn ln_gamma_stirling(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut p = inv;
    for (k, b) in BERNOULLI_EVEN.iter().take(8).enumerate() {
        let k2 = 2.0 * (k as f64 + 1.0);
        series += b / (k2 * (k2 - 1.0)) * p;
        p *= inv2;
    }
    (z - 0.5) * z.ln() - z + 0.5 * LN_2PI + series
}

pub(crate) fn ln_gamma_unchecked(z: f64) -> f64 {
    if z < 0.5 {
        ln_gamma_1p(z) - z.ln()
    } else if z <= 1.5 {
        ln_gamma_1p(z - 1.0)
    } else if z <= 2.5 {
        let w = z - 2.0;
        w.ln_1p() + ln_gamma_1p(w)
    } else if z >= 10.0 {
        ln_gamma_stirling(z)
    } else {
        let mut shifted = z;
        let mut prod = 1.0;
        while shifted < 10.0 {
            prod *= shifted;
            shifted += 1.0;
        }
        ln_gamma_stirling(shifted) - prod.ln()
    }
}

/// ln Γ(z) for z > 0.
pub fn ln_gamma(z: PositiveReal) -> f64 {
    ln_gamma_unchecked(z.get())
}

pub(crate) fn ln_barnes_g_unchecked(z: f64) -> f64 {
    if z < 0.5 {
        // G(z) = G(z+1) / Γ(z)
        ln_barnes_g_1p(z) - ln_gamma_unchecked(z)
    } else {
        let mut shifted = z;
        let mut acc = 0.0;
        while shifted > 1.5 {
            shifted -= 1.0;
            acc += ln_gamma_unchecked(shifted);
        }
        acc + ln_barnes_g_1p(shifted - 1.0)
    }
}

/// ln G(z) of the Barnes G-function, 0 < z ≤ 4.
pub fn ln_barnes_g(z: PositiveReal) -> Result<f64> {
    let v = z.get();
    if v > 4.0 {
        return Err(Error::Domain {
            func: "ln_barnes_g",
            value: v,
            domain: "(0, 4]",
        });
    }
    Ok(ln_barnes_g_unchecked(v))
}

pub(crate) fn psi_m2_unchecked(z: f64) -> f64 {
    0.5 * z * (1.0 - z) + 0.5 * z * LN_2PI + z * ln_gamma_unchecked(z) - ln_barnes_g_unchecked(1.0 + z)
}

/// ψ^(−2)(z) = ∫₀^z ln Γ(x) dx from its closed form in ln Γ and ln G, 0 < z ≤ 3.
pub fn psi_m2(z: PositiveReal) -> Result<f64> {
    check_psi_domain("psi_m2", z)?;
    Ok(psi_m2_unchecked(z.get()))
}

fn check_psi_domain(func: &'static str, z: PositiveReal) -> Result<()> {
    if z.get() > 3.0 {
        return Err(Error::Domain {
            func,
            value: z.get(),
            domain: "(0, 3]",
        });
    }
    Ok(())
}

/// ψ^(−2)(z) by adaptive Gauss–Kronrod quadrature of ln Γ.
///
/// Independent of the Barnes G route. The logarithmic singularity at 0 is
/// removed analytically on (0, a], a = min(z, 0.1), using
/// ln Γ(x) = −ln x + ln Γ(1 + x).
pub fn psi_m2_oracle(z: PositiveReal) -> Result<f64> {
    check_psi_domain("psi_m2_oracle", z)?;
    let z = z.get();
    let a = z.min(0.1);
    let tol = 1e-13;
    let near_zero = a - a * a.ln() + integrate_gk(|x| ln_gamma_1p(x), 0.0, a, tol)?;
    if z > a {
        Ok(near_zero + integrate_gk(ln_gamma_unchecked, a, z, tol)?)
    } else {
        Ok(near_zero)
    }
}

// Gauss–Kronrod 7/15 abscissae and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive bisection on a work stack; absolute tolerance `tol` on the total.
pub(crate) fn integrate_gk<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    const MAX_INTERVALS: usize = 4000;
    let mut stack = vec![(a, b, tol)];
    let mut total = 0.0;
    let mut achieved = 0.0;
    let mut evaluated = 0;
    while let Some((lo, hi, local_tol)) = stack.pop() {
        let (value, err) = gk15(&f, lo, hi);
        evaluated += 1;
        if err <= local_tol || evaluated > MAX_INTERVALS || (hi - lo) < 1e-14 * (1.0 + lo.abs()) {
            if err > local_tol {
                achieved += err;
            }
            total += value;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * local_tol));
            stack.push((mid, hi, 0.5 * local_tol));
        }
    }
    if achieved > tol {
        return Err(Error::Quadrature { achieved });
    }
    Ok(total)
}

/// Γ(z) convenience wrapper used in a few closed forms.
pub fn gamma(z: PositiveReal) -> f64 {
    ln_gamma(z).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pr(v: f64) -> PositiveReal {
        PositiveReal::new(v).unwrap()
    }

    // mpmath, 30 digits
    const LN_GAMMA_REF: [(f64, f64); 10] = [
        (0.25, 1.288_022_524_698_077_457_4),
        (0.5, 0.572_364_942_924_700_087_07),
        (0.75, 0.203_280_951_431_295_371_48),
        (1.5, -0.120_782_237_635_245_222_35),
        (2.5, 0.284_682_870_472_919_159_63),
        (3.7, 1.428_072_326_665_388_129_2),
        (10.0, 12.801_827_480_081_469_611),
        (25.3, 55.746_181_183_584_592_334),
        (49.9, 144.175_646_053_750_332_98),
        (1e-3, 6.907_178_885_383_853_661_7),
    ];

    #[test]
    fn ln_gamma_reference_values() {
        for (z, want) in LN_GAMMA_REF {
            let got = ln_gamma(pr(z));
            assert!(((got - want) / want).abs() < 1e-13, "z={z}: {got} vs {want}");
        }
    }

    #[test]
    fn ln_gamma_integers_and_half() {
        assert_eq!(ln_gamma(pr(1.0)), 0.0);
        assert_eq!(ln_gamma(pr(2.0)), 0.0);
        assert!((ln_gamma(pr(0.5)) - 0.5 * PI.ln()).abs() < 1e-15);
        assert!((ln_gamma(pr(5.0)) - 24f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn ln_gamma_relative_accuracy_near_zeros() {
        // ln Γ(1 + w) ≈ −γ w, ln Γ(2 + w) ≈ (1 − γ) w
        let w = 2f64.powi(-30);
        let got = ln_gamma(pr(1.0 + w));
        let want = -EULER_GAMMA * w;
        assert!(((got - want) / want).abs() < 1e-8);
        let got2 = ln_gamma(pr(2.0 + w));
        let want2 = (1.0 - EULER_GAMMA) * w;
        assert!(((got2 - want2) / want2).abs() < 1e-8);
    }

    #[test]
    fn barnes_g_reference_values() {
        let cases = [
            (0.5, -0.505_433_054_489_695_382_8),
            (1.5, 0.066_931_888_435_004_704_27),
            (2.5, -0.053_850_349_200_240_518_07),
            (3.5, 0.230_832_521_272_678_641_56),
            (4.0, std::f64::consts::LN_2),
            (0.1, -2.218_184_611_604_620_861_2),
        ];
        for (z, want) in cases {
            let got = ln_barnes_g(pr(z)).unwrap();
            assert!((got - want).abs() < 1e-14, "z={z}: {got} vs {want}");
        }
    }

    #[test]
    fn barnes_g_at_small_integers_is_zero() {
        for z in [1.0, 2.0, 3.0] {
            assert_eq!(ln_barnes_g(pr(z)).unwrap(), 0.0);
        }
    }

    #[test]
    fn barnes_g_rejects_out_of_range() {
        assert!(ln_barnes_g(pr(4.5)).is_err());
        assert!(PositiveReal::new(0.0).is_err());
        assert!(PositiveReal::new(-1.0).is_err());
        assert!(PositiveReal::new(f64::NAN).is_err());
    }

    #[test]
    fn psi_m2_reference_values() {
        let cases = [
            (0.25, 0.582_473_645_971_880_175_85),
            (0.5, 0.803_719_849_629_681_710_15),
            (0.75, 0.896_162_460_558_807_156_67),
            (1.0, 0.918_938_533_204_672_741_78),
            (2.0, 0.837_877_066_409_345_483_56),
            (0.4, 0.735_763_849_565_212_457_61),
            (1.3, 0.899_665_285_818_850_739_33),
            (2.9, 1.078_342_689_763_007_950_9),
        ];
        for (z, want) in cases {
            let closed = psi_m2(pr(z)).unwrap();
            let quad = psi_m2_oracle(pr(z)).unwrap();
            assert!((closed - want).abs() < 1e-13, "closed z={z}: {closed}");
            assert!((quad - want).abs() < 1e-12, "oracle z={z}: {quad}");
        }
    }

    #[test]
    fn psi_m2_closed_forms_at_one_and_two() {
        assert!((psi_m2(pr(1.0)).unwrap() - 0.5 * LN_2PI).abs() < 1e-15);
        assert!((psi_m2(pr(2.0)).unwrap() - (LN_2PI - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn psi_m2_small_argument() {
        // ∫₀^z (−ln x − γ x) dx
        for z in [1e-3f64, 1e-6, 1e-10] {
            let want = z - z * z.ln() - 0.5 * EULER_GAMMA * z * z;
            assert!((psi_m2(pr(z)).unwrap() - want).abs() < z * z * z + 1e-16, "{z}");
            assert!((psi_m2_oracle(pr(z)).unwrap() - want).abs() < z * z * z + 1e-16, "{z}");
        }
    }

    #[test]
    fn psi_m2_rejects_domain() {
        assert!(psi_m2(pr(3.5)).is_err());
        assert!(psi_m2_oracle(pr(3.01)).is_err());
    }

    #[test]
    fn psi_m2_derivative_is_ln_gamma() {
        let h = 1e-4;
        for i in 1..=40 {
            let z = 0.05 * i as f64 + 0.3;
            let d = (psi_m2(pr(z + h)).unwrap() - psi_m2(pr(z - h)).unwrap()) / (2.0 * h);
            assert!((d - ln_gamma(pr(z))).abs() < 1e-7, "{z}");
        }
    }

    #[test]
    fn zeta_values() {
        let z = zeta_minus_one();
        assert!((z[2] + 1.0 - PI * PI / 6.0).abs() < 1e-15);
        assert!((z[3] + 1.0 - 1.202_056_903_159_594_285_4).abs() < 1e-15);
        assert!((z[4] + 1.0 - PI.powi(4) / 90.0).abs() < 1e-15);
        let want = 2f64.powi(-40) + 3f64.powi(-40) + 4f64.powi(-40);
        assert!((z[40] - want).abs() < 1e-27);
    }
}
