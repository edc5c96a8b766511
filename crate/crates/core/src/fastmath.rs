//! Branch-free `exp` on the negative half-line, used by the bulk Hessian
//! kernels where `f64::exp` dominates the cost.

const MAGIC: f64 = 6_755_399_441_055_744.0;
const LN2_HI: f64 = 0.693_147_180_369_123_8;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
const TAYLOR: [f64; 13] = [
    1.0 / 479_001_600.0,
    1.0 / 39_916_800.0,
    1.0 / 3_628_800.0,
    1.0 / 362_880.0,
    1.0 / 40_320.0,
    1.0 / 5_040.0,
    1.0 / 720.0,
    1.0 / 120.0,
    1.0 / 24.0,
    1.0 / 6.0,
    0.5,
    1.0,
    1.0,
];

/// `eˣ` for `x ≤ 0`; inputs below −700 are clamped (result is below 1e−304).
#[inline(always)]
pub(crate) fn exp_neg(x: f64) -> f64 {
    let x = x.max(-700.0);
    let kf = x * std::f64::consts::LOG2_E + MAGIC;
    let k = kf - MAGIC;
    let r = x - k * LN2_HI - k * LN2_LO;
    let mut p = TAYLOR[0];
    for &c in &TAYLOR[1..] {
        p = p * r + c;
    }
    let ki = kf.to_bits().wrapping_sub(MAGIC.to_bits());
    p * f64::from_bits(ki.wrapping_add(1023) << 52)
}

/// `σ'(s)` through [`exp_neg`].
#[inline(always)]
pub(crate) fn sigmoid_prime_fast(s: f64) -> f64 {
    let e = exp_neg(-s.abs());
    let q = 1.0 + e;
    e / (q * q)
}
