//! Complex Gamma function.
//!
//! Lanczos approximation with Pugh's `r = 10.900511` coefficient set,
//! evaluated in log form, plus the reflection formula for `Re z < 1/2`.

use crate::common::C64;
use crate::error::{MtmError, Result};
use std::f64::consts::PI;

const GAMMA_R: f64 = 10.900511;

const GAMMA_DK: [f64; 11] = [
    2.48574089138753565546e-5,
    1.05142378581721974210,
    -3.45687097222016235469,
    4.51227709466894823700,
    -2.98285225323576655721,
    1.05639711577126713077,
    -1.95428773191645869583e-1,
    1.70970543404441224307e-2,
    -5.71926117404305781283e-4,
    4.63399473359905636708e-6,
    -2.71994908488607703910e-9,
];

/// `ln(2 √(e/π))`.
const LN_TWO_SQRT_E_OVER_PI: f64 = 0.620_782_237_635_245_2;

/// `ln Γ(z)` for `Re z >= 1/2` (principal branch up to a multiple of 2πi).
fn ln_gamma_right(z: C64) -> C64 {
    let s = GAMMA_DK
        .iter()
        .enumerate()
        .skip(1)
        .fold(C64::new(GAMMA_DK[0], 0.0), |s, (i, &dk)| s + dk / (z + (i as f64 - 1.0)));
    let base = (z - 0.5 + GAMMA_R) / std::f64::consts::E;
    s.ln() + LN_TWO_SQRT_E_OVER_PI + (z - 0.5) * base.ln()
}

fn is_pole(z: C64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// `Γ(z)`; fails at the poles `0, -1, -2, …`.
pub fn gamma(z: C64) -> Result<C64> {
    if is_pole(z) {
        return Err(MtmError::invalid(format!("gamma pole at {z}")));
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(MtmError::invalid("gamma argument is not finite"));
    }
    if z.re < 0.5 {
        let w = 1.0 - z;
        let denom = (z * PI).sin() * ln_gamma_right(w).exp();
        Ok(C64::new(PI, 0.0) / denom)
    } else {
        Ok(ln_gamma_right(z).exp())
    }
}

/// `1/Γ(z)`, entire; zero at the poles of Γ.
pub fn recip_gamma(z: C64) -> C64 {
    if is_pole(z) {
        return C64::new(0.0, 0.0);
    }
    if z.re < 0.5 {
        let w = 1.0 - z;
        (z * PI).sin() * ln_gamma_right(w).exp() / PI
    } else {
        (-ln_gamma_right(z)).exp()
    }
}
