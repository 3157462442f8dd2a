//! Spherical Riccati-Bessel (ĵ), Riccati-Neumann (n̂) and Riccati-Hankel
//! (ĥ±) functions of integer order for complex argument, together with
//! their first derivatives in z = kr.
//!
//! ĥ±_l = -n̂_l ± i ĵ_l are the free incoming/outgoing waves; the pair
//! satisfies the Wronskian identity ĥ⁻ dĥ⁺/dz - dĥ⁻/dz ĥ⁺ = 2i.
//!
//! Orders 0..2 use the explicit closed forms. Higher orders use the upward
//! recurrence ĉ_{l+1} = ((2l+1)/z) ĉ_l - ĉ_{l-1}, which is stable for the
//! irregular family at any z and for ĵ once |z| exceeds the order; ĵ at
//! small |z| falls back to the ascending power series. Derivatives come
//! from dĉ_l/dz = ĉ_{l-1} - (l/z) ĉ_l, never from finite differences.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Beyond this |Im z| the e^{|Im z|} envelope of every member of the family
/// exceeds the double-precision range.
const IM_OVERFLOW: f64 = 700.0;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Value and d/dz of one Riccati function at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiValue {
    pub value: Complex64,
    pub derivative: Complex64,
}

/// Incoming (-) / outgoing (+) branch selector for ĥ±.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HankelBranch {
    /// ĥ⁺, asymptotically e^{+iz}.
    Outgoing,
    /// ĥ⁻, asymptotically e^{-iz}.
    Incoming,
}

impl HankelBranch {
    fn sign(self) -> f64 {
        match self {
            HankelBranch::Outgoing => 1.0,
            HankelBranch::Incoming => -1.0,
        }
    }
}

fn check_overflow(z: Complex64) -> Result<()> {
    if z.im.abs() > IM_OVERFLOW {
        return Err(Error::Overflow(z.im.abs()));
    }
    Ok(())
}

/// Regular solution ĵ_l(z) = z j_l(z); ĵ_l(0) = 0 for every l.
pub fn riccati_j(l: u32, z: Complex64) -> Result<RiccatiValue> {
    check_overflow(z)?;
    if z == Complex64::ZERO {
        // ĵ_l ~ z^{l+1}/(2l+1)!!, so only l = 0 has a nonzero slope.
        let derivative = if l == 0 {
            Complex64::ONE
        } else {
            Complex64::ZERO
        };
        return Ok(RiccatiValue {
            value: Complex64::ZERO,
            derivative,
        });
    }
    let (sin_z, cos_z) = (z.sin(), z.cos());
    let j0 = RiccatiValue {
        value: sin_z,
        derivative: cos_z,
    };
    if l == 0 {
        return Ok(j0);
    }
    let j1 = RiccatiValue {
        value: sin_z / z - cos_z,
        derivative: j0.value - (sin_z / z - cos_z) / z,
    };
    if l == 1 {
        return Ok(j1);
    }
    if z.norm() > l as f64 {
        Ok(recur_up(l, z, j0.value, j1.value))
    } else {
        let jl = riccati_j_series(l, z);
        let jlm1 = riccati_j_series(l - 1, z);
        let derivative = jlm1 - (l as f64) / z * jl;
        Ok(RiccatiValue {
            value: jl,
            derivative,
        })
    }
}

/// Irregular solution n̂_l(z) = z n_l(z); diverges at z = 0.
pub fn riccati_n(l: u32, z: Complex64) -> Result<RiccatiValue> {
    check_overflow(z)?;
    if z == Complex64::ZERO {
        return Err(Error::Domain("riccati_n is singular at z = 0"));
    }
    let (sin_z, cos_z) = (z.sin(), z.cos());
    let n0 = RiccatiValue {
        value: -cos_z,
        derivative: sin_z,
    };
    if l == 0 {
        return Ok(n0);
    }
    let n1_value = -cos_z / z - sin_z;
    let n1 = RiccatiValue {
        value: n1_value,
        derivative: n0.value - n1_value / z,
    };
    if l == 1 {
        return Ok(n1);
    }
    Ok(recur_up(l, z, n0.value, n1.value))
}

/// Riccati-Hankel function ĥ±_l(z) = -n̂_l(z) ± i ĵ_l(z); diverges at z = 0.
pub fn riccati_h(l: u32, branch: HankelBranch, z: Complex64) -> Result<RiccatiValue> {
    check_overflow(z)?;
    if z == Complex64::ZERO {
        return Err(Error::Domain("riccati_h is singular at z = 0"));
    }
    // Work on the shared e^{±iz} envelope rather than combining n̂ and ĵ:
    // for large |Im z| one of the two would overwhelm the other.
    let s = branch.sign();
    let exp = (I * s * z).exp();
    let h0 = RiccatiValue {
        value: exp,
        derivative: I * s * exp,
    };
    if l == 0 {
        return Ok(h0);
    }
    let h1_value = (1.0 / z - I * s) * exp;
    let h1 = RiccatiValue {
        value: h1_value,
        derivative: h0.value - h1_value / z,
    };
    if l == 1 {
        return Ok(h1);
    }
    Ok(recur_up(l, z, h0.value, h1.value))
}

/// Upward three-term recurrence from the l = 0, 1 seeds, derivative from
/// the downward relation at the final order.
fn recur_up(l: u32, z: Complex64, c0: Complex64, c1: Complex64) -> RiccatiValue {
    let mut prev = c0;
    let mut cur = c1;
    for m in 1..l {
        let next = (2.0 * m as f64 + 1.0) / z * cur - prev;
        prev = cur;
        cur = next;
    }
    RiccatiValue {
        value: cur,
        derivative: prev - (l as f64) / z * cur,
    }
}

/// Ascending series ĵ_l(z) = z^{l+1} Σ_m (-z²/2)^m / (m! (2l+2m+1)!!),
/// used where the upward recurrence would amplify the irregular solution.
fn riccati_j_series(l: u32, z: Complex64) -> Complex64 {
    let mut dfact = 1.0; // (2l+1)!!
    for m in 1..=l {
        dfact *= 2.0 * m as f64 + 1.0;
    }
    let mut term = z.powu(l + 1) / dfact;
    let mut sum = term;
    let w = -z * z / 2.0;
    for m in 1..80 {
        term *= w / (m as f64 * (2.0 * (l + m) as f64 + 1.0));
        sum += term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
    }
    sum
}
