//! Exact container and witness-size bounds.
//!
//! With `s = |P|`:
//! `f(n) = (n + s³)·s`, `g(n, M) = (M + (s³+1)^(s³+s²))·(n+1)^s`,
//! `poly1(s) = (1+s³)·s`, `poly2(s) = 3s⁴ + 3s³ + 2s + 1`,
//! `α(P,E,F) = ‖E‖·poly1(s)^|F|`, `β(P,E,F) = ‖E‖^(poly1(s)·poly2(s)·|F|²)`.
//! `|F|` is the operator count of `F`. `f(n) ≤ n·poly1(s)` holds for all
//! `n ≥ 1`; `g(n, M) ≤ M·n^poly2(s)` holds for `n ≥ 2, M ≥ 1`.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::gre::Gre;
use crate::protocol::Protocol;

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

fn pow(base: &BigUint, exp: u64) -> BigUint {
    num_traits::pow(base.clone(), usize::try_from(exp).expect("exponent fits in usize"))
}

pub fn poly1(s: u64) -> BigUint {
    (big(1) + big(s).pow(3)) * big(s)
}

pub fn poly2(s: u64) -> BigUint {
    big(3) * big(s).pow(4) + big(3) * big(s).pow(3) + big(2) * big(s) + big(1)
}

pub fn f(s: u64, n: u64) -> BigUint {
    (big(n) + big(s).pow(3)) * big(s)
}

pub fn g(s: u64, n: u64, m: u64) -> BigUint {
    let s3 = big(s).pow(3);
    let inner = pow(&(s3.clone() + 1u32), (s3 + big(s).pow(2)).to_u64().expect("small exponent"));
    (big(m) + inner) * pow(&big(n + 1), s)
}

pub fn alpha(s: u64, norm: u64, length: u64) -> BigUint {
    big(norm) * pow(&poly1(s), length)
}

/// `coefficient · base^exponent`, kept factored when the power is too large
/// to materialise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerProduct {
    pub coefficient: BigUint,
    pub base: BigUint,
    pub exponent: BigUint,
}

impl PowerProduct {
    /// Upper estimate of the bit length of the value.
    pub fn bits_estimate(&self) -> f64 {
        if self.coefficient.is_zero() || (self.base.is_zero() && !self.exponent.is_zero()) {
            return 0.0;
        }
        if self.base.is_one() || self.exponent.is_zero() {
            return self.coefficient.bits() as f64;
        }
        let e = self.exponent.to_f64().unwrap_or(f64::INFINITY);
        self.coefficient.bits() as f64 + e * self.base.bits() as f64
    }

    /// The exact value when it has at most `max_bits` bits.
    pub fn value(&self, max_bits: u64) -> Option<BigUint> {
        if self.bits_estimate() > max_bits as f64 {
            return None;
        }
        if self.base.is_one() || self.exponent.is_zero() {
            return Some(self.coefficient.clone());
        }
        let e = self.exponent.to_u64()?;
        Some(&self.coefficient * pow(&self.base, e))
    }
}

impl fmt::Display for PowerProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value(4096) {
            Some(v) => write!(f, "{v}"),
            None if self.coefficient.is_one() => write!(f, "{}^{}", self.base, self.exponent),
            None => write!(f, "{} * {}^{}", self.coefficient, self.base, self.exponent),
        }
    }
}

pub fn beta(s: u64, norm: u64, length: u64) -> PowerProduct {
    PowerProduct {
        coefficient: BigUint::one(),
        base: big(norm),
        exponent: poly1(s) * poly2(s) * big(length).pow(2),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub states: u64,
    pub length: u64,
    pub norm: u64,
    pub n: u64,
    pub m: u64,
    pub f_value: BigUint,
    pub g_value: BigUint,
    pub alpha: BigUint,
    pub beta: PowerProduct,
    /// `α·s·(α+1)^s·β`: agents in a smallest member of an
    /// (α, β)-container, counted as threshold × states × boxes × count.
    pub witness_agent_bound: PowerProduct,
}

pub fn bound_report(p: &Protocol, e: &Gre, n: u64, m: u64) -> BoundReport {
    let s = p.size() as u64;
    let length = e.length() as u64;
    let norm = e.norm();
    let a = alpha(s, norm, length);
    let b = beta(s, norm, length);
    let boxes = pow(&(a.clone() + 1u32), s);
    let witness = PowerProduct {
        coefficient: &a * big(s) * boxes * &b.coefficient,
        base: b.base.clone(),
        exponent: b.exponent.clone(),
    };
    BoundReport {
        states: s,
        length,
        norm,
        n,
        m,
        f_value: f(s, n),
        g_value: g(s, n, m),
        alpha: a,
        beta: b,
        witness_agent_bound: witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::gre::build_wellspec_gre;

    /// Second encoding by repeated multiplication over u128.
    fn f_alt(s: u128, n: u128) -> u128 {
        n * s + s * s * s * s
    }

    fn g_alt(s: u128, n: u128, m: u128) -> u128 {
        let base = s * s * s + 1;
        let inner = (0..(s * s * s + s * s)).fold(1u128, |acc, _| acc * base);
        (m + inner) * (0..s).fold(1u128, |acc, _| acc * (n + 1))
    }

    #[test]
    fn direct_substitutions() {
        assert_eq!(f(2, 1), big(18));
        assert_eq!(g(1, 1, 1), big(10));
    }

    #[test]
    fn second_encoding_agrees_on_small_values() {
        for s in 1..=2u64 {
            for n in 1..=10u64 {
                assert_eq!(f(s, n), BigUint::from(f_alt(s as u128, n as u128)));
                for m in 0..=10u64 {
                    assert_eq!(g(s, n, m), BigUint::from(g_alt(s as u128, n as u128, m as u128)));
                }
            }
        }
    }

    #[test]
    fn report_is_monotone() {
        let p = catalog::two_full();
        let e = build_wellspec_gre(&p, false);
        let base = bound_report(&p, &e, 2, 2);
        for (n, m) in [(3, 2), (2, 3), (3, 3)] {
            let r = bound_report(&p, &e, n, m);
            assert!(r.f_value >= base.f_value && r.g_value >= base.g_value);
        }
        let bigger = p.clone();
        let mut bigger = bigger;
        bigger.states.push("extra".into());
        bigger.output.push(bigger.output[0]);
        let r = bound_report(&bigger, &e, 2, 2);
        assert!(r.f_value > base.f_value && r.g_value > base.g_value && r.alpha > base.alpha);
        assert!(r.beta.exponent > base.beta.exponent);
        let longer = e.clone().complement().complement();
        let r = bound_report(&p, &longer, 2, 2);
        assert!(r.alpha > base.alpha && r.beta.exponent > base.beta.exponent);
    }

    #[test]
    fn large_powers_stay_factored() {
        let b = beta(10, 3, 20);
        assert!(b.value(1 << 20).is_none());
        assert!(b.to_string().starts_with("3^"));
        assert_eq!(beta(1, 2, 1).value(64), Some(big(1u64 << 18)));
        assert_eq!(beta(10, 1, 20).to_string(), "1");
    }
}
