//! Exact rational helpers shared by every module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `2^-k` as an exact rational.
pub fn dyadic(k: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k)
}

pub fn pow(base: &Rational, exp: usize) -> Rational {
    num_traits::pow(base.clone(), exp)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Renders `r` as `num/den`, always with an explicit denominator.
pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `num/den` or a bare integer.
pub fn parse(text: &str) -> Option<Rational> {
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => text.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// Smallest dyadic `k / 2^bits` that is `>= r`.
pub fn round_up_dyadic(r: &Rational, bits: usize) -> Rational {
    let scale = BigInt::one() << bits;
    let scaled = r.numer() * &scale;
    let (q, rem) = scaled.div_rem(r.denom());
    let q = if rem.is_positive() { q + 1 } else { q };
    Rational::new(q, scale)
}

/// Largest dyadic `k / 2^bits` that is `<= r`, for nonnegative `r`.
pub fn round_down_dyadic(r: &Rational, bits: usize) -> Rational {
    let scale = BigInt::one() << bits;
    let q = (r.numer() * &scale).div_floor(r.denom());
    Rational::new(q, scale)
}

/// Rigorous rational upper bound on `exp(-a)` for `a >= 0`.
///
/// Every Taylor term of `exp(a)` is nonnegative, so any partial sum is a lower
/// bound on `exp(a)` and its reciprocal bounds `exp(-a)` from above. Terms are
/// summed until the next one drops below `2^-(precision_bits + 8)` relative to
/// the running sum.
pub fn exp_neg_upper(a: &Rational, precision_bits: usize) -> Rational {
    assert!(!a.is_negative(), "exp_neg_upper needs a >= 0");
    let mut sum = Rational::one();
    let mut term = Rational::one();
    let cutoff = dyadic(precision_bits + 8);
    let mut k = 1i64;
    loop {
        term = term * a / int(k);
        sum += &term;
        if term.is_zero() || (&term / &sum) < cutoff {
            break;
        }
        k += 1;
    }
    sum.recip()
}

/// Upper bound on a positive `r` keeping about `bits` significant bits.
pub fn round_up_significant(r: &Rational, bits: usize) -> Rational {
    let (num, den) = (r.numer(), r.denom());
    let shift = bits as i64 - (num.bits() as i64 - den.bits() as i64);
    if shift >= 0 {
        round_up_dyadic(r, shift as usize)
    } else {
        let scale = BigInt::one() << (-shift) as usize;
        let (q, rem) = num.div_rem(&(den * &scale));
        let q = if rem.is_positive() { q + 1 } else { q };
        Rational::from_integer(q * scale)
    }
}

/// Rigorous upper bound on `base^exp` for `base > 0`, rounding every
/// intermediate product up to `bits` significant bits.
pub fn pow_upper(base: &Rational, mut exp: u64, bits: usize) -> Rational {
    let mut acc = Rational::one();
    let mut sq = round_up_significant(base, bits);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = round_up_significant(&(&acc * &sq), bits);
        }
        exp >>= 1;
        if exp > 0 {
            sq = round_up_significant(&(&sq * &sq), bits);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse("3/4"), Some(ratio(3, 4)));
        assert_eq!(parse(" 2 "), Some(int(2)));
        assert_eq!(parse("1/0"), None);
        assert_eq!(format(&ratio(6, 8)), "3/4");
        assert_eq!(format(&int(1)), "1/1");
    }

    #[test]
    fn exp_bound_is_above_float_value() {
        for &(n, d) in &[(1, 8), (1, 2), (7, 1), (0, 1), (50, 1)] {
            let a = ratio(n, d);
            let ub = to_f64(&exp_neg_upper(&a, 64));
            let exact = (-(n as f64) / d as f64).exp();
            assert!(ub >= exact * (1.0 - 1e-15), "{n}/{d}: {ub} < {exact}");
            assert!(ub <= exact * (1.0 + 1e-12));
        }
    }

    #[test]
    fn pow_upper_brackets_exact_power() {
        let base = ratio(7, 9);
        for e in [0u64, 1, 2, 5, 33, 100] {
            let exact = pow(&base, e as usize);
            let ub = pow_upper(&base, e, 80);
            assert!(ub >= exact);
            assert!(to_f64(&(&ub / &exact)) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn dyadic_rounding_brackets() {
        let r = ratio(1, 3);
        let up = round_up_dyadic(&r, 10);
        let down = round_down_dyadic(&r, 10);
        assert!(down <= r && r <= up);
        assert_eq!(&up - &down, dyadic(10));
        assert_eq!(round_up_dyadic(&ratio(1, 4), 10), ratio(1, 4));
    }
}
