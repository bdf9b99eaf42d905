//! Bernoulli measures, interval bounds over dyadic parameter cells, the
//! sample-mean estimator and computable sample-size functions.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::BinaryString;
use crate::error::{Error, Result};
use crate::par;
use crate::rational::{self, dyadic, int, pow, Rational};

/// Head probability θ ∈ [0, 1].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BernoulliParam(Rational);

impl BernoulliParam {
    pub fn new(theta: Rational) -> Result<Self> {
        if theta.is_negative() || theta > Rational::one() {
            return Err(Error::Domain(format!(
                "theta = {} outside [0, 1]",
                rational::format(&theta)
            )));
        }
        Ok(Self(theta))
    }

    pub fn theta(&self) -> &Rational {
        &self.0
    }

    /// Mass of any single string with `ones` ones among `len` bits.
    pub fn count_mass(&self, len: usize, ones: usize) -> Rational {
        pow(&self.0, ones) * pow(&(Rational::one() - &self.0), len - ones)
    }
}

impl TryFrom<String> for BernoulliParam {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        let theta =
            rational::parse(&s).ok_or_else(|| Error::Domain(format!("bad rational {s:?}")))?;
        Self::new(theta)
    }
}

impl From<BernoulliParam> for String {
    fn from(p: BernoulliParam) -> String {
        rational::format(&p.0)
    }
}

/// The half-open dyadic parameter cell `[0.α, 0.α + 2^-l(α))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamInterval {
    alpha: BinaryString,
    lower: Rational,
    upper: Rational,
}

impl ParamInterval {
    pub fn new(alpha: BinaryString) -> Self {
        let lower = alpha.as_fraction();
        let upper = &lower + dyadic(alpha.len());
        Self {
            alpha,
            lower,
            upper,
        }
    }

    pub fn alpha(&self) -> &BinaryString {
        &self.alpha
    }

    pub fn lower(&self) -> &Rational {
        &self.lower
    }

    pub fn upper(&self) -> &Rational {
        &self.upper
    }

    /// `(θ⁻)^k (1 − θ⁺)^(n−k)`: a lower bound on every B_θ mass in the cell.
    pub fn lower_count_mass(&self, len: usize, ones: usize) -> Rational {
        pow(&self.lower, ones) * pow(&(Rational::one() - &self.upper), len - ones)
    }

    /// `(θ⁺)^k (1 − θ⁻)^(n−k)`: the matching upper bound.
    pub fn upper_count_mass(&self, len: usize, ones: usize) -> Rational {
        pow(&self.upper, ones) * pow(&(Rational::one() - &self.lower), len - ones)
    }
}

/// `θ^k (1 − θ)^(n − k)`.
pub fn bernoulli_mass(theta: &BernoulliParam, x: &BinaryString) -> Rational {
    theta.count_mass(x.len(), x.ones())
}

pub fn bernoulli_interval_lower(alpha: &ParamInterval, x: &BinaryString) -> Rational {
    alpha.lower_count_mass(x.len(), x.ones())
}

pub fn bernoulli_interval_upper(alpha: &ParamInterval, x: &BinaryString) -> Rational {
    alpha.upper_count_mass(x.len(), x.ones())
}

/// Sample mean of the bits of `x`.
pub fn estimate(x: &BinaryString) -> Result<Rational> {
    if x.is_empty() {
        return Err(Error::UndefinedEstimator);
    }
    Ok(Rational::new(x.ones().into(), x.len().into()))
}

/// Which uniform tail bound supplies N(ε, δ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundFamily {
    /// `1 / (ε⁴ N) ≤ δ`, from the strong-law bound.
    Borovkov,
    /// Maximal Hoeffding: `2 e^(−2Nε²) / (1 − e^(−2ε²)) ≤ δ`.
    Hoeffding,
}

impl fmt::Display for BoundFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundFamily::Borovkov => "borovkov",
            BoundFamily::Hoeffding => "hoeffding",
        })
    }
}

impl FromStr for BoundFamily {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "borovkov" => Ok(BoundFamily::Borovkov),
            "hoeffding" => Ok(BoundFamily::Hoeffding),
            other => Err(format!("unknown bound family {other:?}")),
        }
    }
}

const EXP_BITS: usize = 160;

fn check_eps_delta(epsilon: &Rational, delta: &Rational) -> Result<()> {
    if !epsilon.is_positive() || epsilon > &Rational::one() {
        return Err(Error::Domain(format!(
            "epsilon = {} outside (0, 1]",
            rational::format(epsilon)
        )));
    }
    if !delta.is_positive() || delta >= &Rational::one() {
        return Err(Error::Domain(format!(
            "delta = {} outside (0, 1)",
            rational::format(delta)
        )));
    }
    Ok(())
}

/// Least N for which the chosen family certifies
/// `P{sup_{n ≥ N} |θ̂ − θ| ≥ ε} ≤ δ` uniformly in θ.
///
/// The Hoeffding branch evaluates the exponential through rational upper
/// bounds, so the returned N is never smaller than the exact least N.
pub fn sample_size(epsilon: &Rational, delta: &Rational, family: BoundFamily) -> Result<u64> {
    check_eps_delta(epsilon, delta)?;
    match family {
        BoundFamily::Borovkov => {
            let n = (pow(epsilon, 4) * delta).recip().ceil();
            n.to_integer()
                .to_u64()
                .ok_or_else(|| Error::Domain("sample size overflows u64".into()))
        }
        BoundFamily::Hoeffding => hoeffding_sample_size(epsilon, delta),
    }
}

fn hoeffding_sample_size(epsilon: &Rational, delta: &Rational) -> Result<u64> {
    let two_eps_sq = int(2) * epsilon * epsilon;
    let u = rational::round_up_significant(
        &rational::exp_neg_upper(&two_eps_sq, EXP_BITS),
        EXP_BITS,
    );
    let gap = Rational::one() - &u;
    if !gap.is_positive() {
        return Err(Error::Domain("epsilon too small for the exponential bound".into()));
    }
    let rhs = delta * &gap;
    let holds = |n: u64| int(2) * rational::pow_upper(&u, n, EXP_BITS) <= rhs;

    // Float estimate to land near the answer, then settle exactly.
    let guess = {
        let u = rational::to_f64(&u);
        let rhs = rational::to_f64(&rhs);
        ((2.0 / rhs).ln() / -u.ln()).ceil().max(1.0)
    };
    if !guess.is_finite() || guess > 1e15 {
        return Err(Error::Domain("sample size overflows the search range".into()));
    }
    let mut n = guess as u64;
    while !holds(n) {
        n += 1;
    }
    while n > 1 && holds(n - 1) {
        n -= 1;
    }
    Ok(n)
}

/// Outcome of a Monte Carlo concentration run, one CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationResult {
    pub theta: String,
    pub epsilon: String,
    pub delta: String,
    pub family: BoundFamily,
    pub sample_size: u64,
    pub horizon: u64,
    pub trials: u64,
    pub violations: u64,
    pub rate: f64,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl ConcentrationResult {
    pub const CSV_HEADER: &'static str =
        "theta,epsilon,delta,family,N,trials,violations,rate,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.theta,
            self.epsilon,
            self.delta,
            self.family,
            self.sample_size,
            self.trials,
            self.violations,
            self.rate,
            self.seed
        )
    }
}

fn small_ratio(r: &Rational, what: &str) -> Result<(u64, u64)> {
    let n = r.numer().to_u64();
    let d = r.denom().to_u64();
    match (n, d) {
        (Some(n), Some(d)) if d <= u32::MAX as u64 => Ok((n, d)),
        _ => Err(Error::Domain(format!(
            "{what} = {} needs a denominator below 2^32 for simulation",
            rational::format(r)
        ))),
    }
}

/// Samples `trials` sequences of length `horizon` from B_θ and reports the
/// fraction whose running mean leaves the ε-band (`|θ̂ − θ| ≥ ε`) anywhere in
/// `[N(ε, δ), horizon]`. Trial `i` draws from stream `(seed, i)`.
pub fn concentration_experiment(
    theta: &BernoulliParam,
    epsilon: &Rational,
    delta: &Rational,
    family: BoundFamily,
    trials: u64,
    horizon: u64,
    seed: u64,
) -> Result<ConcentrationResult> {
    let n_min = sample_size(epsilon, delta, family)?;
    if horizon < n_min {
        return Err(Error::Precondition(format!(
            "horizon {horizon} is below N(eps, delta) = {n_min}"
        )));
    }
    let (tn, td) = small_ratio(theta.theta(), "theta")?;
    let (en, ed) = small_ratio(epsilon, "epsilon")?;

    let violated = |trial: usize| -> bool {
        let mut rng = par::stream_rng(seed, trial as u64);
        let mut ones: u64 = 0;
        for n in 1..=horizon {
            if rng.random_range(0..td) < tn {
                ones += 1;
            }
            if n >= n_min {
                // |ones/n − tn/td| ≥ en/ed  ⇔  |ones·td − n·tn|·ed ≥ en·n·td
                let diff = (ones as i128 * td as i128 - n as i128 * tn as i128).unsigned_abs();
                if diff * ed as u128 >= en as u128 * n as u128 * td as u128 {
                    return true;
                }
            }
        }
        false
    };
    let violations = par::count_range(trials as usize, violated) as u64;

    let mut warnings = Vec::new();
    let rate = if trials == 0 {
        warnings.push("zero trials: violation rate is vacuous".to_string());
        0.0
    } else {
        violations as f64 / trials as f64
    };
    Ok(ConcentrationResult {
        theta: rational::format(theta.theta()),
        epsilon: rational::format(epsilon),
        delta: rational::format(delta),
        family,
        sample_size: n_min,
        horizon,
        trials,
        violations,
        rate,
        seed,
        warnings,
    })
}

/// Exact binomial probability `C(n, k) θ^k (1 − θ)^(n − k)`.
pub fn binomial_pmf(theta: &BernoulliParam, n: usize, k: usize) -> Rational {
    theta.count_mass(n, k) * Rational::from_integer(binomial(n, k).into())
}

/// `C(n, k)` as a big integer.
pub fn binomial(n: usize, k: usize) -> num_bigint::BigUint {
    if k > n {
        return num_bigint::BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = num_bigint::BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use proptest::prelude::*;

    fn s(t: &str) -> BinaryString {
        t.parse().unwrap()
    }

    fn theta(n: i64, d: i64) -> BernoulliParam {
        BernoulliParam::new(ratio(n, d)).unwrap()
    }

    #[test]
    fn mass_examples() {
        assert_eq!(bernoulli_mass(&theta(1, 2), &s("0110")), ratio(1, 16));
        assert_eq!(bernoulli_mass(&theta(1, 3), &s("101")), ratio(2, 27));
        assert_eq!(bernoulli_mass(&theta(2, 7), &s("-")), ratio(1, 1));
        assert!(BernoulliParam::new(ratio(5, 4)).is_err());
    }

    #[test]
    fn interval_lower_examples() {
        let a = ParamInterval::new(s("01"));
        assert_eq!((a.lower(), a.upper()), (&ratio(1, 4), &ratio(1, 2)));
        let lo = bernoulli_interval_lower(&a, &s("10"));
        assert_eq!(lo, ratio(1, 8));
        // θ(1 − θ) on [1/4, 1/2] is smallest at the left end.
        let true_min = [ratio(1, 4), ratio(1, 2)]
            .iter()
            .map(|t| bernoulli_mass(&BernoulliParam::new(t.clone()).unwrap(), &s("10")))
            .min()
            .unwrap();
        assert_eq!(true_min, ratio(3, 16));
        assert!(lo <= true_min);
        let full = ParamInterval::new(s("-"));
        assert_eq!(bernoulli_interval_lower(&full, &s("1")), ratio(0, 1));
    }

    #[test]
    fn estimator_examples() {
        assert_eq!(estimate(&s("1101")).unwrap(), ratio(3, 4));
        assert_eq!(estimate(&s("0000")).unwrap(), ratio(0, 1));
        assert_eq!(estimate(&s("01")).unwrap(), ratio(1, 2));
        assert_eq!(estimate(&s("-")), Err(Error::UndefinedEstimator));
    }

    /// Independent float evaluation of the Hoeffding tail condition.
    fn hoeffding_oracle(eps: f64, delta: f64) -> u64 {
        let a = 2.0 * eps * eps;
        (1u64..)
            .find(|&n| 2.0 * (-(n as f64) * a).exp() / (1.0 - (-a).exp()) <= delta)
            .unwrap()
    }

    #[test]
    fn sample_size_examples() {
        use BoundFamily::*;
        assert_eq!(sample_size(&ratio(1, 2), &ratio(1, 4), Borovkov).unwrap(), 64);
        assert_eq!(sample_size(&ratio(1, 1), &ratio(1, 10), Borovkov).unwrap(), 10);
        assert_eq!(hoeffding_oracle(0.25, 0.25), 34);
        assert_eq!(sample_size(&ratio(1, 4), &ratio(1, 4), Hoeffding).unwrap(), 34);
        for (e, d) in [(1, 2), (2, 4), (3, 8), (10, 10), (5, 100), (20, 1000)] {
            let n = sample_size(&ratio(1, e), &ratio(1, d), Hoeffding).unwrap();
            assert_eq!(n, hoeffding_oracle(1.0 / e as f64, 1.0 / d as f64), "eps=1/{e} delta=1/{d}");
        }
        assert!(sample_size(&ratio(0, 1), &ratio(1, 2), Hoeffding).is_err());
        assert!(sample_size(&ratio(1, 2), &ratio(1, 1), Borovkov).is_err());
        assert!(sample_size(&ratio(3, 2), &ratio(1, 2), Borovkov).is_err());
    }

    #[test]
    fn concentration_edge_cases() {
        let t = theta(1, 2);
        let r = concentration_experiment(&t, &ratio(1, 1), &ratio(1, 10), BoundFamily::Hoeffding, 200, 50, 7)
            .unwrap();
        assert_eq!(r.violations, 0);
        let r = concentration_experiment(&t, &ratio(1, 4), &ratio(1, 4), BoundFamily::Hoeffding, 0, 40, 7)
            .unwrap();
        assert_eq!(r.rate, 0.0);
        assert_eq!(r.warnings.len(), 1);
        let err = concentration_experiment(&t, &ratio(1, 4), &ratio(1, 4), BoundFamily::Hoeffding, 10, 20, 7);
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn concentration_is_deterministic() {
        let t = theta(1, 3);
        let run = || {
            concentration_experiment(&t, &ratio(1, 4), &ratio(1, 4), BoundFamily::Hoeffding, 500, 80, 99)
                .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn violation_rate_within_monte_carlo_band() {
        let delta = 0.1f64;
        let trials = 2000u64;
        let slack = delta + 3.0 * (delta / trials as f64).sqrt();
        for seed in 0..10 {
            let r = concentration_experiment(
                &theta(1, 2),
                &ratio(1, 10),
                &ratio(1, 10),
                BoundFamily::Hoeffding,
                trials,
                500,
                seed,
            )
            .unwrap();
            assert!(r.rate <= slack, "seed {seed}: {}", r.rate);
        }
    }

    #[test]
    fn binomial_coefficients() {
        assert_eq!(binomial(7, 3), 35u32.into());
        assert_eq!(binomial(7, 8), 0u32.into());
        let total: Rational = (0..=9).map(|k| binomial_pmf(&theta(1, 3), 9, k)).sum();
        assert_eq!(total, ratio(1, 1));
    }

    fn arb_string(max: usize) -> impl Strategy<Value = BinaryString> {
        prop::collection::vec(any::<bool>(), 0..=max).prop_map(BinaryString::from_bits)
    }

    proptest! {
        #[test]
        fn bernoulli_is_additive(x in arb_string(10), num in 0i64..=16) {
            let t = theta(num, 16);
            prop_assert_eq!(
                bernoulli_mass(&t, &x.child(false)) + bernoulli_mass(&t, &x.child(true)),
                bernoulli_mass(&t, &x)
            );
        }

        #[test]
        fn interval_lower_is_subadditive(x in arb_string(8), alpha in arb_string(5)) {
            let a = ParamInterval::new(alpha);
            prop_assert!(
                bernoulli_interval_lower(&a, &x.child(false)) + bernoulli_interval_lower(&a, &x.child(true))
                    <= bernoulli_interval_lower(&a, &x)
            );
        }

        #[test]
        fn interval_bounds_hold_on_grid(x in arb_string(8), alpha in arb_string(4), step in 0i64..=8) {
            let a = ParamInterval::new(alpha);
            let t = a.lower() + (a.upper() - a.lower()) * ratio(step, 8);
            let b = bernoulli_mass(&BernoulliParam::new(t).unwrap(), &x);
            prop_assert!(bernoulli_interval_lower(&a, &x) <= b.clone());
            prop_assert!(b <= bernoulli_interval_upper(&a, &x));
        }

        #[test]
        fn refinement_never_lowers_bound(x in arb_string(8), alpha in arb_string(4), bit: bool) {
            let coarse = ParamInterval::new(alpha.clone());
            let fine = ParamInterval::new(alpha.child(bit));
            prop_assert!(bernoulli_interval_lower(&fine, &x) >= bernoulli_interval_lower(&coarse, &x));
        }
    }
}
