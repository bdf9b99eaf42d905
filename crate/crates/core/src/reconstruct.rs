//! Recovering a Bernoulli parameter from a semimeasure concentrated on its
//! random sequences.
//!
//! For each precision `n` the search looks for a single-level set of strings,
//! all long enough for the estimator's sample-size bound, all inside the
//! query set `V`, whose sample means spread by at most `1/(2n)` and whose
//! proxy mass exceeds `r`. The sample mean of the set's least member is then
//! within `1/n` of θ.
//!
//! Exchangeable proxies are searched over ones-count windows, whose masses
//! are binomial sums. Other proxies get an explicit best-first enumeration
//! by descending mass under a node budget.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_bigint::BigUint;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::bernoulli::{binomial, estimate, sample_size, BoundFamily};
use crate::dyadic::{BinaryString, SimpleSet};
use crate::error::{Error, Result};
use crate::proxy::Semimeasure;
use crate::rational::{self, dyadic, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchBudget {
    /// Levels tried beyond the minimal admissible one.
    pub extra_levels: usize,
    /// Tree nodes expanded per level by the explicit search.
    pub max_nodes: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            extra_levels: 16,
            max_nodes: 1 << 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Members {
    /// Every length-`level` string inside `V` with ones-count in `[lo, hi]`.
    OnesCount { lo: usize, hi: usize },
    Explicit { strings: Vec<BinaryString> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessWindow {
    pub n: u64,
    pub level: usize,
    pub members: Members,
    pub mass: Rational,
    /// Largest minus smallest sample mean over the members.
    pub spread: Rational,
    /// Lexicographically least member.
    pub least: BinaryString,
}

impl WitnessWindow {
    pub fn theta(&self) -> Rational {
        estimate(&self.least).expect("window members are nonempty")
    }

    /// Ones-count range covered by the members.
    pub fn count_range(&self) -> (usize, usize) {
        match &self.members {
            Members::OnesCount { lo, hi } => (*lo, *hi),
            Members::Explicit { strings } => {
                let counts = strings.iter().map(BinaryString::ones);
                (counts.clone().min().unwrap_or(0), counts.max().unwrap_or(0))
            }
        }
    }
}

fn check_query(r: &Rational, n: u64) -> Result<()> {
    if !r.is_positive() || r >= &Rational::one() {
        return Err(Error::Domain(format!("r = {} outside (0, 1)", rational::format(r))));
    }
    if n == 0 {
        return Err(Error::Domain("precision n must be at least 1".into()));
    }
    Ok(())
}

/// Smallest admissible level: `N(1/n, 2^-n)`.
pub fn minimal_level(n: u64, family: BoundFamily) -> Result<usize> {
    let eps = Rational::new(1.into(), n.into());
    let delta = dyadic(n as usize);
    Ok(sample_size(&eps, &delta, family)? as usize)
}

/// Widest admissible ones-count spread at `level`: `(hi − lo)·2n ≤ level`.
fn max_width(level: usize, n: u64) -> usize {
    level / (2 * n as usize)
}

/// Number of length-`level` strings in `V` with each ones-count.
fn counts_in_set(set: &SimpleSet, level: usize) -> Vec<BigUint> {
    let mut counts = vec![BigUint::zero(); level + 1];
    for g in set.generators().iter().filter(|g| g.len() <= level) {
        let free = level - g.len();
        for extra in 0..=free {
            counts[g.ones() + extra] += binomial(free, extra);
        }
    }
    counts
}

/// Lexicographically least length-`level` member of `V` with ones-count in
/// `[lo, hi]`.
fn least_member(set: &SimpleSet, level: usize, lo: usize, hi: usize) -> Option<BinaryString> {
    // Generators are stored in lexicographic order and their extension blocks
    // are disjoint and ordered the same way.
    set.generators().iter().filter(|g| g.len() <= level).find_map(|g| {
        let free = level - g.len();
        let ones = g.ones();
        if ones > hi || ones + free < lo {
            return None;
        }
        let need = lo.saturating_sub(ones);
        Some(
            g.concat(&BinaryString::repeat(false, free - need))
                .concat(&BinaryString::repeat(true, need)),
        )
    })
}

fn spread(lo: usize, hi: usize, level: usize) -> Rational {
    Rational::new((hi - lo).into(), level.into())
}

fn search_ones_count(
    proxy: &dyn Semimeasure,
    set: &SimpleSet,
    r: &Rational,
    n: u64,
    level: usize,
) -> Option<WitnessWindow> {
    let counts = counts_in_set(set, level);
    let masses: Vec<Rational> = counts
        .iter()
        .enumerate()
        .map(|(k, c)| {
            if c.is_zero() {
                Rational::zero()
            } else {
                let per = proxy.count_mass(level, k).expect("exchangeable proxy");
                per * Rational::from_integer(c.clone().into())
            }
        })
        .collect();
    let width = max_width(level, n);
    for lo in 0..=level {
        if !masses[lo].is_positive() {
            continue;
        }
        let top = (lo + width).min(level);
        let hi = (lo..=top).rev().find(|&k| masses[k].is_positive()).unwrap_or(lo);
        let mass: Rational = masses[lo..=hi].iter().sum();
        if &mass > r {
            let least = least_member(set, level, lo, hi)?;
            return Some(WitnessWindow {
                n,
                level,
                members: Members::OnesCount { lo, hi },
                mass,
                spread: spread(lo, hi, level),
                least,
            });
        }
    }
    None
}

#[derive(PartialEq, Eq)]
struct Node {
    mass: Rational,
    x: BinaryString,
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.mass
            .cmp(&other.mass)
            .then_with(|| other.x.cmp(&self.x))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Heaviest level-`level` strings inside `V`, found by expanding at most
/// `max_nodes` tree vertices in order of descending proxy mass.
fn best_first_leaves(
    proxy: &dyn Semimeasure,
    set: &SimpleSet,
    level: usize,
    max_nodes: usize,
) -> Vec<(BinaryString, Rational)> {
    let stage = proxy.exact_stage();
    let mut heap = BinaryHeap::new();
    let root = BinaryString::empty();
    if set.meets_cylinder(&root) {
        heap.push(Node {
            mass: proxy.eval(&root, stage),
            x: root,
        });
    }
    let mut leaves = Vec::new();
    let mut expanded = 0usize;
    while let Some(Node { mass, x }) = heap.pop() {
        if !mass.is_positive() {
            break;
        }
        if x.len() == level {
            if set.contains_cylinder(&x) {
                leaves.push((x, mass));
            }
            continue;
        }
        if expanded == max_nodes {
            break;
        }
        expanded += 1;
        for bit in [false, true] {
            let c = x.child(bit);
            if set.meets_cylinder(&c) {
                heap.push(Node {
                    mass: proxy.eval(&c, stage),
                    x: c,
                });
            }
        }
    }
    leaves
}

fn search_explicit(
    proxy: &dyn Semimeasure,
    set: &SimpleSet,
    r: &Rational,
    n: u64,
    level: usize,
    max_nodes: usize,
) -> Option<WitnessWindow> {
    let leaves = best_first_leaves(proxy, set, level, max_nodes);
    let mut by_count: Vec<Vec<(BinaryString, Rational)>> = vec![Vec::new(); level + 1];
    for (x, m) in leaves {
        by_count[x.ones()].push((x, m));
    }
    let width = max_width(level, n);
    for lo in 0..=level {
        if by_count[lo].is_empty() {
            continue;
        }
        let top = (lo + width).min(level);
        let hi = (lo..=top).rev().find(|&k| !by_count[k].is_empty()).unwrap_or(lo);
        let mass: Rational = by_count[lo..=hi].iter().flatten().map(|(_, m)| m.clone()).sum();
        if &mass > r {
            let mut strings: Vec<BinaryString> =
                by_count[lo..=hi].iter().flatten().map(|(x, _)| x.clone()).collect();
            strings.sort();
            let least = strings[0].clone();
            return Some(WitnessWindow {
                n,
                level,
                members: Members::Explicit { strings },
                mass,
                spread: spread(lo, hi, level),
                least,
            });
        }
    }
    None
}

/// Deterministic search over levels `N(1/n, 2^-n), N + 1, ...` and, within a
/// level, ascending lower ones-count. Returns the first window whose mass
/// exceeds `r`.
pub fn find_window(
    proxy: &dyn Semimeasure,
    set: &SimpleSet,
    r: &Rational,
    n: u64,
    family: BoundFamily,
    budget: SearchBudget,
) -> Result<WitnessWindow> {
    check_query(r, n)?;
    let first = minimal_level(n, family)?;
    let exchangeable = proxy.count_mass(first, 0).is_some();
    for level in first..=first + budget.extra_levels {
        if level >= 63 {
            break;
        }
        let found = if exchangeable {
            search_ones_count(proxy, set, r, n, level)
        } else {
            search_explicit(proxy, set, r, n, level, budget.max_nodes)
        };
        if let Some(w) = found {
            return Ok(w);
        }
    }
    Err(Error::SearchExhausted {
        n,
        reason: format!(
            "levels {first}..={} hold no {} window above r = {}",
            first + budget.extra_levels,
            if exchangeable { "ones-count" } else { "explicit" },
            rational::format(r)
        ),
    })
}

/// Re-checks a window without reusing the search's counting code. Returns a
/// list of failed conditions (empty when the window is sound).
pub fn validate_window(
    proxy: &dyn Semimeasure,
    set: &SimpleSet,
    r: &Rational,
    family: BoundFamily,
    window: &WitnessWindow,
) -> Result<Vec<String>> {
    let mut failures = Vec::new();
    let n = window.n;
    let min_level = minimal_level(n, family)?;
    if window.level < min_level {
        failures.push(format!("level {} below N = {min_level}", window.level));
    }
    let stage = proxy.exact_stage();
    let (mass, lo, hi) = match &window.members {
        Members::Explicit { strings } => {
            for x in strings {
                if x.len() != window.level {
                    failures.push(format!("member {x} not on level {}", window.level));
                }
                if !set.contains_cylinder(x) {
                    failures.push(format!("member {x} outside V"));
                }
            }
            let mass: Rational = strings.iter().map(|x| proxy.eval(x, stage)).sum();
            let (lo, hi) = window.count_range();
            (mass, lo, hi)
        }
        Members::OnesCount { lo, hi } => {
            // Pascal-triangle count of suffixes per ones-count, per generator.
            let level = window.level;
            let mut row = vec![vec![0u128; 1]; 1];
            row[0][0] = 1;
            for m in 1..=level {
                let mut next = vec![0u128; m + 1];
                for k in 0..=m {
                    let a = if k < m { row[m - 1][k] } else { 0 };
                    let b = if k > 0 { row[m - 1][k - 1] } else { 0 };
                    next[k] = a + b;
                }
                row.push(next);
            }
            let mut mass = Rational::zero();
            for g in set.generators().iter().filter(|g| g.len() <= level) {
                let free = level - g.len();
                for extra in 0..=free {
                    let k = g.ones() + extra;
                    if k < *lo || k > *hi {
                        continue;
                    }
                    let member = g
                        .concat(&BinaryString::repeat(true, extra))
                        .concat(&BinaryString::repeat(false, free - extra));
                    mass += Rational::from_integer(row[free][extra].into()) * proxy.eval(&member, stage);
                }
            }
            (mass, *lo, *hi)
        }
    };
    if mass != window.mass {
        failures.push(format!(
            "recomputed mass {} differs from reported {}",
            rational::format(&mass),
            rational::format(&window.mass)
        ));
    }
    if &mass <= r {
        failures.push(format!("mass {} not above r", rational::format(&mass)));
    }
    if Rational::new(((hi - lo) * 2 * n as usize).into(), window.level.into()) > Rational::one() {
        failures.push(format!("spread ({lo}..{hi})/{} exceeds 1/(2n)", window.level));
    }
    if !set.contains_cylinder(&window.least) || window.least.len() != window.level {
        failures.push(format!("least member {} is not a member", window.least));
    }
    Ok(failures)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReconstructionRow {
    pub n: u64,
    pub level: usize,
    pub k_minus: usize,
    pub k_plus: usize,
    pub mass: String,
    pub theta_n: String,
    pub error_bound: String,
}

impl ReconstructionRow {
    pub const CSV_HEADER: &'static str = "n,N,k_minus,k_plus,mass,theta_n,error_bound";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.n, self.level, self.k_minus, self.k_plus, self.mass, self.theta_n, self.error_bound
        )
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub windows: Vec<WitnessWindow>,
    /// The first failure, if the run stopped early.
    pub error: Option<Error>,
}

impl Reconstruction {
    /// `(n, θ_n)` pairs found so far.
    pub fn estimates(&self) -> Vec<(u64, Rational)> {
        self.windows.iter().map(|w| (w.n, w.theta())).collect()
    }

    pub fn rows(&self) -> Vec<ReconstructionRow> {
        self.windows
            .iter()
            .map(|w| {
                let (lo, hi) = w.count_range();
                ReconstructionRow {
                    n: w.n,
                    level: w.level,
                    k_minus: lo,
                    k_plus: hi,
                    mass: rational::format(&w.mass),
                    theta_n: rational::format(&w.theta()),
                    error_bound: rational::format(&Rational::new(1.into(), w.n.into())),
                }
            })
            .collect()
    }
}

/// Windows for `n = 1..=n_max`; stops at the first exhausted search and
/// keeps what was found before it.
pub fn reconstruct(
    proxy: &dyn Semimeasure,
    set: &SimpleSet,
    r: &Rational,
    n_max: u64,
    family: BoundFamily,
    budget: SearchBudget,
) -> Reconstruction {
    let mut windows = Vec::new();
    for n in 1..=n_max {
        match find_window(proxy, set, r, n, family, budget) {
            Ok(w) => windows.push(w),
            Err(e) => {
                return Reconstruction {
                    windows,
                    error: Some(e),
                }
            }
        }
    }
    Reconstruction {
        windows,
        error: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernoulli::BernoulliParam;
    use crate::proxy::{Component, ProxyMixture};
    use crate::rational::{int, ratio};
    use crate::table::SemimeasureTable;

    fn bern(n: i64, d: i64) -> Component {
        Component::Bernoulli(BernoulliParam::new(ratio(n, d)).unwrap())
    }

    fn half() -> Rational {
        ratio(1, 2)
    }

    #[test]
    fn fair_coin_window_at_n2() {
        let w = find_window(&bern(1, 2), &SimpleSet::whole(), &half(), 2, BoundFamily::Hoeffding, SearchBudget::default())
            .unwrap();
        assert_eq!(w.level, 7);
        assert_eq!(w.members, Members::OnesCount { lo: 3, hi: 4 });
        assert_eq!(w.mass, ratio(70, 128));
        assert_eq!(w.spread, ratio(1, 7));
        assert_eq!(w.theta(), ratio(3, 7));
        assert_eq!(w.least, "0000111".parse().unwrap());
    }

    #[test]
    fn point_mass_window_is_a_single_string() {
        for n in 1..=4 {
            let w = find_window(&Component::point_mass_constant(false), &SimpleSet::whole(), &half(), n, BoundFamily::Hoeffding, SearchBudget::default())
                .unwrap();
            assert_eq!(w.members, Members::OnesCount { lo: 0, hi: 0 });
            assert_eq!(w.mass, int(1));
            assert!(w.spread.is_zero());
            assert_eq!(w.theta(), int(0));
        }
    }

    #[test]
    fn laplace_mixture_has_no_concentrated_window() {
        let err = find_window(&Component::Laplace, &SimpleSet::whole(), &half(), 3, BoundFamily::Hoeffding, SearchBudget::default());
        assert!(matches!(err, Err(Error::SearchExhausted { n: 3, .. })));
    }

    #[test]
    fn query_domain_checks() {
        let p = bern(1, 2);
        let v = SimpleSet::whole();
        assert!(matches!(find_window(&p, &v, &int(1), 1, BoundFamily::Hoeffding, SearchBudget::default()), Err(Error::Domain(_))));
        assert!(matches!(find_window(&p, &v, &half(), 0, BoundFamily::Hoeffding, SearchBudget::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn restricted_set_is_respected() {
        let v = SimpleSet::new(vec!["0".parse().unwrap(), "11".parse().unwrap()]).unwrap();
        let p = bern(1, 2);
        let w = find_window(&p, &v, &ratio(1, 2), 1, BoundFamily::Hoeffding, SearchBudget::default()).unwrap();
        assert!(validate_window(&p, &v, &ratio(1, 2), BoundFamily::Hoeffding, &w).unwrap().is_empty());
        assert!(v.contains_cylinder(&w.least));
    }

    #[test]
    fn explicit_search_agrees_with_ones_count_search() {
        // Same measure, once as a table (non-exchangeable route), once as B_θ.
        for (num, den) in [(1, 2), (1, 3), (3, 4)] {
            let p = bern(num, den);
            let table = Component::Table(SemimeasureTable::from_fn(14, |x| p.exact(x)));
            let v = SimpleSet::whole();
            let budget = SearchBudget { extra_levels: 6, max_nodes: 1 << 15 };
            for n in 1..=2 {
                let a = find_window(&p, &v, &half(), n, BoundFamily::Hoeffding, budget).unwrap();
                let b = find_window(&table, &v, &half(), n, BoundFamily::Hoeffding, budget).unwrap();
                assert!(a.level <= 14);
                assert_eq!(a.mass, b.mass, "theta {num}/{den}, n {n}");
                assert_eq!(a.count_range(), b.count_range());
                assert_eq!(a.least, b.least);
                assert!(validate_window(&table, &v, &half(), BoundFamily::Hoeffding, &b).unwrap().is_empty());
            }
        }
    }

    #[test]
    fn reconstruct_bernoulli_third() {
        let rec = reconstruct(&bern(1, 3), &SimpleSet::whole(), &half(), 3, BoundFamily::Hoeffding, SearchBudget::default());
        assert!(rec.error.is_none());
        for (n, theta) in rec.estimates() {
            let err = (theta - ratio(1, 3)).abs();
            assert!(err < Rational::new(1.into(), n.into()));
        }
    }

    #[test]
    fn reconstruct_keeps_earlier_rows() {
        // The fair-coin / Laplace blend concentrates at n = 1 only.
        let m = ProxyMixture::new(vec![(ratio(1, 2), Component::Laplace), (ratio(1, 2), bern(1, 2))]).unwrap();
        let rec = reconstruct(&m, &SimpleSet::whole(), &ratio(3, 5), 6, BoundFamily::Hoeffding, SearchBudget { extra_levels: 4, max_nodes: 1 });
        assert!(!rec.windows.is_empty());
        assert!(matches!(rec.error, Some(Error::SearchExhausted { .. })));
        assert_eq!(rec.rows().len(), rec.windows.len());
    }

    #[test]
    fn tampered_window_fails_validation() {
        let p = bern(1, 2);
        let v = SimpleSet::whole();
        let mut w = find_window(&p, &v, &half(), 2, BoundFamily::Hoeffding, SearchBudget::default()).unwrap();
        w.members = Members::OnesCount { lo: 2, hi: 4 };
        let failures = validate_window(&p, &v, &half(), BoundFamily::Hoeffding, &w).unwrap();
        assert!(failures.len() >= 2);
    }
}
