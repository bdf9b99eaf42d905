//! Bernoulli mixtures over a prior semimeasure on parameter strings.
//!
//! A parameter string `α` names the dyadic cell `[0.α, 0.α + 2^-l(α))`. The
//! enclosure brackets `∫ B_θ(x) dQ̄(θ)` between cell-wise lower and upper
//! Bernoulli bounds. The mixture semimeasure publishes, level by level,
//! `P(x) = Σ_α B⁻_α(x) Q^s(α)` over the cells of a per-level partition with a
//! per-level prior stage, clamped where a refinement would break
//! `P(x0) + P(x1) ≤ P(x)`.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::bernoulli::ParamInterval;
use crate::dyadic::BinaryString;
use crate::error::{Error, Result};
use crate::par;
use crate::rational::{self, round_down_dyadic, Rational};
use crate::table::SemimeasureTable;

/// Stage at which the prior is read exactly.
pub const EXACT_STAGE: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamPrior {
    q: SemimeasureTable,
    bar: SemimeasureTable,
}

impl ParamPrior {
    pub fn new(q: SemimeasureTable) -> Result<Self> {
        if let Some(v) = q.validate().into_iter().next() {
            return Err(Error::Precondition(format!("prior is not a semimeasure: {v}")));
        }
        let bar = q.bar_measure();
        Ok(Self { q, bar })
    }

    pub fn depth(&self) -> usize {
        self.q.depth()
    }

    pub fn table(&self) -> &SemimeasureTable {
        &self.q
    }

    /// `Q̄` at the prior's depth.
    pub fn bar(&self) -> &SemimeasureTable {
        &self.bar
    }

    /// `Q^s(α)`: `Q(α)` rounded down to `s` binary digits, or exact at
    /// [`EXACT_STAGE`]. Nondecreasing in `s`.
    pub fn staged(&self, alpha: &BinaryString, s: u64) -> Rational {
        let v = self.q.at(alpha);
        if s == EXACT_STAGE {
            v.clone()
        } else {
            round_down_dyadic(v, s.min(1 << 20) as usize)
        }
    }
}

fn level_cells(m: usize) -> impl Iterator<Item = BinaryString> {
    (0..1u64 << m).map(move |v| BinaryString::from_value(v, m))
}

/// `[Σ B⁻_α Q̄(α), Σ B⁺_α Q̄(α)]` over the level-`m` cells, for any string of
/// length `len` with `ones` ones.
pub fn enclosure_by_count(prior: &ParamPrior, len: usize, ones: usize, m: usize) -> Result<(Rational, Rational)> {
    if m > prior.depth() {
        return Err(Error::Depth {
            string: BinaryString::repeat(false, m),
            length: m,
            depth: prior.depth(),
        });
    }
    let mut lo = Rational::zero();
    let mut hi = Rational::zero();
    for alpha in level_cells(m) {
        let w = prior.bar().at(&alpha);
        if w.is_zero() {
            continue;
        }
        let cell = ParamInterval::new(alpha);
        lo += cell.lower_count_mass(len, ones) * w;
        hi += cell.upper_count_mass(len, ones) * w;
    }
    Ok((lo, hi))
}

pub fn mixture_enclosure(prior: &ParamPrior, x: &BinaryString, m: usize) -> Result<(Rational, Rational)> {
    enclosure_by_count(prior, x.len(), x.ones(), m)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MixtureSchedule {
    pub depth: usize,
    /// Prior stage used on each level `0..=depth`.
    pub stages: Vec<u64>,
    /// Partition level used on each level `0..=depth`.
    pub partitions: Vec<usize>,
    pub clamp: bool,
}

impl MixtureSchedule {
    pub fn constant(depth: usize, stage: u64, partition: usize) -> Self {
        Self {
            depth,
            stages: vec![stage; depth + 1],
            partitions: vec![partition; depth + 1],
            clamp: true,
        }
    }

    /// Starts at `(stage, partition)`; every `every` levels the stage doubles
    /// and the partition deepens by one, up to `max_partition`.
    pub fn doubling(depth: usize, stage: u64, partition: usize, every: usize, max_partition: usize) -> Self {
        let every = every.max(1);
        let mut stages = Vec::with_capacity(depth + 1);
        let mut partitions = Vec::with_capacity(depth + 1);
        for n in 0..=depth {
            let steps = n / every;
            stages.push(stage.saturating_mul(1u64.checked_shl(steps as u32).unwrap_or(u64::MAX)));
            partitions.push((partition + steps).min(max_partition));
        }
        Self {
            depth,
            stages,
            partitions,
            clamp: true,
        }
    }

    fn check(&self, prior: &ParamPrior) -> Result<()> {
        if self.stages.len() != self.depth + 1 || self.partitions.len() != self.depth + 1 {
            return Err(Error::Precondition("schedule needs one entry per level 0..=depth".into()));
        }
        if self.stages.windows(2).any(|w| w[0] > w[1]) || self.partitions.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Precondition("schedule stages and partitions must be nondecreasing".into()));
        }
        if let Some(&m) = self.partitions.iter().find(|&&m| m > prior.depth()) {
            return Err(Error::Precondition(format!(
                "partition level {m} exceeds prior depth {}",
                prior.depth()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub stage: u64,
    pub partition: usize,
    pub mass: String,
    /// Parents whose children had to be scaled down.
    pub clamped: usize,
    /// The partition is coarser than the level.
    pub coarse: bool,
}

impl LevelReport {
    pub const CSV_HEADER: &'static str = "level,mass,stage,partition,clamped,coarse";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.level, self.mass, self.stage, self.partition, self.clamped, self.coarse
        )
    }
}

#[derive(Debug, Clone)]
pub struct MixtureOutcome {
    pub table: SemimeasureTable,
    pub levels: Vec<LevelReport>,
}

impl MixtureOutcome {
    pub fn clamp_count(&self) -> usize {
        self.levels.iter().map(|l| l.clamped).sum()
    }
}

/// Unclamped level-`n` values indexed by ones-count.
fn raw_level(prior: &ParamPrior, n: usize, stage: u64, m: usize) -> Vec<Rational> {
    let weights: Vec<(ParamInterval, Rational)> = level_cells(m)
        .map(|a| {
            let w = prior.staged(&a, stage);
            (ParamInterval::new(a), w)
        })
        .filter(|(_, w)| !w.is_zero())
        .collect();
    par::map_range(n + 1, |k| {
        weights
            .iter()
            .map(|(cell, w)| cell.lower_count_mass(n, k) * w)
            .sum()
    })
}

/// Builds the table without the mass audit.
pub fn build_mixture(prior: &ParamPrior, schedule: &MixtureSchedule) -> Result<MixtureOutcome> {
    schedule.check(prior)?;
    let mut table = SemimeasureTable::zero(schedule.depth);
    let mut levels = Vec::with_capacity(schedule.depth + 1);
    for n in 0..=schedule.depth {
        let stage = schedule.stages[n];
        let m = schedule.partitions[n];
        let raw = raw_level(prior, n, stage, m);
        let mut clamped = 0;
        if n == 0 {
            let mut v = raw[0].clone();
            if v > Rational::one() {
                if !schedule.clamp {
                    return Err(Error::Precondition("root value exceeds 1".into()));
                }
                v = Rational::one();
                clamped = 1;
            }
            table.set(&BinaryString::empty(), v);
        } else {
            for parent in BinaryString::level(n - 1) {
                let c0 = parent.child(false);
                let c1 = parent.child(true);
                let mut v0 = raw[c0.ones()].clone();
                let mut v1 = raw[c1.ones()].clone();
                let sum = &v0 + &v1;
                let cap = table.at(&parent);
                if &sum > cap {
                    if !schedule.clamp {
                        return Err(Error::Precondition(format!(
                            "children of {parent} exceed it and clamping is off"
                        )));
                    }
                    let factor = cap / &sum;
                    v0 *= &factor;
                    v1 *= &factor;
                    clamped += 1;
                }
                table.set(&c0, v0);
                table.set(&c1, v1);
            }
        }
        levels.push(LevelReport {
            level: n,
            stage,
            partition: m,
            mass: rational::format(&table.level_mass(n)),
            clamped,
            coarse: m < n,
        });
    }
    Ok(MixtureOutcome { table, levels })
}

fn check_epsilon(epsilon: &Rational) -> Result<()> {
    if epsilon <= &Rational::zero() || epsilon >= &Rational::one() {
        return Err(Error::Domain(format!("ε = {} outside (0, 1)", rational::format(epsilon))));
    }
    Ok(())
}

/// The prior's bar mass must reach `1 − ε/2` for the target to be reachable.
pub fn check_prior(prior: &ParamPrior, epsilon: &Rational) -> Result<()> {
    check_epsilon(epsilon)?;
    let target = Rational::one() - epsilon / Rational::from_integer(2.into());
    let bar_mass = prior.bar().at(&BinaryString::empty());
    if bar_mass < &target {
        return Err(Error::Precondition(format!(
            "prior bar mass {} below 1 − ε/2",
            rational::format(bar_mass)
        )));
    }
    Ok(())
}

/// `Σ_{l(x)=n} P(x) > 1 − ε` on every level; names the first level that fails.
pub fn audit_levels(p: &SemimeasureTable, epsilon: &Rational) -> Result<()> {
    check_epsilon(epsilon)?;
    let threshold = Rational::one() - epsilon;
    for n in 0..=p.depth() {
        let mass = p.level_mass(n);
        if mass <= threshold {
            return Err(Error::ScheduleInsufficient {
                level: n,
                mass: rational::format(&mass),
                threshold: rational::format(&threshold),
            });
        }
    }
    Ok(())
}

/// Builds the table and audits `Σ_{l(x)=n} P(x) > 1 − ε` on every level.
pub fn mixture_semimeasure(prior: &ParamPrior, schedule: &MixtureSchedule, epsilon: &Rational) -> Result<MixtureOutcome> {
    check_prior(prior, epsilon)?;
    let outcome = build_mixture(prior, schedule)?;
    audit_levels(&outcome.table, epsilon)?;
    Ok(outcome)
}

/// Strings where `P` exceeds the enclosure's upper end at the partition
/// level the schedule used for their length.
pub fn enclosure_excess(prior: &ParamPrior, schedule: &MixtureSchedule, p: &SemimeasureTable) -> Result<Vec<BinaryString>> {
    let mut out = Vec::new();
    for n in 0..=p.depth().min(schedule.depth) {
        let m = schedule.partitions[n];
        let his = par::map_range(n + 1, |k| enclosure_by_count(prior, n, k, m));
        let his: Vec<Rational> = his.into_iter().map(|r| r.map(|(_, hi)| hi)).collect::<Result<_>>()?;
        out.extend(BinaryString::level(n).filter(|x| p.at(x) > &his[x.ones()]));
    }
    Ok(out)
}

/// `Σ_{l(x)=n} P(x)`.
pub fn mass_profile(p: &SemimeasureTable, n: usize) -> Result<Rational> {
    if n > p.depth() {
        return Err(Error::Depth {
            string: BinaryString::repeat(false, n),
            length: n,
            depth: p.depth(),
        });
    }
    Ok(p.level_mass(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, pow, ratio};
    use num_traits::Signed;

    fn s(t: &str) -> BinaryString {
        t.parse().unwrap()
    }

    fn halves() -> ParamPrior {
        ParamPrior::new(SemimeasureTable::from_values(1, vec![int(1), ratio(1, 2), ratio(1, 2)])).unwrap()
    }

    /// Prior concentrated on the path of 1/2 = 0.1000…: α = 1 0^(m−1).
    fn half_path(depth: usize) -> ParamPrior {
        ParamPrior::new(SemimeasureTable::from_fn(depth, |a| {
            let on = a.bits().iter().enumerate().all(|(i, &b)| b == (i == 0));
            if on { int(1) } else { int(0) }
        }))
        .unwrap()
    }

    /// `∫ θ^k (1−θ)^(n−k) dθ` over `[a, b]`, by the polynomial expansion.
    fn beta_integral(n: usize, k: usize, a: &Rational, b: &Rational) -> Rational {
        let mut total = Rational::zero();
        for j in 0..=n - k {
            let c = Rational::from_integer(crate::bernoulli::binomial(n - k, j).into());
            let sign = if j % 2 == 0 { int(1) } else { int(-1) };
            let e = k + j + 1;
            total += sign * c * (pow(b, e) - pow(a, e)) / int(e as i64);
        }
        total
    }

    #[test]
    fn uniform_level_one_enclosure() {
        let (lo, hi) = mixture_enclosure(&halves(), &s("1"), 1).unwrap();
        assert_eq!((lo.clone(), hi.clone()), (ratio(1, 4), ratio(3, 4)));
        let truth = beta_integral(1, 1, &int(0), &int(1));
        assert_eq!(truth, ratio(1, 2));
        assert!(lo <= truth && truth <= hi);
    }

    #[test]
    fn empty_string_encloses_total_mass() {
        let p = half_path(4);
        for m in 0..=4 {
            assert_eq!(mixture_enclosure(&p, &s("-"), m).unwrap(), (int(1), int(1)));
        }
    }

    #[test]
    fn enclosures_nest_and_contain_uniform_prior_integral() {
        let prior = ParamPrior::new(SemimeasureTable::uniform(6)).unwrap();
        for x in BinaryString::up_to(5) {
            let truth = beta_integral(x.len(), x.ones(), &int(0), &int(1));
            let mut prev = (int(0), int(2));
            for m in 0..=6 {
                let (lo, hi) = mixture_enclosure(&prior, &x, m).unwrap();
                assert!(prev.0 <= lo && hi <= prev.1, "{x} at m = {m}");
                assert!(lo <= truth && truth <= hi);
                prev = (lo, hi);
            }
        }
    }

    #[test]
    fn point_prior_tracks_fair_coin() {
        let prior = half_path(8);
        let out = build_mixture(&prior, &MixtureSchedule::constant(6, EXACT_STAGE, 8)).unwrap();
        assert!(out.table.is_valid());
        assert_eq!(out.clamp_count(), 0);
        let cell = ParamInterval::new(s("10000000"));
        for x in BinaryString::up_to(6) {
            let b = pow(&ratio(1, 2), x.len());
            let p = out.table.at(&x);
            assert!(p <= &b);
            assert_eq!(p, &cell.lower_count_mass(x.len(), x.ones()));
        }
        let floor = Rational::one() - pow(&ratio(1, 2), 8);
        for n in 0..=6 {
            assert!(mass_profile(&out.table, n).unwrap() >= pow(&floor, n));
        }
    }

    #[test]
    fn frozen_schedule_never_clamps() {
        let prior = ParamPrior::new(SemimeasureTable::from_fn(5, |a| ratio(9, 10).pow(a.len() as i32) * pow(&ratio(1, 2), a.len()))).unwrap();
        let out = build_mixture(&prior, &MixtureSchedule::constant(7, 12, 5)).unwrap();
        assert_eq!(out.clamp_count(), 0);
        assert!(out.table.is_valid());
    }

    #[test]
    fn refining_schedule_clamps_and_stays_valid() {
        // Deepening partitions over a leaky prior add mass level to level.
        let prior = ParamPrior::new(SemimeasureTable::from_fn(6, |a| ratio(3, 4).pow(a.len() as i32) * pow(&ratio(1, 2), a.len()))).unwrap();
        let sched = MixtureSchedule::doubling(8, 4, 0, 1, 6);
        let out = build_mixture(&prior, &sched).unwrap();
        assert!(out.table.is_valid());
        assert!(out.clamp_count() > 0);
        let mut unclamped = sched.clone();
        unclamped.clamp = false;
        assert!(matches!(build_mixture(&prior, &unclamped), Err(Error::Precondition(_))));
        assert!(out.levels.iter().any(|l| l.coarse));
    }

    #[test]
    fn mixture_below_enclosure_hi() {
        let prior = ParamPrior::new(SemimeasureTable::from_fn(6, |a| ratio(19, 20).pow(a.len() as i32) * pow(&ratio(1, 2), a.len()))).unwrap();
        let out = build_mixture(&prior, &MixtureSchedule::constant(6, 20, 6)).unwrap();
        for x in BinaryString::up_to(6) {
            for m in 0..=6 {
                let (_, hi) = mixture_enclosure(&prior, &x, m).unwrap();
                assert!(out.table.at(&x) <= &hi);
            }
        }
    }

    #[test]
    fn audit_reports_the_failing_level() {
        let prior = ParamPrior::new(SemimeasureTable::uniform(4)).unwrap();
        // Partition 1 loses half the mass per level.
        let err = mixture_semimeasure(&prior, &MixtureSchedule::constant(4, EXACT_STAGE, 1), &ratio(1, 4));
        assert!(matches!(err, Err(Error::ScheduleInsufficient { level: 1, .. })));
        let ok = mixture_semimeasure(&prior, &MixtureSchedule::constant(4, EXACT_STAGE, 4), &ratio(1, 4)).unwrap();
        assert!(ok.levels.iter().all(|l| rational::parse(&l.mass).unwrap() > ratio(3, 4)));
    }

    #[test]
    fn prior_too_light_is_rejected() {
        let prior = ParamPrior::new(SemimeasureTable::from_fn(2, |a| pow(&ratio(1, 4), a.len()))).unwrap();
        assert!(matches!(
            mixture_semimeasure(&prior, &MixtureSchedule::constant(2, EXACT_STAGE, 2), &ratio(1, 4)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn staged_prior_is_monotone() {
        let prior = ParamPrior::new(SemimeasureTable::from_fn(3, |a| pow(&ratio(1, 3), a.len()))).unwrap();
        let a = s("01");
        let mut prev = int(0);
        for st in 0..30 {
            let v = prior.staged(&a, st);
            assert!(v >= prev && v <= ratio(1, 9));
            assert!(!v.is_negative());
            prev = v;
        }
        assert_eq!(prior.staged(&a, EXACT_STAGE), ratio(1, 9));
    }
}
