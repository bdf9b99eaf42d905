//! The staged network construction.
//!
//! Step `n` serves task `I = p(n)`, a (program, session) pair. Depending on
//! the task's watermark `w(I, q^(n-1))` it either opens the task by putting
//! delay `1/ρ(n)` on the whole of level `n` (Case 1), plants extra edges that
//! route delayed flow past transducer images (Case 2), or does nothing
//! (Case 3). Every action is appended to an event trace so each inequality
//! can be re-checked afterwards.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::network::{flow_eval, minimal_semimeasure, ExtraEdge, FlowNetwork, NetworkMeta};
use super::pairing::{pair, pair_string, unpair, unpair_first};
use super::transducer::TransducerRoster;
use crate::dyadic::{BinaryString, SimpleSet};
use crate::error::{Error, Result};
use crate::rational::{self, int, ratio, Rational};
use crate::table::{slot, SemimeasureTable};

/// `ρ(n) = (n + n₀)²`.
pub fn rho(n: u64, n0: u64) -> u64 {
    (n + n0) * (n + n0)
}

/// Least `n₀` certified by `Σ_{n ≥ 1} (n + n₀)^-2 < 1/n₀ ≤ ε`.
pub fn default_n0(epsilon: &Rational) -> Result<u64> {
    if epsilon <= &Rational::zero() || epsilon > &Rational::one() {
        return Err(Error::Domain(format!(
            "epsilon = {} outside (0, 1]",
            rational::format(epsilon)
        )));
    }
    let n0 = epsilon.recip().ceil().to_integer();
    u64::try_from(n0).map_err(|_| Error::Domain("n0 overflows".into()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionParams {
    #[serde(with = "rational_text")]
    pub epsilon: Rational,
    pub depth: usize,
    pub n0: u64,
    /// Step budget for every transducer run inside the predicate.
    pub step_budget: u64,
    /// Validate the whole network after every step.
    pub audit_networks: bool,
}

impl ConstructionParams {
    pub fn new(epsilon: Rational, depth: usize) -> Result<Self> {
        if depth == 0 || depth > 24 {
            return Err(Error::Domain(format!("depth {depth} outside 1..=24")));
        }
        let n0 = default_n0(&epsilon)?;
        Ok(Self {
            epsilon,
            depth,
            n0,
            step_budget: 1 << 16,
            audit_networks: true,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepCase {
    /// Level `n` receives delay `1/ρ(n)`.
    Open,
    /// Extra edges are planted for the current task.
    Process,
    Idle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum TraceEvent {
    Step {
        step: usize,
        task: u64,
        program: u64,
        session: u64,
        watermark: u64,
        case: StepCase,
    },
    LevelDelay {
        step: usize,
        level: usize,
        delay: String,
    },
    EdgeAdded {
        step: usize,
        task: u64,
        /// Position of the start vertex in the step's processing order.
        order: usize,
        st: BinaryString,
        ter: BinaryString,
        q: String,
        sibling_delay: String,
        cover_index: u64,
    },
    Audit {
        step: usize,
        x: BinaryString,
        lhs: String,
        rhs: String,
        holds: bool,
        /// Flow entering the subtree of `x` through edges that skip `x`.
        bypass: String,
    },
    Note {
        step: usize,
        message: String,
    },
}

/// `Σ_{l(z)=n, x⊆z} dⁿ(z)Rⁿ(z) ≤ dⁿ⁻¹(x)Rⁿ⁻¹(x)` at one processed vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Audit {
    pub step: usize,
    pub x: BinaryString,
    pub lhs: Rational,
    pub rhs: Rational,
    /// Flow carried into the subtree of `x` by extra edges starting outside
    /// it. The inequality assumes this is zero.
    pub bypass: Rational,
}

impl Audit {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WatermarkRecord {
    pub step: usize,
    pub task: u64,
    pub watermark: u64,
    pub case: StepCase,
}

/// Evolving state: delays on every vertex, planted edges, the flow on the
/// levels already fixed, and the trace.
#[derive(Debug, Clone)]
pub struct ConstructionState {
    pub params: ConstructionParams,
    pub roster: TransducerRoster,
    step: usize,
    delays: Vec<Rational>,
    extras: Vec<ExtraEdge>,
    flow: Vec<Rational>,
    pub trace: Vec<TraceEvent>,
    pub watermarks: Vec<WatermarkRecord>,
    pub audits: Vec<Audit>,
    /// Steps after which the network failed validation (should stay empty).
    pub invalid_steps: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub task_edge_counts: BTreeMap<u64, usize>,
    pub open_levels: Vec<usize>,
    /// `(level, Σ R, Σ Q)` for every level.
    pub mass_profile: Vec<(usize, Rational, Rational)>,
    /// `1 − Σ_{n=1}^{D} ρ(n)^-1`.
    pub mass_lower_bound: Rational,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ConstructionOutcome {
    pub state: ConstructionState,
    pub network: FlowNetwork,
    pub flow: SemimeasureTable,
    pub semimeasure: SemimeasureTable,
    pub diagnostics: Diagnostics,
}

impl ConstructionState {
    pub fn new(params: ConstructionParams, roster: TransducerRoster) -> Result<Self> {
        for t in &roster.0 {
            t.check()?;
        }
        let size = (1usize << (params.depth + 1)) - 1;
        Ok(Self {
            params,
            roster,
            step: 0,
            delays: vec![Rational::zero(); size],
            extras: Vec::new(),
            flow: vec![Rational::one()],
            trace: Vec::new(),
            watermarks: Vec::new(),
            audits: Vec::new(),
            invalid_steps: Vec::new(),
        })
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn delay(&self, x: &BinaryString) -> &Rational {
        &self.delays[slot(x)]
    }

    pub fn extras(&self) -> &[ExtraEdge] {
        &self.extras
    }

    /// `R(x)` for `l(x) <= step`.
    pub fn flow_at(&self, x: &BinaryString) -> &Rational {
        &self.flow[slot(x)]
    }

    fn closed(&self, x: &BinaryString) -> bool {
        self.delays[slot(x)] == Rational::one()
    }

    /// `w(I, q)`: least `m ≥ 1` with `p(m) = I` lying beyond every terminal
    /// planted by a task below `I`.
    pub fn watermark(&self, task: u64) -> u64 {
        let floor = self
            .extras
            .iter()
            .filter(|e| e.task.is_some_and(|t| t < task))
            .map(|e| e.ter.len() as u64)
            .max()
            .unwrap_or(0);
        (0..)
            .map(|k| pair(task, k))
            .find(|&m| m >= 1 && m > floor)
            .expect("pairing is unbounded")
    }

    /// The network `qⁿ` at the current step.
    pub fn network(&self) -> FlowNetwork {
        let depth = self.params.depth;
        let mut net = FlowNetwork::elementary(depth);
        let half = ratio(1, 2);
        for i in 0..((1usize << depth) - 1) {
            let d = &self.delays[i];
            if !d.is_zero() {
                let q = (Rational::one() - d) * &half;
                net.set_unit(&BinaryString::from_index(i as u64), q.clone(), q);
            }
        }
        for e in &self.extras {
            net.add_extra(e.clone());
        }
        net.meta = Some(NetworkMeta {
            n0: self.params.n0,
            epsilon: self.params.epsilon.clone(),
        });
        net
    }

    /// Runs every remaining step up to the depth budget.
    pub fn run(&mut self) -> Result<()> {
        while self.step < self.params.depth {
            self.advance()?;
        }
        Ok(())
    }

    /// Performs one construction step.
    pub fn advance(&mut self) -> Result<()> {
        let n = self.step + 1;
        assert!(n <= self.params.depth, "construction already at depth");
        let task = unpair_first(n as u64);
        let (program, session) = unpair(task);
        let watermark = self.watermark(task);
        let case = match watermark.cmp(&(n as u64)) {
            std::cmp::Ordering::Equal => StepCase::Open,
            std::cmp::Ordering::Less => StepCase::Process,
            std::cmp::Ordering::Greater => StepCase::Idle,
        };
        self.trace.push(TraceEvent::Step {
            step: n,
            task,
            program,
            session,
            watermark,
            case,
        });
        self.watermarks.push(WatermarkRecord {
            step: n,
            task,
            watermark,
            case,
        });

        let mut processed: Vec<BinaryString> = Vec::new();
        match case {
            StepCase::Open => {
                let delay = Rational::new(1.into(), rho(n as u64, self.params.n0).into());
                for i in level_range(n) {
                    self.delays[i] = delay.clone();
                }
                self.trace.push(TraceEvent::LevelDelay {
                    step: n,
                    level: n,
                    delay: rational::format(&delay),
                });
            }
            StepCase::Process => {
                processed = self.process_task(n, task, session, watermark)?;
            }
            StepCase::Idle => {}
        }

        self.extend_flow(n);
        self.step = n;

        for x in processed {
            let lhs: Rational = level_range(n)
                .filter(|&i| x.is_prefix_of(&BinaryString::from_index(i as u64)))
                .map(|i| &self.delays[i] * &self.flow[i])
                .sum();
            let rhs = &self.delays[slot(&x)] * &self.flow[slot(&x)];
            let bypass: Rational = self
                .extras
                .iter()
                .filter(|e| e.ter.len() <= n && x.is_prefix_of(&e.ter) && e.ter != x && !x.is_prefix_of(&e.st))
                .map(|e| &e.q * &self.flow[slot(&e.st)])
                .sum();
            let audit = Audit { step: n, x, lhs, rhs, bypass };
            self.trace.push(TraceEvent::Audit {
                step: n,
                x: audit.x.clone(),
                lhs: rational::format(&audit.lhs),
                rhs: rational::format(&audit.rhs),
                holds: audit.holds(),
                bypass: rational::format(&audit.bypass),
            });
            self.audits.push(audit);
        }

        if self.params.audit_networks && !self.network().validate().is_empty() {
            self.invalid_steps.push(n);
        }
        Ok(())
    }

    /// Case 2 at step `n`: collect `C_n`, plant one edge per member, adjust
    /// level-`n` delays. Returns the processed start vertices.
    fn process_task(
        &mut self,
        n: usize,
        task: u64,
        session: u64,
        watermark: u64,
    ) -> Result<Vec<BinaryString>> {
        let program = unpair_first(task);
        if self.roster.get(program).is_err() {
            self.trace.push(TraceEvent::Note {
                step: n,
                message: format!("program {program} outside roster; task {task} plants nothing"),
            });
            return Ok(Vec::new());
        }
        let has_edge: std::collections::BTreeSet<BinaryString> =
            self.extras.iter().map(|e| e.st.clone()).collect();

        // Every candidate and its β is computed against qⁿ⁻¹ before any change.
        let mut members: Vec<(BinaryString, BinaryString)> = Vec::new();
        let mut budget_hits = 0usize;
        for level in (watermark as usize)..n {
            if unpair_first(level as u64) != task {
                continue;
            }
            for i in level_range(level) {
                let d = &self.delays[i];
                if d.is_zero() || d == &Rational::one() {
                    continue;
                }
                let x = BinaryString::from_index(i as u64);
                if has_edge.contains(&x) {
                    continue;
                }
                let (beta, hits) = self.beta(&x, program, session, n);
                budget_hits += hits;
                if let Some(y) = beta {
                    members.push((x, y));
                }
            }
        }
        if budget_hits > 0 {
            self.trace.push(TraceEvent::Note {
                step: n,
                message: format!("{budget_hits} transducer runs hit the step budget"),
            });
        }
        members.sort();

        let mut assigned = vec![false; 1usize << n];
        let level_start = (1usize << n) - 1;
        let mut processed = Vec::with_capacity(members.len());
        for (order, (x, y)) in members.into_iter().enumerate() {
            let dx = self.delays[slot(&x)].clone();
            let sibling = &dx / (Rational::one() - &dx);
            let y_slot = slot(&y);
            if !assigned[y_slot - level_start] {
                self.delays[y_slot] = Rational::zero();
                assigned[y_slot - level_start] = true;
            }
            for i in subtree_level_range(&x, n) {
                if i != y_slot && !assigned[i - level_start] {
                    self.delays[i] = sibling.clone();
                    assigned[i - level_start] = true;
                }
            }
            let cover_index = pair_string(&x, session);
            self.trace.push(TraceEvent::EdgeAdded {
                step: n,
                task,
                order,
                st: x.clone(),
                ter: y.clone(),
                q: rational::format(&dx),
                sibling_delay: rational::format(&sibling),
                cover_index,
            });
            self.extras.push(ExtraEdge {
                st: x.clone(),
                ter: y,
                q: dx,
                task: Some(task),
            });
            processed.push(x);
        }
        Ok(processed)
    }

    /// `β(x, q, n)`: the lexicographically least `y ⊇ x` of length `n` with no
    /// closed prefix whose transducer image is longer than `⟨x, s⟩`. Also
    /// returns how many runs were cut short by the step budget.
    fn beta(&self, x: &BinaryString, program: u64, session: u64, n: usize) -> (Option<BinaryString>, usize) {
        if (1..=x.len()).any(|k| self.closed(&x.prefix(k))) {
            return (None, 0);
        }
        let transducer = self.roster.get(program).expect("checked by caller");
        let target = pair_string(x, session);
        let mut hits = 0usize;
        // Depth-first in lexicographic order, pruning closed vertices.
        let mut stack = vec![x.clone()];
        while let Some(y) = stack.pop() {
            if y.len() > x.len() && y.len() < n && self.closed(&y) {
                continue;
            }
            if y.len() == n {
                let (out, exhausted) = transducer.run_with_status(&y, self.params.step_budget);
                hits += exhausted as usize;
                if out.len() as u64 > target {
                    return (Some(y), hits);
                }
                continue;
            }
            stack.push(y.child(true));
            stack.push(y.child(false));
        }
        (None, hits)
    }

    fn extend_flow(&mut self, n: usize) {
        let half = ratio(1, 2);
        let mut incoming: BTreeMap<usize, Vec<(usize, &Rational)>> = BTreeMap::new();
        for e in &self.extras {
            if e.ter.len() == n {
                incoming.entry(slot(&e.ter)).or_default().push((slot(&e.st), &e.q));
            }
        }
        let mut level = Vec::with_capacity(1 << n);
        for i in level_range(n) {
            let parent = (i - 1) / 2;
            let unit = (Rational::one() - &self.delays[parent]) * &half;
            let mut r = unit * &self.flow[parent];
            if let Some(edges) = incoming.get(&i) {
                for (st, q) in edges {
                    r += *q * &self.flow[*st];
                }
            }
            level.push(r);
        }
        self.flow.extend(level);
    }

    /// Lower approximation at stage `t`: the least semimeasure dominating the
    /// flow on levels `≤ t`. Nondecreasing in `t`; exact once `t ≥ depth`.
    pub fn stage_table(&self, t: usize) -> SemimeasureTable {
        let depth = self.params.depth;
        let reach = t.min(self.step);
        let size = (1usize << (depth + 1)) - 1;
        let cut = (1usize << (reach + 1)) - 1;
        let mut values = self.flow[..cut].to_vec();
        values.resize(size, Rational::zero());
        SemimeasureTable::from_values(depth, values).minimal_dominating()
    }

    /// Levels scheduled for `task` within the depth budget.
    pub fn scheduled_steps(&self, task: u64) -> Vec<usize> {
        (1..=self.params.depth)
            .filter(|&n| unpair_first(n as u64) == task)
            .collect()
    }
}

fn level_range(n: usize) -> std::ops::Range<usize> {
    ((1usize << n) - 1)..((1usize << (n + 1)) - 1)
}

fn subtree_level_range(x: &BinaryString, n: usize) -> std::ops::Range<usize> {
    let shift = n - x.len();
    let first = (1usize << n) - 1 + ((x.value() as usize) << shift);
    first..first + (1usize << shift)
}

/// The branching predicate for task `⟨i, s⟩` at step `n`: `y` has length
/// `n`, extends `x`, has no closed prefix, and transducer `i` maps it to a
/// word longer than `⟨x, s⟩` within the state's step budget.
pub fn predicate_b(
    task: u64,
    x: &BinaryString,
    y: &BinaryString,
    state: &ConstructionState,
    n: usize,
) -> Result<bool> {
    let (program, session) = unpair(task);
    let transducer = state.roster.get(program)?;
    if y.len() != n || !x.is_prefix_of(y) {
        return Ok(false);
    }
    if y.len() > state.params.depth {
        return Ok(false);
    }
    if (1..=n).any(|k| state.closed(&y.prefix(k))) {
        return Ok(false);
    }
    let out = transducer.run(y, state.params.step_budget);
    Ok(out.len() as u64 > pair_string(x, session))
}

/// Runs the construction to `params.depth` and evaluates the resulting flow.
pub fn construct(roster: TransducerRoster, params: ConstructionParams) -> Result<ConstructionOutcome> {
    let mut state = ConstructionState::new(params, roster)?;
    state.run()?;
    let network = state.network();
    let flow = flow_eval(&network);
    debug_assert_eq!(flow.values(), &state.flow[..]);
    let semimeasure = minimal_semimeasure(&flow, &network)?;

    let depth = state.params.depth;
    let mut task_edge_counts: BTreeMap<u64, usize> = BTreeMap::new();
    for e in state.extras() {
        *task_edge_counts.entry(e.task.unwrap_or(u64::MAX)).or_default() += 1;
    }
    let open_levels = state
        .watermarks
        .iter()
        .filter(|w| w.case == StepCase::Open)
        .map(|w| w.step)
        .collect();
    let mass_profile = (0..=depth)
        .map(|n| (n, flow.level_mass(n), semimeasure.level_mass(n)))
        .collect();
    let leak: Rational = (1..=depth as u64)
        .map(|n| Rational::new(1.into(), rho(n, state.params.n0).into()))
        .sum();
    let mut notes = Vec::new();
    if !state.invalid_steps.is_empty() {
        notes.push(format!("network invalid after steps {:?}", state.invalid_steps));
    }
    let failed: Vec<_> = state.audits.iter().filter(|a| !a.holds()).map(|a| (a.step, a.x.to_string())).collect();
    if !failed.is_empty() {
        notes.push(format!("flow audit failed at {failed:?}"));
    }
    for e in &state.trace {
        if let TraceEvent::Note { step, message } = e {
            notes.push(format!("step {step}: {message}"));
        }
    }
    let diagnostics = Diagnostics {
        task_edge_counts,
        open_levels,
        mass_profile,
        mass_lower_bound: int(1) - leak,
        notes,
    };
    Ok(ConstructionOutcome {
        state,
        network,
        flow,
        semimeasure,
        diagnostics,
    })
}

/// The cover built by task `⟨program, session⟩`: for each planted edge
/// `(x, y)`, the cylinder of the first `⟨x, s⟩` bits of the image of `y`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringReport {
    pub task: u64,
    pub scheduled: bool,
    pub cover: SimpleSet,
    /// Exact uniform measure of the union.
    pub measure: Rational,
    /// `Σ 2^-⟨x,s⟩` over the planted edges' start vertices.
    pub bound: Rational,
    pub edges: Vec<(BinaryString, BinaryString)>,
}

pub fn covering_sets(state: &ConstructionState, program: u64, session: u64) -> Result<CoveringReport> {
    let transducer = state.roster.get(program)?;
    let task = pair(program, session);
    let scheduled = !state.scheduled_steps(task).is_empty();
    let mut cylinders = Vec::new();
    let mut bound = Rational::zero();
    let mut edges = Vec::new();
    for e in state.extras().iter().filter(|e| e.task == Some(task)) {
        let k = pair_string(&e.st, session);
        let image = transducer.run(&e.ter, state.params.step_budget);
        debug_assert!(image.len() as u64 > k);
        cylinders.push(image.prefix(k as usize));
        bound += rational::dyadic(k as usize);
        edges.push((e.st.clone(), e.ter.clone()));
    }
    let cover = SimpleSet::covering(cylinders);
    let measure = cover.uniform_measure();
    Ok(CoveringReport {
        task,
        scheduled,
        cover,
        measure,
        bound,
        edges,
    })
}

mod rational_text {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rational::format(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let t = String::deserialize(d)?;
        rational::parse(&t).ok_or_else(|| serde::de::Error::custom(format!("bad rational {t:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::MonotoneTransducer;

    fn s(t: &str) -> BinaryString {
        t.parse().unwrap()
    }

    fn params(eps: Rational, depth: usize) -> ConstructionParams {
        ConstructionParams::new(eps, depth).unwrap()
    }

    #[test]
    fn n0_examples() {
        assert_eq!(default_n0(&ratio(1, 4)).unwrap(), 4);
        assert_eq!(default_n0(&ratio(1, 8)).unwrap(), 8);
        assert_eq!(default_n0(&ratio(2, 7)).unwrap(), 4);
        assert!(default_n0(&ratio(0, 1)).is_err());
    }

    #[test]
    fn empty_roster_opens_first_occurrences_only() {
        let out = construct(TransducerRoster::default(), params(ratio(1, 4), 12)).unwrap();
        assert!(out.state.extras().is_empty());
        // First n with p(n) = I, for I = 1, 0, 2, 3, 4.
        assert_eq!(out.diagnostics.open_levels, vec![1, 2, 3, 6, 10]);
        let expected: Rational = [1u64, 2, 3, 6, 10]
            .iter()
            .map(|&n| int(1) - Rational::new(1.into(), rho(n, 4).into()))
            .product();
        assert_eq!(out.semimeasure.level_mass(12), expected);
        assert!(expected >= int(1) - ratio(1, 4));
        assert!(out.semimeasure.is_valid());
    }

    #[test]
    fn audit_breaks_only_under_bypassing_flow() {
        let roster = TransducerRoster::from_names(&["identity", "constant-zero"]).unwrap();
        let out = construct(roster, params(ratio(1, 4), 12)).unwrap();
        for a in &out.state.audits {
            if a.bypass.is_zero() {
                assert!(a.holds(), "step {} at {}", a.step, a.x);
            }
        }
        // Edge (0, 0000) from step 4 feeds the subtree of 00 processed at step 9.
        let a = out.state.audits.iter().find(|a| a.step == 9).unwrap();
        assert_eq!(a.x, "00".parse().unwrap());
        assert_eq!(a.bypass, ratio(1, 50));
        assert!(!a.holds());
        assert!(out.semimeasure.level_mass(12) >= int(1) - ratio(1, 4));
    }

    #[test]
    fn identity_roster_plants_task_consistent_edges() {
        let roster = TransducerRoster(vec![MonotoneTransducer::identity()]);
        let out = construct(roster, params(ratio(1, 4), 12)).unwrap();
        assert!(!out.state.extras().is_empty());
        for e in out.state.extras() {
            let t = e.task.unwrap();
            assert_eq!(unpair_first(e.st.len() as u64), t);
            assert_eq!(unpair_first(e.ter.len() as u64), t);
        }
        assert!(out.state.invalid_steps.is_empty());
        assert!(out.state.audits.iter().all(Audit::holds));
    }

    #[test]
    fn first_identity_edge_matches_hand_trace() {
        // Task 0 opens level 2; at step 9 only x = 00 has ⟨x, 0⟩ = 6 < 9.
        let roster = TransducerRoster(vec![MonotoneTransducer::identity()]);
        let out = construct(roster, params(ratio(1, 4), 9)).unwrap();
        let edges: Vec<_> = out.state.extras().iter().filter(|e| e.task == Some(0)).collect();
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].st, s("00"));
        assert_eq!(edges[0].ter, s("000000000"));
        assert_eq!(edges[0].q, ratio(1, 36));
        assert_eq!(out.state.delay(&s("000000001")), &ratio(1, 35));
        assert!(out.state.delay(&s("000000000")).is_zero());
    }

    #[test]
    fn predicate_examples() {
        let roster = TransducerRoster(vec![MonotoneTransducer::identity()]);
        let mut state = ConstructionState::new(params(ratio(1, 4), 6), roster).unwrap();
        // ⟨Λ, 0⟩ = 0, so any y of positive length works while nothing is closed.
        assert!(predicate_b(0, &s("-"), &s("0110"), &state, 4).unwrap());
        assert!(!predicate_b(0, &s("-"), &s("0110"), &state, 5).unwrap());
        assert!(!predicate_b(0, &s("1"), &s("0110"), &state, 4).unwrap());
        assert!(matches!(predicate_b(1, &s("-"), &s("0"), &state, 1), Err(Error::UnknownProgram(1))));
        state.delays[slot(&s("01"))] = int(1);
        assert!(!predicate_b(0, &s("-"), &s("0110"), &state, 4).unwrap());
    }

    #[test]
    fn stage_tables_increase() {
        let roster = TransducerRoster::from_names(&["identity", "constant-zero"]).unwrap();
        let out = construct(roster, params(ratio(1, 4), 8)).unwrap();
        let mut prev = out.state.stage_table(0);
        for t in 1..=9 {
            let next = out.state.stage_table(t);
            assert!(next.values().iter().zip(prev.values()).all(|(a, b)| a >= b));
            assert!(next.is_valid());
            prev = next;
        }
        assert_eq!(prev, out.semimeasure);
    }

    #[test]
    fn unscheduled_task_has_empty_cover() {
        let roster = TransducerRoster(vec![MonotoneTransducer::identity()]);
        let out = construct(roster, params(ratio(1, 4), 6)).unwrap();
        let report = covering_sets(&out.state, 0, 7).unwrap();
        assert!(!report.scheduled);
        assert!(report.cover.is_empty());
        assert!(report.measure.is_zero());
    }
}
