//! A finite weighted roster standing in for the universal semimeasure.
//!
//! Each component is a semimeasure evaluator with a notion of stage: exactly
//! computable components ignore the stage, staged ones (tables produced by
//! the network construction) grow with it and are exact from
//! [`Semimeasure::exact_stage`] on. The mixture `M_t = Σ w_i P_i` dominates
//! every component with its weight, which is all the deficiency experiments
//! need.

use std::path::Path;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::bernoulli::{BernoulliParam, bernoulli_mass};
use crate::dyadic::{BinaryString, SimpleSet};
use crate::error::{Error, Result};
use crate::flow::{construct, ConstructionParams, TransducerRoster};
use crate::rational::{self, dyadic, Rational};
use crate::table::SemimeasureTable;

/// A lower-semicomputable semimeasure presented through stage-indexed values.
pub trait Semimeasure: Send + Sync {
    fn eval(&self, x: &BinaryString, stage: u64) -> Rational;

    /// First stage from which values no longer change.
    fn exact_stage(&self) -> u64 {
        0
    }

    /// Mass of any one string of length `len` with `ones` ones, when the
    /// semimeasure is exchangeable (depends only on that count).
    fn count_mass(&self, _len: usize, _ones: usize) -> Option<Rational> {
        None
    }

    fn table(&self, depth: usize, stage: u64) -> SemimeasureTable {
        SemimeasureTable::from_fn(depth, |x| self.eval(x, stage))
    }

    /// Value at the exact stage.
    fn exact(&self, x: &BinaryString) -> Rational {
        self.eval(x, self.exact_stage())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    /// The uniform measure L.
    Uniform,
    Bernoulli(BernoulliParam),
    /// Point mass on `prefix · cycle^∞`.
    PointMass { prefix: BinaryString, cycle: BinaryString },
    /// Uniform prior over θ: `k!(n−k)!/(n+1)!`.
    Laplace,
    /// An exact table; zero below its depth.
    Table(SemimeasureTable),
    /// Lower approximations by stage; the last entry is exact.
    Staged(Vec<SemimeasureTable>),
}

impl Component {
    pub fn point_mass_constant(bit: bool) -> Self {
        Component::PointMass {
            prefix: BinaryString::empty(),
            cycle: BinaryString::repeat(bit, 1),
        }
    }

    fn sequence_bit(prefix: &BinaryString, cycle: &BinaryString, i: usize) -> bool {
        if i < prefix.len() {
            prefix.bits()[i]
        } else {
            cycle.bits()[(i - prefix.len()) % cycle.len()]
        }
    }
}

fn factorial_ratio(len: usize, ones: usize) -> Rational {
    // k!(n−k)!/(n+1)! = 1 / ((n+1) C(n, k))
    let c = crate::bernoulli::binomial(len, ones);
    Rational::new(1.into(), (c * (len + 1)).into())
}

impl Semimeasure for Component {
    fn eval(&self, x: &BinaryString, stage: u64) -> Rational {
        match self {
            Component::Uniform => dyadic(x.len()),
            Component::Bernoulli(theta) => bernoulli_mass(theta, x),
            Component::PointMass { prefix, cycle } => {
                let hit = x
                    .bits()
                    .iter()
                    .enumerate()
                    .all(|(i, &b)| b == Self::sequence_bit(prefix, cycle, i));
                if hit { Rational::one() } else { Rational::zero() }
            }
            Component::Laplace => factorial_ratio(x.len(), x.ones()),
            Component::Table(t) => t.get(x).cloned().unwrap_or_else(|_| Rational::zero()),
            Component::Staged(stages) => {
                let t = &stages[(stage as usize).min(stages.len() - 1)];
                t.get(x).cloned().unwrap_or_else(|_| Rational::zero())
            }
        }
    }

    fn exact_stage(&self) -> u64 {
        match self {
            Component::Staged(stages) => stages.len() as u64 - 1,
            _ => 0,
        }
    }

    fn count_mass(&self, len: usize, ones: usize) -> Option<Rational> {
        match self {
            Component::Uniform => Some(dyadic(len)),
            Component::Bernoulli(theta) => Some(theta.count_mass(len, ones)),
            Component::Laplace => Some(factorial_ratio(len, ones)),
            Component::PointMass { prefix, cycle } if prefix.is_empty() && cycle.len() == 1 => {
                let bit = cycle.bits()[0];
                let matches = if bit { ones == len } else { ones == 0 };
                Some(if matches { Rational::one() } else { Rational::zero() })
            }
            _ => None,
        }
    }
}

/// `M_t = Σ w_i P_i` over a finite roster with `Σ w_i ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyMixture {
    components: Vec<(Rational, Component)>,
}

impl ProxyMixture {
    /// Explicit weights; each must be positive and the total at most 1.
    pub fn new(components: Vec<(Rational, Component)>) -> Result<Self> {
        if components.iter().any(|(w, _)| !w.is_positive()) {
            return Err(Error::Domain("roster weights must be positive".into()));
        }
        let total: Rational = components.iter().map(|(w, _)| w.clone()).sum();
        if total > Rational::one() {
            return Err(Error::Domain(format!(
                "roster weights sum to {} > 1",
                rational::format(&total)
            )));
        }
        Ok(Self { components })
    }

    /// Weights `1/(i(i+1))` by roster position `i = 1, 2, ...`.
    pub fn with_default_weights(components: Vec<Component>) -> Self {
        let components = components
            .into_iter()
            .enumerate()
            .map(|(i, c)| (default_weight(i + 1), c))
            .collect();
        Self { components }
    }

    pub fn components(&self) -> &[(Rational, Component)] {
        &self.components
    }

    pub fn total_weight(&self) -> Rational {
        self.components.iter().map(|(w, _)| w.clone()).sum()
    }
}

pub fn default_weight(i: usize) -> Rational {
    Rational::new(1.into(), ((i * (i + 1)) as u64).into())
}

impl Semimeasure for ProxyMixture {
    fn eval(&self, x: &BinaryString, stage: u64) -> Rational {
        self.components
            .iter()
            .map(|(w, c)| w * c.eval(x, stage))
            .sum()
    }

    fn exact_stage(&self) -> u64 {
        self.components.iter().map(|(_, c)| c.exact_stage()).max().unwrap_or(0)
    }

    fn count_mass(&self, len: usize, ones: usize) -> Option<Rational> {
        self.components
            .iter()
            .map(|(w, c)| c.count_mass(len, ones).map(|m| w * m))
            .sum()
    }
}

/// `M_t(x)`.
pub fn proxy_eval(m: &ProxyMixture, x: &BinaryString, stage: u64) -> Rational {
    m.eval(x, stage)
}

/// `d_k = max_{j ≤ k} M_t(ω^j) / P(ω^j)` for `k = 0..=l(ω)`.
pub fn deficiency_trace(
    prefix: &BinaryString,
    measure: &dyn Semimeasure,
    m: &ProxyMixture,
    stage: u64,
) -> Result<Vec<Rational>> {
    let mut out = Vec::with_capacity(prefix.len() + 1);
    let mut best: Option<Rational> = None;
    for k in 0..=prefix.len() {
        let x = prefix.prefix(k);
        let p = measure.exact(&x);
        if !p.is_positive() {
            return Err(Error::Division { prefix: x });
        }
        let ratio = m.eval(&x, stage) / p;
        let next = match best {
            Some(b) if b >= ratio => b,
            _ => ratio,
        };
        out.push(next.clone());
        best = Some(next);
    }
    Ok(out)
}

/// Sets `V_1, ..., V_k` with `P(V_i) < 2^-i` under a reference measure.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenSetSequence {
    sets: Vec<SimpleSet>,
}

impl OpenSetSequence {
    /// `sets[0]` is `V_1`. Checks the mass condition against `measure`.
    pub fn new(measure: &dyn Semimeasure, sets: Vec<SimpleSet>) -> Result<Self> {
        for (i, v) in sets.iter().enumerate() {
            let index = i + 1;
            let mass: Rational = v.generators().iter().map(|g| measure.exact(g)).sum();
            if mass >= dyadic(index) {
                return Err(Error::Construction {
                    index,
                    mass: rational::format(&mass),
                });
            }
        }
        Ok(Self { sets })
    }

    pub fn sets(&self) -> &[SimpleSet] {
        &self.sets
    }
}

/// The literal mixture `Σ_i (1/(i(i+1))) 2^i P(x) [Γ_x ⊆ V_i]` tabulated to
/// `depth`. On its own this need not satisfy the semimeasure inequality at
/// vertices just above a generator.
pub fn test_to_semimeasure_raw(
    measure: &dyn Semimeasure,
    sets: &OpenSetSequence,
    depth: usize,
) -> Result<SemimeasureTable> {
    for v in sets.sets() {
        if let Some(g) = v.generators().iter().find(|g| g.len() > depth) {
            return Err(Error::Depth {
                string: g.clone(),
                length: g.len(),
                depth,
            });
        }
    }
    Ok(SemimeasureTable::from_fn(depth, |x| {
        let p = measure.exact(x);
        sets.sets()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.contains_cylinder(x))
            .map(|(i, _)| {
                let i = i + 1;
                default_weight(i) * Rational::from_integer(num_bigint::BigInt::from(1) << i) * &p
            })
            .sum()
    }))
}

/// The least semimeasure dominating [`test_to_semimeasure_raw`]. Because
/// every generator lies within `depth`, this equals
/// `Σ_i (1/(i(i+1))) 2^i P(Γ_x ∩ V_i)`.
pub fn test_to_semimeasure(
    measure: &dyn Semimeasure,
    sets: &OpenSetSequence,
    depth: usize,
) -> Result<SemimeasureTable> {
    Ok(test_to_semimeasure_raw(measure, sets, depth)?.minimal_dominating())
}

/// One roster entry as written in a roster file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ComponentSpec {
    Uniform {
        weight: Option<String>,
    },
    Bernoulli {
        theta: String,
        weight: Option<String>,
    },
    PointMass {
        #[serde(default)]
        prefix: String,
        cycle: String,
        weight: Option<String>,
    },
    Laplace {
        weight: Option<String>,
    },
    /// A table in the text format, path relative to the roster file.
    Table {
        file: String,
        weight: Option<String>,
    },
    /// The network construction's flow semimeasure, staged by step.
    Construction {
        transducers: Vec<String>,
        epsilon: String,
        depth: usize,
        weight: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterSpec {
    pub components: Vec<ComponentSpec>,
}

fn parse_rational(text: &str, what: &str) -> Result<Rational> {
    rational::parse(text).ok_or_else(|| Error::Domain(format!("bad {what} {text:?}")))
}

impl RosterSpec {
    /// Resolves descriptors into a mixture. Missing weights default to
    /// `1/(i(i+1))` by position.
    pub fn build(&self, base_dir: &Path) -> Result<ProxyMixture> {
        let mut components = Vec::new();
        for (i, spec) in self.components.iter().enumerate() {
            let (weight, component) = match spec {
                ComponentSpec::Uniform { weight } => (weight, Component::Uniform),
                ComponentSpec::Bernoulli { theta, weight } => (
                    weight,
                    Component::Bernoulli(BernoulliParam::new(parse_rational(theta, "theta")?)?),
                ),
                ComponentSpec::PointMass { prefix, cycle, weight } => {
                    let cycle: BinaryString =
                        cycle.parse().map_err(|e: String| Error::Domain(e))?;
                    if cycle.is_empty() {
                        return Err(Error::Domain("point-mass cycle must be nonempty".into()));
                    }
                    (
                        weight,
                        Component::PointMass {
                            prefix: prefix.parse().map_err(|e: String| Error::Domain(e))?,
                            cycle,
                        },
                    )
                }
                ComponentSpec::Laplace { weight } => (weight, Component::Laplace),
                ComponentSpec::Table { file, weight } => {
                    let path = base_dir.join(file);
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        Error::Precondition(format!("cannot read {}: {e}", path.display()))
                    })?;
                    (weight, Component::Table(SemimeasureTable::from_text(&text)?))
                }
                ComponentSpec::Construction { transducers, epsilon, depth, weight } => {
                    let roster = TransducerRoster::from_names(transducers)?;
                    let params = ConstructionParams::new(parse_rational(epsilon, "epsilon")?, *depth)?;
                    let out = construct(roster, params)?;
                    let stages = (0..=*depth).map(|t| out.state.stage_table(t)).collect();
                    (weight, Component::Staged(stages))
                }
            };
            let weight = match weight {
                Some(w) => parse_rational(w, "weight")?,
                None => default_weight(i + 1),
            };
            components.push((weight, component));
        }
        ProxyMixture::new(components)
    }
}

impl ProxyMixture {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let spec: RosterSpec = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        spec.build(base_dir)
    }
}

/// Handy constructor for tests and examples: `{L: 1/2, B_{1/3}: 1/4, 0^∞: 1/4}`.
pub fn example_roster() -> ProxyMixture {
    ProxyMixture::new(vec![
        (rational::ratio(1, 2), Component::Uniform),
        (
            rational::ratio(1, 4),
            Component::Bernoulli(BernoulliParam::new(rational::ratio(1, 3)).expect("in range")),
        ),
        (rational::ratio(1, 4), Component::point_mass_constant(false)),
    ])
    .expect("weights sum to 1")
}
