//! Finite-depth networks: unit edges `(x, x0)`, `(x, x1)` for `l(x) < depth`
//! plus a finite set of extra edges, each carrying an exact rational weight.
//!
//! Text format (`#` starts a comment, missing unit records default to 1/2):
//!
//! ```text
//! depth 2
//! n0 4
//! epsilon 1/4
//! unit - 3/8 3/8
//! extra - 11 1/4 -
//! ```
//!
//! An extra-edge record is `extra <st> <ter> <q> <task|->`.

use std::fmt::Write as _;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic::BinaryString;
use crate::error::{Error, Result};
use crate::rational::{self, ratio, Rational};
use crate::table::{slot, SemimeasureTable};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtraEdge {
    pub st: BinaryString,
    pub ter: BinaryString,
    #[serde(with = "rational_text")]
    pub q: Rational,
    /// Construction task that planted the edge, if any.
    pub task: Option<u64>,
}

/// Construction parameters carried in a network file header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkMeta {
    pub n0: u64,
    pub epsilon: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowNetwork {
    depth: usize,
    unit: Vec<[Rational; 2]>,
    extras: Vec<ExtraEdge>,
    pub meta: Option<NetworkMeta>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NetworkViolation {
    /// An edge weight outside [0, 1].
    WeightOutOfRange { st: BinaryString, ter: BinaryString, q: String },
    /// Outgoing weights at a vertex sum above 1.
    VertexOverflow { at: BinaryString, sum: String },
    /// `1 − q(x, x0) − q(x, x1)` outside [0, 1].
    DelayOutOfRange { at: BinaryString, delay: String },
    /// Extra edge that is not a proper long-range descendant edge within depth.
    MalformedExtraEdge { st: BinaryString, ter: BinaryString, reason: String },
}

impl FlowNetwork {
    /// Every unit edge 1/2, no extra edges.
    pub fn elementary(depth: usize) -> Self {
        let half = ratio(1, 2);
        Self {
            depth,
            unit: vec![[half.clone(), half]; (1usize << depth) - 1],
            extras: Vec::new(),
            meta: None,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn extras(&self) -> &[ExtraEdge] {
        &self.extras
    }

    pub fn unit(&self, x: &BinaryString, bit: bool) -> &Rational {
        &self.unit[slot(x)][bit as usize]
    }

    pub fn set_unit(&mut self, x: &BinaryString, q0: Rational, q1: Rational) {
        assert!(x.len() < self.depth, "no unit edges leave depth {}", self.depth);
        self.unit[slot(x)] = [q0, q1];
    }

    pub fn add_extra(&mut self, edge: ExtraEdge) {
        self.extras.push(edge);
    }

    /// `1 − q(x, x0) − q(x, x1)`; zero on the bottom level.
    pub fn delay(&self, x: &BinaryString) -> Rational {
        if x.len() >= self.depth {
            return Rational::zero();
        }
        let [a, b] = &self.unit[slot(x)];
        Rational::one() - a - b
    }

    /// Every failed network condition; empty when the network is valid.
    pub fn validate(&self) -> Vec<NetworkViolation> {
        let mut report = Vec::new();
        let in_range = |q: &Rational| !q.is_negative() && q <= &Rational::one();
        let mut out_sum: Vec<Rational> = self.unit.iter().map(|[a, b]| a + b).collect();
        let mut extra_out: std::collections::BTreeMap<BinaryString, Rational> = Default::default();

        for (i, [a, b]) in self.unit.iter().enumerate() {
            let x = BinaryString::from_index(i as u64);
            for (bit, q) in [(false, a), (true, b)] {
                if !in_range(q) {
                    report.push(NetworkViolation::WeightOutOfRange {
                        st: x.clone(),
                        ter: x.child(bit),
                        q: rational::format(q),
                    });
                }
            }
        }
        for e in &self.extras {
            if !in_range(&e.q) {
                report.push(NetworkViolation::WeightOutOfRange {
                    st: e.st.clone(),
                    ter: e.ter.clone(),
                    q: rational::format(&e.q),
                });
            }
            let reason = if !e.st.is_prefix_of(&e.ter) || e.st == e.ter {
                Some("start is not a proper prefix of terminal")
            } else if e.ter.len() == e.st.len() + 1 {
                Some("edge of length one duplicates a unit edge")
            } else if e.ter.len() > self.depth {
                Some("terminal deeper than network depth")
            } else {
                None
            };
            if let Some(reason) = reason {
                report.push(NetworkViolation::MalformedExtraEdge {
                    st: e.st.clone(),
                    ter: e.ter.clone(),
                    reason: reason.into(),
                });
                continue;
            }
            if e.st.len() < self.depth {
                out_sum[slot(&e.st)] += &e.q;
            } else {
                *extra_out.entry(e.st.clone()).or_default() += &e.q;
            }
        }
        for (i, sum) in out_sum.iter().enumerate() {
            if sum > &Rational::one() {
                report.push(NetworkViolation::VertexOverflow {
                    at: BinaryString::from_index(i as u64),
                    sum: rational::format(sum),
                });
            }
        }
        for (x, sum) in extra_out {
            if sum > Rational::one() {
                report.push(NetworkViolation::VertexOverflow {
                    at: x,
                    sum: rational::format(&sum),
                });
            }
        }
        for i in 0..self.unit.len() {
            let x = BinaryString::from_index(i as u64);
            let d = self.delay(&x);
            if !in_range(&d) {
                report.push(NetworkViolation::DelayOutOfRange {
                    at: x,
                    delay: rational::format(&d),
                });
            }
        }
        report
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# flow network");
        let _ = writeln!(out, "depth {}", self.depth);
        if let Some(meta) = &self.meta {
            let _ = writeln!(out, "n0 {}", meta.n0);
            let _ = writeln!(out, "epsilon {}", rational::format(&meta.epsilon));
        }
        for (i, [a, b]) in self.unit.iter().enumerate() {
            let _ = writeln!(
                out,
                "unit {} {} {}",
                BinaryString::from_index(i as u64),
                rational::format(a),
                rational::format(b)
            );
        }
        for e in &self.extras {
            let task = e.task.map_or("-".to_string(), |t| t.to_string());
            let _ = writeln!(out, "extra {} {} {} {}", e.st, e.ter, rational::format(&e.q), task);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut depth: Option<usize> = None;
        let mut n0: Option<u64> = None;
        let mut epsilon: Option<Rational> = None;
        let mut units: Vec<(BinaryString, Rational, Rational, usize)> = Vec::new();
        let mut extras = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let q = |t: &str| rational::parse(t).ok_or_else(|| err(format!("bad rational {t:?}")));
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["depth", d] => depth = Some(d.parse().map_err(|_| err(format!("bad depth {d:?}")))?),
                ["n0", n] => n0 = Some(n.parse().map_err(|_| err(format!("bad n0 {n:?}")))?),
                ["epsilon", e] => epsilon = Some(q(e)?),
                ["unit", x, a, b] => {
                    let x: BinaryString = x.parse().map_err(err)?;
                    units.push((x, q(a)?, q(b)?, lineno + 1));
                }
                ["extra", st, ter, w, task] => {
                    let task = match *task {
                        "-" => None,
                        t => Some(t.parse().map_err(|_| err(format!("bad task {t:?}")))?),
                    };
                    extras.push(ExtraEdge {
                        st: st.parse().map_err(err)?,
                        ter: ter.parse().map_err(err)?,
                        q: q(w)?,
                        task,
                    });
                }
                _ => return Err(err(format!("unrecognised record {line:?}"))),
            }
        }
        let depth = depth.ok_or(Error::Parse {
            line: 0,
            message: "missing depth header".into(),
        })?;
        if depth >= 28 {
            return Err(Error::Parse {
                line: 0,
                message: format!("network depth {depth} too large"),
            });
        }
        let mut net = FlowNetwork::elementary(depth);
        for (x, a, b, line) in units {
            if x.len() >= depth {
                return Err(Error::Parse {
                    line,
                    message: format!("unit record at {x} is at or below depth {depth}"),
                });
            }
            net.set_unit(&x, a, b);
        }
        net.extras = extras;
        net.meta = match (n0, epsilon) {
            (Some(n0), Some(epsilon)) => Some(NetworkMeta { n0, epsilon }),
            _ => None,
        };
        Ok(net)
    }

    /// Graphviz rendering of the tree with delays and extra edges.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph network {\n  node [shape=circle, fontsize=9];\n");
        for x in BinaryString::up_to(self.depth) {
            let d = self.delay(&x);
            let colour = if d == Rational::one() {
                ", style=filled, fillcolor=gray40"
            } else if d.is_zero() {
                ""
            } else {
                ", style=filled, fillcolor=lightyellow"
            };
            let _ = writeln!(
                out,
                "  \"{x}\" [label=\"{x}\\nd={}\"{colour}];",
                rational::format(&d)
            );
        }
        for i in 0..self.unit.len() {
            let x = BinaryString::from_index(i as u64);
            for bit in [false, true] {
                let _ = writeln!(
                    out,
                    "  \"{x}\" -> \"{}\" [label=\"{}\"];",
                    x.child(bit),
                    rational::format(self.unit(&x, bit))
                );
            }
        }
        for e in &self.extras {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\", color=red, style=dashed];",
                e.st,
                e.ter,
                rational::format(&e.q)
            );
        }
        out.push_str("}\n");
        out
    }
}

/// `R(Λ) = 1`, and `R(y)` sums `q(σ)·R(st(σ))` over edges entering `y`.
/// Extra edges starting below the depth are ignored.
pub fn flow_eval(net: &FlowNetwork) -> SemimeasureTable {
    let depth = net.depth;
    let mut incoming: Vec<Vec<&ExtraEdge>> = vec![Vec::new(); (1usize << (depth + 1)) - 1];
    for e in &net.extras {
        if e.ter.len() <= depth {
            incoming[slot(&e.ter)].push(e);
        }
    }
    let mut values: Vec<Rational> = Vec::with_capacity(incoming.len());
    values.push(Rational::one());
    for i in 1..incoming.len() {
        let parent = (i - 1) / 2;
        let bit = i % 2 == 0;
        let mut r = &net.unit[parent][bit as usize] * &values[parent];
        for e in &incoming[i] {
            r += &e.q * &values[slot(&e.st)];
        }
        values.push(r);
    }
    SemimeasureTable::from_values(depth, values)
}

/// The least semimeasure dominating the flow `flow` of `net` at the network's
/// depth. Below the deepest extra-edge terminal the unit recursion is already
/// conservative, so the bottom-up completion is exact there.
pub fn minimal_semimeasure(flow: &SemimeasureTable, net: &FlowNetwork) -> Result<SemimeasureTable> {
    if let Some(e) = net.extras.iter().find(|e| e.ter.len() > flow.depth()) {
        return Err(Error::Depth {
            string: e.ter.clone(),
            length: e.ter.len(),
            depth: flow.depth(),
        });
    }
    Ok(flow.minimal_dominating())
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
