//! Finite-state monotone transducers with a step budget.
//!
//! One step reads one input bit and appends the transition's output word, so
//! output can only grow as input or budget grows.

use serde::{Deserialize, Serialize};

use crate::dyadic::BinaryString;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub next: usize,
    pub emit: BinaryString,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotoneTransducer {
    pub name: String,
    /// `states[q][b]` is taken on reading bit `b` in state `q`.
    pub states: Vec<[Transition; 2]>,
    #[serde(default)]
    pub start: usize,
}

fn emit(bits: &str) -> BinaryString {
    bits.parse().expect("literal bits")
}

impl MonotoneTransducer {
    pub fn identity() -> Self {
        Self {
            name: "identity".into(),
            states: vec![[
                Transition { next: 0, emit: emit("0") },
                Transition { next: 0, emit: emit("1") },
            ]],
            start: 0,
        }
    }

    pub fn constant_zero() -> Self {
        Self {
            name: "constant-zero".into(),
            states: vec![[
                Transition { next: 0, emit: emit("0") },
                Transition { next: 0, emit: emit("0") },
            ]],
            start: 0,
        }
    }

    pub fn complement() -> Self {
        Self {
            name: "complement".into(),
            states: vec![[
                Transition { next: 0, emit: emit("1") },
                Transition { next: 0, emit: emit("0") },
            ]],
            start: 0,
        }
    }

    /// Emits every input bit twice.
    pub fn doubler() -> Self {
        Self {
            name: "doubler".into(),
            states: vec![[
                Transition { next: 0, emit: emit("00") },
                Transition { next: 0, emit: emit("11") },
            ]],
            start: 0,
        }
    }

    /// Keeps the bits at even positions (0, 2, 4, ...).
    pub fn decimate() -> Self {
        Self {
            name: "decimate".into(),
            states: vec![
                [
                    Transition { next: 1, emit: emit("0") },
                    Transition { next: 1, emit: emit("1") },
                ],
                [
                    Transition { next: 0, emit: BinaryString::empty() },
                    Transition { next: 0, emit: BinaryString::empty() },
                ],
            ],
            start: 0,
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "identity" => Some(Self::identity()),
            "constant-zero" => Some(Self::constant_zero()),
            "complement" => Some(Self::complement()),
            "doubler" => Some(Self::doubler()),
            "decimate" => Some(Self::decimate()),
            _ => None,
        }
    }

    pub fn check(&self) -> Result<()> {
        let n = self.states.len();
        if n == 0 || self.start >= n {
            return Err(Error::Precondition(format!("transducer {} has no valid start state", self.name)));
        }
        if self.states.iter().flatten().any(|t| t.next >= n) {
            return Err(Error::Precondition(format!("transducer {} jumps to a missing state", self.name)));
        }
        Ok(())
    }

    /// Runs on `input` for at most `budget` steps. Returns the output and
    /// whether the budget ran out before the input did.
    pub fn run_with_status(&self, input: &BinaryString, budget: u64) -> (BinaryString, bool) {
        let mut state = self.start;
        let mut out = BinaryString::empty();
        let steps = (input.len() as u64).min(budget) as usize;
        for &b in &input.bits()[..steps] {
            let t = &self.states[state][b as usize];
            for &o in t.emit.bits() {
                out.push(o);
            }
            state = t.next;
        }
        (out, steps < input.len())
    }

    pub fn run(&self, input: &BinaryString, budget: u64) -> BinaryString {
        self.run_with_status(input, budget).0
    }
}

/// Programs available to the construction, numbered by position.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TransducerRoster(pub Vec<MonotoneTransducer>);

impl TransducerRoster {
    pub fn get(&self, program: u64) -> Result<&MonotoneTransducer> {
        self.0
            .get(program as usize)
            .ok_or(Error::UnknownProgram(program))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Builds a roster from builtin names.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        names
            .iter()
            .map(|n| {
                MonotoneTransducer::builtin(n.as_ref())
                    .ok_or_else(|| Error::Precondition(format!("unknown builtin transducer {:?}", n.as_ref())))
            })
            .collect::<Result<Vec<_>>>()
            .map(TransducerRoster)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(t: &str) -> BinaryString {
        t.parse().unwrap()
    }

    #[test]
    fn run_examples() {
        assert_eq!(MonotoneTransducer::identity().run(&s("0110"), 100), s("0110"));
        assert_eq!(MonotoneTransducer::constant_zero().run(&s("1011"), 100), s("0000"));
        assert_eq!(MonotoneTransducer::constant_zero().run(&s("1011"), 2), s("00"));
        assert_eq!(MonotoneTransducer::decimate().run(&s("10110"), 100), s("110"));
        let (out, exhausted) = MonotoneTransducer::doubler().run_with_status(&s("01"), 1);
        assert_eq!(out, s("00"));
        assert!(exhausted);
    }

    #[test]
    fn roster_lookup() {
        let r = TransducerRoster::from_names(&["identity", "constant-zero"]).unwrap();
        assert_eq!(r.get(1).unwrap().name, "constant-zero");
        assert_eq!(r.get(2), Err(Error::UnknownProgram(2)));
        assert!(TransducerRoster::from_names(&["nope"]).is_err());
    }

    proptest! {
        #[test]
        fn output_is_monotone(
            x in prop::collection::vec(any::<bool>(), 0..16),
            y in prop::collection::vec(any::<bool>(), 0..16),
            b in 0u64..20,
            extra in 0u64..20,
            which in 0usize..5,
        ) {
            let names = ["identity", "constant-zero", "complement", "doubler", "decimate"];
            let t = MonotoneTransducer::builtin(names[which]).unwrap();
            let x = BinaryString::from_bits(x);
            let xy = x.concat(&BinaryString::from_bits(y));
            prop_assert!(t.run(&x, b).is_prefix_of(&t.run(&xy, b + extra)));
        }
    }
}
