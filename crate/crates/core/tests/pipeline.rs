mod common;

use rand::Rng;

use randlab::flow::{construct, flow_eval, ConstructionParams, FlowNetwork, TransducerRoster};
use randlab::mixture::{mixture_semimeasure, MixtureSchedule, ParamPrior, EXACT_STAGE};
use randlab::par;
use randlab::rational::{self, dyadic, ratio};
use randlab::sampler::{sample_many, SampleStatus};
use randlab::{BinaryString, Rational, SemimeasureTable};

fn constructed() -> randlab::flow::ConstructionOutcome {
    let roster = TransducerRoster::from_names(&["identity", "constant-zero"]).unwrap();
    construct(roster, ConstructionParams::new(ratio(1, 4), 10).unwrap()).unwrap()
}

#[test]
fn constructed_network_round_trips_through_text() {
    let out = constructed();
    let back = FlowNetwork::from_text(&out.network.to_text()).unwrap();
    assert!(back.validate().is_empty());
    assert_eq!(flow_eval(&back), out.flow);
    let table = SemimeasureTable::from_text(&out.semimeasure.to_text()).unwrap();
    assert_eq!(table, out.semimeasure);
    assert!(out.network.to_dot().starts_with("digraph"));
}

#[test]
fn sampling_a_constructed_semimeasure_is_reproducible() {
    let out = constructed();
    let a = sample_many(&out.semimeasure, 5, 500, 10).unwrap();
    let b = sample_many(&out.semimeasure, 5, 500, 10).unwrap();
    assert_eq!(a, b);
    // Only the first ten bits are drawn, so every sample either halts or hits depth.
    assert!(a.iter().all(|s| s.emitted.len() <= 10));
}

#[test]
fn parallel_and_sequential_maps_agree() {
    let draw = |i: usize| {
        let mut rng = par::stream_rng(77, i as u64);
        (0..32).fold(0u64, |acc, _| acc.wrapping_add(rng.random::<u64>()))
    };
    assert_eq!(par::map_range(4096, draw), par::map_range_seq(4096, draw));
    let odd = par::count_range(4096, |i| draw(i) % 2 == 1);
    assert_eq!(odd, par::map_range_seq(4096, draw).iter().filter(|v| *v % 2 == 1).count());
}

/// Prior split evenly over the parameter cells [1/4, 1/2) and [3/4, 1).
fn two_cell_prior(depth: usize) -> SemimeasureTable {
    let cells = ["01".parse::<BinaryString>().unwrap(), "11".parse::<BinaryString>().unwrap()];
    SemimeasureTable::from_fn(depth, |x| {
        cells
            .iter()
            .map(|c| {
                if x.is_prefix_of(c) {
                    ratio(1, 2)
                } else if c.is_prefix_of(x) {
                    ratio(1, 2) * dyadic(x.len() - 2)
                } else {
                    Rational::from_integer(0.into())
                }
            })
            .sum()
    })
}

#[test]
fn mixture_samples_concentrate_near_the_prior_support() {
    let prior = ParamPrior::new(two_cell_prior(6)).unwrap();
    let depth = 10;
    let out = mixture_semimeasure(&prior, &MixtureSchedule::constant(depth, EXACT_STAGE, 6), &ratio(1, 4)).unwrap();
    assert!(out.table.is_valid());
    let samples = sample_many(&out.table, 21, 1000, depth).unwrap();
    let full: Vec<_> = samples.iter().filter(|s| s.status == SampleStatus::ReachedDepth).collect();
    assert!(full.len() > 750, "{} of 1000 reached depth", full.len());
    let near = full
        .iter()
        .filter(|s| {
            let hat = s.emitted.ones() as f64 / depth as f64;
            // Distance to [1/4, 1/2] ∪ [3/4, 1], against three standard deviations at the worst θ.
            let gap = if hat < 0.25 {
                0.25 - hat
            } else if hat <= 0.5 {
                0.0
            } else if hat < 0.75 {
                (hat - 0.5).min(0.75 - hat)
            } else {
                0.0
            };
            gap <= 3.0 * (0.25f64 / depth as f64).sqrt()
        })
        .count();
    assert!(near as f64 >= 0.99 * full.len() as f64, "{near} of {}", full.len());
    let root = rational::to_f64(out.table.at(&BinaryString::empty()));
    assert!(root > 0.75);
}
