#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use randlab::flow::{ExtraEdge, FlowNetwork};
use randlab::par::stream_rng;
use randlab::rational::{int, ratio};
use randlab::{BinaryString, Rational, SemimeasureTable};

pub fn rng(seed: u64, index: u64) -> ChaCha8Rng {
    stream_rng(seed, index)
}

/// A random valid semimeasure: each vertex hands random quarters of its value
/// to its children.
pub fn random_semimeasure(rng: &mut ChaCha8Rng, depth: usize) -> SemimeasureTable {
    let mut t = SemimeasureTable::zero(depth);
    t.set(&BinaryString::empty(), ratio(rng.random_range(0..=8), 8));
    for x in BinaryString::up_to(depth - 1) {
        let v = t.at(&x).clone();
        let a = rng.random_range(0..=4i64);
        let b = rng.random_range(0..=4 - a);
        t.set(&x.child(false), &v * ratio(a, 4));
        t.set(&x.child(true), &v * ratio(b, 4));
    }
    t
}

/// Smallest level sum below `x`, over every level from `l(x)` to the depth.
pub fn brute_bar(t: &SemimeasureTable, x: &BinaryString) -> Rational {
    (x.len()..=t.depth())
        .map(|k| {
            BinaryString::level(k)
                .filter(|z| x.is_prefix_of(z))
                .map(|z| t.at(&z).clone())
                .sum::<Rational>()
        })
        .min()
        .expect("at least one level")
}

/// A random valid network of the given depth with up to `max_extra` extra
/// edges, weights in eighths.
pub fn random_network(rng: &mut ChaCha8Rng, depth: usize, max_extra: usize) -> FlowNetwork {
    let mut net = FlowNetwork::elementary(depth);
    let mut spare: BTreeMap<BinaryString, i64> = BTreeMap::new();
    for x in BinaryString::up_to(depth - 1) {
        let a = rng.random_range(0..=8i64);
        let b = rng.random_range(0..=8 - a);
        net.set_unit(&x, ratio(a, 8), ratio(b, 8));
        spare.insert(x, 8 - a - b);
    }
    if depth >= 2 {
        for _ in 0..rng.random_range(0..=max_extra) {
            let st_len = rng.random_range(0..=depth - 2);
            let st = BinaryString::from_value(rng.random_range(0..1u64 << st_len), st_len);
            let extra = rng.random_range(2..=depth - st_len);
            let tail = BinaryString::from_value(rng.random_range(0..1u64 << extra), extra);
            let left = spare[&st];
            if left == 0 {
                continue;
            }
            let q = rng.random_range(1..=left);
            *spare.get_mut(&st).unwrap() -= q;
            net.add_extra(ExtraEdge {
                ter: st.concat(&tail),
                st,
                q: ratio(q, 8),
                task: None,
            });
        }
    }
    net
}

/// Flow by explicit enumeration of every path from the root.
pub fn path_sum(net: &FlowNetwork) -> SemimeasureTable {
    let mut acc = SemimeasureTable::zero(net.depth());
    fn walk(net: &FlowNetwork, v: &BinaryString, w: Rational, acc: &mut SemimeasureTable) {
        let now = acc.at(v) + &w;
        acc.set(v, now);
        if v.len() < net.depth() {
            for bit in [false, true] {
                let q = net.unit(v, bit);
                if q > &int(0) {
                    walk(net, &v.child(bit), &w * q, acc);
                }
            }
        }
        for e in net.extras().iter().filter(|e| &e.st == v) {
            if e.q > int(0) {
                walk(net, &e.ter, &w * &e.q, acc);
            }
        }
    }
    walk(net, &BinaryString::empty(), int(1), &mut acc);
    acc
}
