#![allow(dead_code)]

use rand::Rng;
use statdist::chain::{restrict, MarkovChain, StateId};
use statdist::graph::bsccs;
use statdist::io::generators::{gen_random, rng_from_seed};

/// Oracle values from an independent 50-digit solve of the generated models,
/// taking each transition probability as the `f64` the model file parses to.
/// On the counterexample the rounding of `1 − e` alone moves the answer by
/// about `1e-8`, so the decimal reading would not do.
#[allow(clippy::excessive_precision)]
pub mod golden {
    pub const FIG1: [f64; 4] = [0.0, 0.5, 1.0 / 12.0, 5.0 / 12.0];

    pub const CEX_1E7: [f64; 4] = [
        0.44444443958415106,
        0.22222224201429972,
        0.11111112094866588,
        0.22222219745288335,
    ];
    pub const CEX_1E8: [f64; 4] = [
        0.44444444320620848,
        0.22222222382532649,
        0.11111111247096983,
        0.22222222049749519,
    ];
    pub const CEX_1E9: [f64; 4] = [
        0.44444444858497756,
        0.222222224514711,
        0.11111110911491863,
        0.22222221778539281,
    ];

    /// `gen_branch(3, 5, 3, 7)`: 15 transient states, then three BSCCs.
    pub const BRANCH_3_5_3_7_BSCCS: [f64; 15] = [
        0.11859778330961238,
        0.13270602140900761,
        0.021324222990268732,
        0.028779660154733627,
        0.11859778330961238,
        0.040209340374852584,
        0.021355771915814644,
        0.045877681852297984,
        0.042856313395853399,
        0.14415218135706508,
        0.061864409668615799,
        0.07040468987310556,
        0.10287682027707054,
        0.045704865360272225,
        0.0046924547518174844,
    ];

    pub fn branch_3_5_3_7() -> Vec<f64> {
        let mut v = vec![0.0; 15];
        v.extend_from_slice(&BRANCH_3_5_3_7_BSCCS);
        v
    }

    pub const RANDOM_50_3_11: [f64; 50] = [
        0.035357224745685752,
        0.0,
        0.010611387432968554,
        0.041840914015527728,
        0.096823828550885958,
        0.0071983842842111659,
        0.039319885178119021,
        0.01454091404975955,
        0.014893002463769955,
        0.0,
        0.029433916513529505,
        0.015955112353407068,
        0.00050776518309178342,
        0.0056812457500428035,
        0.04729881610895369,
        0.035166959352697111,
        0.06849642809090153,
        0.049757372157167287,
        0.041083214471410571,
        0.019310243641346114,
        0.013421396945593729,
        0.0074913164419677095,
        0.002637028050897541,
        0.040833364631217601,
        0.043778161322339523,
        0.019054754455830515,
        0.010630935146905836,
        0.0,
        0.0,
        0.0071983842842111659,
        0.024956370901890958,
        0.0,
        0.0092193494713235399,
        0.0,
        0.0,
        0.0,
        0.0074913164419677095,
        0.025913286292701,
        0.024503342339973055,
        0.014893002463769955,
        0.011822696271634616,
        0.0,
        0.0,
        0.067023518278322936,
        0.023670621668512953,
        0.0,
        0.0074913164419677095,
        0.030459488642828783,
        0.020251967349508422,
        0.013981767813159598,
    ];
}

/// Rounding slack when comparing sound bounds with a floating-point oracle.
pub const SLACK: f64 = 1e-12;

pub fn fig1() -> MarkovChain {
    MarkovChain::new(
        vec![
            vec![(1, 0.5), (2, 0.5)],
            vec![(1, 1.0)],
            vec![(2, 0.5), (3, 0.5)],
            vec![(2, 0.1), (3, 0.9)],
        ],
        Some(0),
    )
    .unwrap()
}

/// A random chain with `2..=max_n` states.
pub fn random_chain(seed: u64, max_n: usize, max_out: usize) -> MarkovChain {
    let mut rng = rng_from_seed(seed ^ 0x5eed);
    let n = rng.gen_range(2..=max_n as u64) as usize;
    gen_random(n, max_out, seed).unwrap()
}

/// A strongly connected chain: a Hamiltonian cycle plus random extra edges.
pub fn strongly_connected(seed: u64, max_n: usize) -> MarkovChain {
    let mut rng = rng_from_seed(seed);
    let n = rng.gen_range(2..=max_n as u64) as usize;
    let rows = (0..n)
        .map(|i| {
            let mut succ = vec![(i + 1) % n];
            for _ in 0..rng.gen_range(0..4u64) {
                let t = rng.gen_range(0..n as u64) as usize;
                if !succ.contains(&t) {
                    succ.push(t);
                }
            }
            let w: Vec<f64> = succ.iter().map(|_| 0.05 + rng.gen::<f64>()).collect();
            let total: f64 = w.iter().sum();
            succ.into_iter()
                .zip(w)
                .map(|(t, x)| (t, x / total))
                .collect()
        })
        .collect();
    MarkovChain::new(rows, Some(0)).unwrap()
}

/// The largest BSCC of `chain` as a chain of its own.
pub fn largest_bscc(chain: &MarkovChain) -> MarkovChain {
    let all = bsccs(chain);
    let r = all.iter().max_by_key(|r| r.len()).unwrap();
    restrict(chain, r).unwrap().chain
}

pub fn initial(chain: &MarkovChain) -> StateId {
    chain.initial().unwrap_or(StateId(0))
}
