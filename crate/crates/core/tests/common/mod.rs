//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use phscreen::dnn::{Mlp, BCE_EPS};
use phscreen::features::{evaluate_criteria, extract_fiducials, CriteriaThresholds, DetectorConfig, MeasureConfig};
use phscreen::SynthRecord;
use rand::Rng;

/// Mann–Whitney estimate of P(score_pos > score_neg), ties counted as one half.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(&s, _)| s).collect();
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

/// Scores on a coarse grid so ties are common, with both classes present.
pub fn random_scored_set(rng: &mut impl Rng) -> (Vec<f64>, Vec<bool>) {
    loop {
        let n = rng.gen_range(2..=50);
        let levels = rng.gen_range(2..=12);
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..levels)) / f64::from(levels)).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        if labels.iter().any(|&l| l) && labels.iter().any(|&l| !l) {
            return (scores, labels);
        }
    }
}

/// Mean binary cross-entropy over every (example, output) entry, written out longhand.
pub fn reference_bce(probs: ArrayView2<f64>, labels: ArrayView2<f64>) -> f64 {
    let mut total = 0.0;
    for (&p, &y) in probs.iter().zip(labels.iter()) {
        let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
        total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    total / probs.len() as f64
}

pub fn model_loss(model: &Mlp<f64>, x: ArrayView2<f64>, y: ArrayView2<f64>) -> f64 {
    let cache = model.forward(x).unwrap();
    reference_bce(cache.output(), y)
}

/// Worst relative disagreement between backprop and central differences over every parameter.
/// Entries where both are below `floor` in magnitude are compared absolutely against `floor`.
pub fn gradient_check(model: &Mlp<f64>, x: ArrayView2<f64>, y: ArrayView2<f64>, eps: f64, floor: f64) -> f64 {
    let cache = model.forward(x).unwrap();
    let grads = model.backward(&cache, y).unwrap();
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    let mut compare = |analytic: f64, numeric: f64| {
        let scale = analytic.abs().max(numeric.abs());
        let err = if scale < floor { (analytic - numeric).abs() / floor } else { (analytic - numeric).abs() / scale };
        worst = worst.max(err);
    };
    for l in 0..model.weights().len() {
        for idx in ndarray::indices_of(&model.weights()[l]) {
            let numeric = central_difference(&mut probe, x, y, eps, |m, d| m.params_mut().0[l][idx] += d);
            compare(grads.weights[l][idx], numeric);
        }
        for j in 0..model.biases()[l].len() {
            let numeric = central_difference(&mut probe, x, y, eps, |m, d| m.params_mut().1[l][j] += d);
            compare(grads.biases[l][j], numeric);
        }
    }
    worst
}

fn central_difference(
    m: &mut Mlp<f64>,
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    eps: f64,
    nudge: impl Fn(&mut Mlp<f64>, f64),
) -> f64 {
    nudge(m, eps);
    let up = model_loss(m, x, y);
    nudge(m, -2.0 * eps);
    let down = model_loss(m, x, y);
    nudge(m, eps);
    (up - down) / (2.0 * eps)
}

/// Smallest |pre-activation| of any hidden unit; near zero the ReLU kink defeats finite differences.
pub fn min_hidden_preactivation(model: &Mlp<f64>, x: ArrayView2<f64>) -> f64 {
    let mut a = x.to_owned();
    let mut closest = f64::INFINITY;
    let last = model.weights().len() - 1;
    for (l, (w, b)) in model.weights().iter().zip(model.biases()).enumerate() {
        let z = a.dot(&w.t()) + b;
        if l == last {
            break;
        }
        closest = z.iter().fold(closest, |c, v| c.min(v.abs()));
        a = z.mapv(|v| v.max(0.0));
    }
    closest
}

/// Random network of 1 to 3 hidden layers and a matching batch, kept away from ReLU kinks.
pub fn random_case(rng: &mut impl Rng, seed: u64, eps: f64) -> (Mlp<f64>, Array2<f64>, Array2<f64>) {
    loop {
        let depth = rng.gen_range(1..=3);
        let mut sizes = vec![rng.gen_range(1..=6)];
        sizes.extend((0..depth).map(|_| rng.gen_range(1..=6)));
        sizes.push(rng.gen_range(1..=2));
        let model = Mlp::<f64>::new(&sizes, seed ^ rng.gen::<u64>()).unwrap();
        let batch = rng.gen_range(1..=5);
        let x = Array2::from_shape_fn((batch, sizes[0]), |_| rng.gen_range(-2.0..2.0));
        let y = Array2::from_shape_fn((batch, *sizes.last().unwrap()), |_| f64::from(u8::from(rng.gen_bool(0.5))));
        if min_hidden_preactivation(&model, x.view()) > 100.0 * eps {
            return (model, x, y);
        }
    }
}

/// Whether the measured flags equal the planted ones.
pub fn closure_matches(r: &SynthRecord) -> bool {
    match extract_fiducials(&r.record, &DetectorConfig::default(), &MeasureConfig::default()) {
        Ok(f) => evaluate_criteria(&f, &CriteriaThresholds::default()) == r.intended,
        Err(_) => false,
    }
}

/// One lead of a hand-built WFDB fixture.
pub struct FixtureLead {
    pub name: &'static str,
    pub gain: f64,
    pub baseline: i32,
    pub adc: Vec<i16>,
}

/// Writes `<dir>/<name>.hea` and a format-16 `<name>.dat` straight from integer samples,
/// interleaving frames the way WFDB stores them. Independent of the library encoder.
pub fn write_fixture(dir: &Path, name: &str, fs: u32, leads: &[FixtureLead]) {
    let n = leads[0].adc.len();
    let mut hea = format!("{name} {} {fs} {n}\n", leads.len());
    for l in leads {
        writeln!(hea, "{name}.dat 16 {}({})/mV 16 0 0 0 0 {}", l.gain, l.baseline, l.name).unwrap();
    }
    let mut dat = Vec::with_capacity(n * leads.len() * 2);
    for i in 0..n {
        for l in leads {
            let [lo, hi] = l.adc[i].to_le_bytes();
            dat.push(lo);
            dat.push(hi);
        }
    }
    std::fs::write(dir.join(format!("{name}.hea")), hea).unwrap();
    std::fs::write(dir.join(format!("{name}.dat")), dat).unwrap();
}

/// Twelve leads in a scrambled order with distinct gains and baselines, covering the i16 extremes.
pub fn random_fixture(rng: &mut impl Rng, n: usize) -> Vec<FixtureLead> {
    let mut names = phscreen::ingest::LEAD_NAMES.to_vec();
    use rand::seq::SliceRandom;
    names.shuffle(rng);
    names
        .into_iter()
        .map(|name| {
            let mut adc: Vec<i16> = (0..n).map(|_| rng.gen_range(-32767..=32767)).collect();
            adc[0] = 32767;
            adc[1] = -32767;
            adc[2] = 0;
            FixtureLead {
                name,
                gain: [200.0, 1000.0, 2000.0, 409.6, 1234.5][rng.gen_range(0..5)],
                baseline: rng.gen_range(-1024..=1024),
                adc,
            }
        })
        .collect()
}
