//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the crate's solvers: closed forms are typed in from the
//! examples and the general-purpose oracle is uniformization with its own
//! series summation.

#![allow(dead_code)]

use markov_copula::{Distribution, Factor, FactoredStateSpace, GeneratorFunction, RateMatrix};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub type Mat = Vec<Vec<f64>>;

/// Closed-form transition matrix of the `example_3_1` family.
pub fn p_ex31(a: f64, b: f64, c: f64, t: f64) -> Mat {
    let e = |r: f64| (-r * t).exp();
    vec![
        vec![e(a + b + c), e(a + c) * (1.0 - e(b)), e(b + c) * (1.0 - e(a)), e(a + b + c) - e(b + c) - e(a + c) + 1.0],
        vec![0.0, e(a + c), 0.0, 1.0 - e(a + c)],
        vec![0.0, 0.0, e(b + c), 1.0 - e(b + c)],
        vec![0.0, 0.0, 0.0, 1.0],
    ]
}

/// Closed-form transition matrix of the `example_3_2_joint` family.
pub fn p_ex32(a: f64, b: f64, c: f64, t: f64) -> Mat {
    let e = |r: f64| (-r * t).exp();
    let p01 = e(a) * (1.0 - e(b + c)) * b / (b + c);
    let p02 = e(b) * (1.0 - e(a + c)) * a / (a + c);
    let p03 = 1.0 + e(a + b + c) * (a / (a + c) - c / (b + c)) - a / (a + c) * e(b) - b / (b + c) * e(a);
    vec![
        vec![e(a + b + c), p01, p02, p03],
        vec![0.0, e(a), 0.0, 1.0 - e(a)],
        vec![0.0, 0.0, e(b), 1.0 - e(b)],
        vec![0.0, 0.0, 0.0, 1.0],
    ]
}

/// `α(t)` of the `example_3_2_joint` family.
pub fn alpha(a: f64, b: f64, c: f64, t: f64) -> f64 {
    let moved = (-a * t).exp() * (1.0 - (-(b + c) * t).exp()) * b / (b + c);
    c * moved / ((-(a + b + c) * t).exp() + moved)
}

/// `β(t)` of the `example_3_2_joint` family.
pub fn beta(a: f64, b: f64, c: f64, t: f64) -> f64 {
    let moved = (-b * t).exp() * (1.0 - (-(a + c) * t).exp()) * a / (a + c);
    c * moved / ((-(a + b + c) * t).exp() + moved)
}

pub fn rows_of(m: &RateMatrix) -> Mat {
    m.rows()
}

fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            if a[i][k] != 0.0 {
                for j in 0..m {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    out
}

/// `exp(Λ t)` for a constant generator by uniformization:
/// `Σ_k e^{-qt} (qt)^k / k! · (I + Λ/q)^k`, summed until the Poisson tail is
/// below 1e-17.
pub fn uniformized(rates: &Mat, t: f64) -> Mat {
    let n = rates.len();
    let q = (0..n).map(|i| -rates[i][i]).fold(0.0, f64::max) * 1.05 + 1e-300;
    let step: Mat = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 } + rates[i][j] / q).collect())
        .collect();
    let qt = q * t;
    let mut out = vec![vec![0.0; n]; n];
    let mut power: Mat = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut weight = (-qt).exp();
    let mut mass = 0.0;
    let mut k = 0;
    loop {
        for i in 0..n {
            for j in 0..n {
                out[i][j] += weight * power[i][j];
            }
        }
        mass += weight;
        k += 1;
        if 1.0 - mass < 1e-17 || k > 10_000 {
            break;
        }
        weight *= qt / k as f64;
        power = mat_mul(&power, &step);
    }
    out
}

pub fn vec_mat(v: &[f64], m: &Mat) -> Vec<f64> {
    (0..m[0].len()).map(|j| v.iter().zip(m).map(|(x, row)| x * row[j]).sum()).collect()
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Deterministic source for seeded corpora.
pub struct Seeded(ChaCha8Rng);

impl Seeded {
    pub fn new(seed: u64) -> Self {
        Seeded(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }
}

/// Random rate matrix: each off-diagonal is zero with probability 0.3,
/// otherwise uniform on `[0, 2]`.
pub fn random_rates(rng: &mut Seeded, n: usize) -> RateMatrix {
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.unit() > 0.3 {
                rows[i][j] = rng.range(0.0, 2.0);
            }
        }
        rows[i][i] = -rows[i].iter().sum::<f64>();
    }
    RateMatrix::from_rows(&rows).unwrap()
}

/// Random factored space with at most six states.
pub fn random_space(rng: &mut Seeded) -> FactoredStateSpace {
    let shapes: [&[usize]; 6] = [&[2], &[3], &[2, 2], &[2, 3], &[3, 2], &[5]];
    let shape = shapes[rng.below(shapes.len())];
    FactoredStateSpace::new(shape.iter().enumerate().map(|(i, &k)| Factor::numbered(format!("X{}", i + 1), k)).collect()).unwrap()
}

/// Random constant or piecewise-constant generator, dimension ≤ 6.
pub fn random_generator(rng: &mut Seeded) -> GeneratorFunction {
    let space = random_space(rng);
    let n = space.size();
    if rng.unit() < 0.5 {
        GeneratorFunction::constant(space, random_rates(rng, n)).unwrap()
    } else {
        let pieces = 2 + rng.below(2);
        let mut breakpoints = vec![0.0];
        for _ in 1..pieces {
            let last = *breakpoints.last().unwrap();
            breakpoints.push(last + rng.range(0.2, 1.0));
        }
        let matrices = (0..pieces).map(|_| random_rates(rng, n)).collect();
        GeneratorFunction::piecewise(space, breakpoints, matrices).unwrap()
    }
}

/// Random full-support law.
pub fn random_law(rng: &mut Seeded, n: usize) -> Distribution {
    let w: Vec<f64> = (0..n).map(|_| rng.range(0.1, 1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut w: Vec<f64> = w.iter().map(|x| x / total).collect();
    let rest: f64 = w[1..].iter().sum();
    w[0] = 1.0 - rest;
    Distribution::new(w).unwrap()
}
