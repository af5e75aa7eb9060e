//! Fixtures shared by the engine benchmarks.

use markov_copula::{Distribution, Factor, FactoredStateSpace, Family, GeneratorFunction, RateMatrix};

pub fn example_3_1() -> GeneratorFunction {
    GeneratorFunction::family(Family::Example31 { a: 0.5, b: 0.3, c: 0.2 })
}

pub fn example_3_2() -> GeneratorFunction {
    GeneratorFunction::family(Family::Example32Joint { a: 0.5, b: 0.3, c: 0.2 })
}

pub fn example_3_3() -> GeneratorFunction {
    GeneratorFunction::family(Family::Example33 { a: 0.4, b: 0.3, c: 0.2, d: 0.25, e: 0.15, f: 0.1, g: 0.35 })
}

pub fn origin(size: usize) -> Distribution {
    Distribution::point_mass(size, 0).expect("nonempty space")
}

/// Birth-death chain on `k` states with unit rates, as a single factor.
pub fn birth_death(name: &str, k: usize, up: f64, down: f64) -> GeneratorFunction {
    let mut rows = vec![vec![0.0; k]; k];
    for x in 0..k {
        if x + 1 < k {
            rows[x][x + 1] = up;
        }
        if x > 0 {
            rows[x][x - 1] = down;
        }
        rows[x][x] = -rows[x].iter().sum::<f64>();
    }
    let space = FactoredStateSpace::new(vec![Factor::numbered(name, k)]).expect("k ≥ 2");
    GeneratorFunction::constant(space, RateMatrix::from_rows(&rows).expect("square")).expect("valid")
}
