mod common;

use common::*;
use markov_copula::*;
use proptest::prelude::*;

fn seeded_generator() -> impl Strategy<Value = (GeneratorFunction, Distribution, u64)> {
    any::<u64>().prop_map(|seed| {
        let mut rng = Seeded::new(seed);
        let g = random_generator(&mut rng);
        let mu0 = random_law(&mut rng, g.dim());
        (g, mu0, seed)
    })
}

fn ex31_params() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0..2.0f64, 0.0..2.0f64, 0.0..2.0f64)
}

fn absorbing(name: &str, rate: f64) -> GeneratorFunction {
    GeneratorFunction::from_rows(FactoredStateSpace::plain(name, 2).unwrap(), &[vec![-rate, rate], vec![0.0, 0.0]]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chapman_kolmogorov((g, _, _) in seeded_generator(), t1 in 0.0..2.0f64, dt in 0.0..2.0f64) {
        let t2 = t1 + dt;
        let p2 = transition_matrix(&g, 0.0, t2).unwrap();
        let p1 = transition_matrix(&g, 0.0, t1).unwrap();
        let p12 = transition_matrix(&g, t1, t2).unwrap();
        prop_assert!((&p2.matrix - &p1.matrix * &p12.matrix).abs().max() <= 1e-7);
    }

    #[test]
    fn transition_rows_are_laws((g, _, _) in seeded_generator(), t in 0.0..3.0f64) {
        let p = transition_matrix(&g, 0.0, t).unwrap();
        for v in 0..g.dim() {
            let row = p.row(v);
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(row.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn single_constraint_event_is_bayes_restriction((g, mu0, seed) in seeded_generator(), t in 0.05..2.0f64) {
        let space = g.space().clone();
        let i = (seed as usize) % space.factor_count();
        let law = evolve(&mu0, &g, t).unwrap();
        for x in 0..space.cardinality(i) {
            let ev = PathEvent::new(i, vec![(t, x)]).unwrap();
            let got = path_event_law(&mu0, &g, &ev).unwrap();
            let mass: f64 = space.states_with(i, x).map(|s| law.weights()[s]).sum();
            prop_assert!((got.probability - mass).abs() <= 1e-12);
            if let Some(c) = got.conditional {
                for s in 0..space.size() {
                    let want = if space.coord(s, i) == x { law.weights()[s] / mass } else { 0.0 };
                    prop_assert!((c.weights()[s] - want).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn path_patterns_partition((g, mu0, seed) in seeded_generator(), t in 0.1..2.0f64) {
        let space = g.space().clone();
        let i = (seed as usize) % space.factor_count();
        let k = space.cardinality(i);
        let times = [t / 3.0, 2.0 * t / 3.0, t];
        let mut total = 0.0;
        for code in 0..k.pow(3) {
            let pattern = [code % k, (code / k) % k, code / (k * k)];
            let ev = PathEvent::new(i, times.iter().copied().zip(pattern).collect()).unwrap();
            total += path_event_law(&mu0, &g, &ev).unwrap().probability;
        }
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn extracted_marginals_are_generators((g, mu0, _) in seeded_generator(), t in 0.0..2.0f64) {
        for i in 0..g.space().factor_count() {
            let m = extract_marginal(&g, &mu0, i, &[t]).unwrap();
            for x in 0..m.states() {
                if m.defined[0][x] {
                    let row = &m.rates[0][x];
                    prop_assert!(row.iter().enumerate().all(|(y, &r)| y == x || r >= 0.0));
                    prop_assert!(row.iter().sum::<f64>().abs() <= 1e-12 * (1.0 + row[x].abs()));
                }
            }
        }
    }

    #[test]
    fn depth_one_projection_matches_marginal((g, mu0, _) in seeded_generator(), t in 0.0..2.0f64) {
        for i in 0..g.space().factor_count() {
            let m = extract_marginal(&g, &mu0, i, &[t]).unwrap();
            for x in (0..m.states()).filter(|&x| m.defined[0][x]) {
                let ev = PathEvent::new(i, vec![(t, x)]).unwrap();
                for y in (0..m.states()).filter(|&y| y != x) {
                    let v = projected_intensity(&g, &mu0, &ev, i, x, y).unwrap();
                    prop_assert!((v - m.rates[0][x][y]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn condition_m_implies_strong_with_plain_sums((a, b, c) in ex31_params(), t in 0.05..2.0f64) {
        let g = GeneratorFunction::family(Family::Example31 { a, b, c });
        let mu0 = Distribution::point_mass(4, 0).unwrap();
        let r = check_condition_m(&g, &[t]).unwrap();
        prop_assert!(r.holds[0]);
        let s = check_strong(&g, &mu0, &[t], 0).unwrap();
        prop_assert_eq!(s.verdict, Verdict::Strong);
        let m = s.marginal.unwrap();
        prop_assert!((m.rates[0][0][1] - (a + c)).abs() <= 1e-12);
        prop_assert!(m.rates[0][1][0].abs() <= 1e-12);
    }

    #[test]
    fn strong_implies_operator_condition((g, mu0, _) in seeded_generator(), t in 0.05..2.0f64) {
        for i in 0..g.space().factor_count() {
            let s = check_strong(&g, &mu0, &[t], i).unwrap();
            if s.verdict == Verdict::Strong {
                let m = extract_marginal(&g, &mu0, i, &[t]).unwrap();
                let r = check_operator_condition(&g, &mu0, &m, i, &[t]).unwrap();
                prop_assert!(r.max_residual <= 1e-8);
            }
        }
    }

    #[test]
    fn tensor_sums_are_weakly_consistent(seed in any::<u64>(), t in 0.1..2.0f64) {
        let mut rng = Seeded::new(seed);
        let k1 = 2 + rng.below(2);
        let k2 = 2;
        let g1 = GeneratorFunction::constant(FactoredStateSpace::plain("X1", k1).unwrap(), random_rates(&mut rng, k1)).unwrap();
        let g2 = GeneratorFunction::constant(FactoredStateSpace::plain("X2", k2).unwrap(), random_rates(&mut rng, k2)).unwrap();
        let g = tensor_sum(&g1, &g2).unwrap();
        let mu0 = random_law(&mut rng, k1).product(&random_law(&mut rng, k2));
        for i in 0..2 {
            let w = check_weak(&g, &mu0, i, &[t], 2).unwrap();
            prop_assert_eq!(w.verdict, Verdict::WeakEvidence);
            prop_assert!(w.max_gap <= 1e-10, "gap {}", w.max_gap);
        }
    }

    #[test]
    fn tensor_sum_matches_example_only_without_common_jumps((a, b, c) in ex31_params(), zero in any::<bool>()) {
        let c = if zero { 0.0 } else { c.max(1e-3) };
        let ts = tensor_sum(&absorbing("X1", a + c), &absorbing("X2", b + c)).unwrap();
        let fam = GeneratorFunction::family(Family::Example31 { a, b, c });
        prop_assert_eq!(ts.at(0.0) == fam.at(0.0), c == 0.0);
    }

    #[test]
    fn copula_solutions_verify((a, b, c) in ex31_params(), which in 0usize..3) {
        let marginals = vec![absorbing("X1", a + c), absorbing("X2", b + c)];
        let objective = [Objective::Independent, Objective::MaximizeCommonJumps, Objective::MinimizeCommonJumps][which].clone();
        let sol = build_strong_copula(&CopulaProblem { marginals: marginals.clone(), objective, probe_times: vec![] }).unwrap();
        prop_assert!(sol.residual <= 1e-9);
        prop_assert!(validate_generator(&sol.generator, &[0.0, 1.0]).unwrap().is_ok());
        prop_assert!(verify_strong_copula(&sol.generator, &marginals, &[0.0, 1.0]).unwrap().pass);
        let mu0 = Distribution::point_mass(4, 0).unwrap();
        for (i, m) in marginals.iter().enumerate() {
            let s = check_strong(&sol.generator, &mu0, &[0.5], i).unwrap();
            let want = MarginalGenerator::from_generator(i, m, &[0.5]).unwrap();
            prop_assert!(s.marginal.unwrap().max_difference(&want).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn common_jump_optimum_is_min_rate((a, b, c) in ex31_params()) {
        let marginals = vec![absorbing("X1", a + c), absorbing("X2", b + c)];
        let sol = build_strong_copula(&CopulaProblem { marginals, objective: Objective::MaximizeCommonJumps, probe_times: vec![] }).unwrap();
        let v = sol.objective_values[0];
        prop_assert!((v - (a + c).min(b + c)).abs() <= 1e-9);
        // never below the tensor sum (0) or the common-jump rate c
        prop_assert!(v >= c - 1e-12);
    }

    #[test]
    fn simulated_paths_are_valid((g, mu0, seed) in seeded_generator(), horizon in 0.1..3.0f64) {
        let p = simulate(&g, &mu0, horizon, seed).unwrap();
        prop_assert_eq!(p.states.len(), p.jump_times.len() + 1);
        prop_assert!(p.jump_times.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(p.jump_times.iter().all(|&t| t > 0.0 && t <= horizon));
        prop_assert!(p.states.windows(2).all(|w| w[0] != w[1]));
        prop_assert_eq!(&simulate(&g, &mu0, horizon, seed).unwrap(), &p);
    }

    #[test]
    fn aggregation_and_additivity((g, mu0, seed) in seeded_generator(), horizon in 0.5..3.0f64, cut in 0.1..0.9f64) {
        let p = simulate(&g, &mu0, horizon, seed).unwrap();
        let s = counting_stats(&p, &g).unwrap();
        prop_assert_eq!(s.total_jumps() as usize, p.jumps());
        prop_assert!(s.compensators.iter().flatten().all(|&x| x >= 0.0));
        let space = g.space();
        for i in 0..space.factor_count() {
            let agg = s.component_counts(space, i);
            for x in 0..space.cardinality(i) {
                for y in (0..space.cardinality(i)).filter(|&y| y != x) {
                    let direct: u64 = (0..space.size())
                        .flat_map(|v| (0..space.size()).map(move |w| (v, w)))
                        .filter(|&(v, w)| space.coord(v, i) == x && space.coord(w, i) == y)
                        .map(|(v, w)| s.counts[v][w])
                        .sum();
                    prop_assert_eq!(agg[x][y], direct);
                }
            }
        }
        let mid = cut * horizon;
        let left = counting_stats_between(&p, &g, 0.0, mid).unwrap();
        let right = counting_stats_between(&p, &g, mid, horizon).unwrap();
        for v in 0..g.dim() {
            for w in 0..g.dim() {
                prop_assert_eq!(left.counts[v][w] + right.counts[v][w], s.counts[v][w]);
                let sum = left.compensators[v][w] + right.compensators[v][w];
                prop_assert!((sum - s.compensators[v][w]).abs() <= 1e-12 * (1.0 + s.compensators[v][w]));
            }
        }
    }

    #[test]
    fn family_compensators_are_additive(seed in any::<u64>(), horizon in 0.5..3.0f64, cut in 0.1..0.9f64) {
        let g = GeneratorFunction::family(Family::Example32Marginal { factor: 0, a: 0.5, b: 0.3, c: 0.2 });
        let mu0 = Distribution::point_mass(2, 0).unwrap();
        let p = simulate(&g, &mu0, horizon, seed).unwrap();
        let whole = counting_stats(&p, &g).unwrap();
        let mid = cut * horizon;
        let left = counting_stats_between(&p, &g, 0.0, mid).unwrap();
        let right = counting_stats_between(&p, &g, mid, horizon).unwrap();
        prop_assert!((left.compensators[0][1] + right.compensators[0][1] - whole.compensators[0][1]).abs() <= 1e-9);
    }
}

#[test]
fn batch_results_do_not_depend_on_thread_count() {
    let g = GeneratorFunction::family(Family::Example33 { a: 0.4, b: 0.3, c: 0.2, d: 0.25, e: 0.15, f: 0.1, g: 0.35 });
    let mu0 = Distribution::point_mass(4, 0).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| (martingale_residual_test(&g, &mu0, 1.0, 5000, 11).unwrap(), empirical_transition(&g, &mu0, 1.0, 5000, 11).unwrap()))
    };
    assert_eq!(run(1), run(4));
}
