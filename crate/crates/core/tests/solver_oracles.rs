//! OT solvers checked against brute-force enumeration and LP optimality
//! conditions.

use mbr_ot::ot::{solve_ewd, solve_la, solve_wd, CostMatrix, EntropicParams, TransportPlan};
use mbr_ot_oracle as oracle;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_simplex(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn random_cost(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|_| (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect())
        .collect()
}

fn assert_marginals(plan: &TransportPlan, p: &[f64], q: &[f64], tol: f64) {
    for (a, b) in plan.row_sums().iter().zip(p) {
        assert!((a - b).abs() <= tol, "row sum {a} vs {b}");
    }
    for (a, b) in plan.col_sums().iter().zip(q) {
        assert!((a - b).abs() <= tol, "col sum {a} vs {b}");
    }
}

#[test]
fn la_three_by_three_matches_all_permutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let c = random_cost(&mut rng, 3, 3);
        let w = [1.0 / 3.0; 3];
        let plan = solve_la(&CostMatrix::new(c.clone()).unwrap(), &w, &w).unwrap();
        let best = oracle::assignment_by_enumeration(&c, &w);
        assert!((plan.objective - best).abs() < 1e-12);
    }
}

#[test]
fn la_rectangular_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let m = rng.gen_range(1..=5);
        let n = rng.gen_range(1..=5);
        let c = random_cost(&mut rng, m, n);
        let p = random_simplex(&mut rng, m);
        let q = random_simplex(&mut rng, n);
        let plan = solve_la(&CostMatrix::new(c.clone()).unwrap(), &p, &q).unwrap();
        let map = plan.assignment.clone().unwrap();
        if m <= n {
            let mut seen = map.clone();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), m, "not injective");
        }
        if m >= n {
            assert!((0..n).all(|j| map.contains(&j)), "not surjective");
        }
        let recomputed: f64 = map.iter().enumerate().map(|(i, &j)| p[i] * c[i][j]).sum();
        assert!((recomputed - plan.objective).abs() < 1e-12);
        let best = oracle::assignment_by_enumeration(&c, &p);
        assert!(
            (plan.objective - best).abs() < 1e-9,
            "{m}x{n}: {} vs {best}",
            plan.objective
        );
    }
}

#[test]
fn wd_matches_vertex_enumeration_with_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let m = rng.gen_range(1..=4);
        let n = rng.gen_range(1..=4);
        let c = random_cost(&mut rng, m, n);
        let p = random_simplex(&mut rng, m);
        let q = random_simplex(&mut rng, n);
        let cost = CostMatrix::new(c.clone()).unwrap();
        let plan = solve_wd(&cost, &p, &q).unwrap();
        let best = oracle::transport_by_vertex_enumeration(&c, &p, &q);
        assert!((plan.objective - best).abs() < 1e-9);
        assert_marginals(&plan, &p, &q, 1e-8);
        let (f, g) = plan.duals.clone().unwrap();
        for i in 0..m {
            for j in 0..n {
                assert!(f[i] + g[j] <= c[i][j] + 1e-7);
                if plan.coupling[i][j] > 1e-12 {
                    assert!((f[i] + g[j] - c[i][j]).abs() <= 1e-7);
                }
            }
        }
    }
}

#[test]
fn wd_handles_uniform_marginals_with_ties() {
    // Equal weights make the north-west corner start heavily degenerate.
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let m = rng.gen_range(2..=4);
        let n = rng.gen_range(2..=4);
        // Costs on a coarse grid produce many tied reduced costs.
        let c: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| rng.gen_range(0..=4) as f64 / 4.0).collect())
            .collect();
        let p = vec![1.0 / m as f64; m];
        let q = vec![1.0 / n as f64; n];
        let plan = solve_wd(&CostMatrix::new(c.clone()).unwrap(), &p, &q).unwrap();
        let best = oracle::transport_by_vertex_enumeration(&c, &p, &q);
        assert!((plan.objective - best).abs() < 1e-9);
    }
}

#[test]
fn sinkhorn_small_epsilon_approaches_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let c = random_cost(&mut rng, 4, 4);
        let p = random_simplex(&mut rng, 4);
        let q = random_simplex(&mut rng, 4);
        let cost = CostMatrix::new(c).unwrap();
        let exact = solve_wd(&cost, &p, &q).unwrap().objective;
        let plan = solve_ewd(&cost, &p, &q, &EntropicParams::with_epsilon(1e-3)).unwrap();
        assert!(
            (plan.objective - exact).abs() < 1e-2,
            "{} vs {exact}",
            plan.objective
        );
    }
}

#[test]
fn sinkhorn_huge_epsilon_gives_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..50 {
        let c = random_cost(&mut rng, 4, 4);
        let p = random_simplex(&mut rng, 4);
        let q = random_simplex(&mut rng, 4);
        let plan = solve_ewd(&CostMatrix::new(c).unwrap(), &p, &q, &EntropicParams::with_epsilon(1e6)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((plan.coupling[i][j] - p[i] * q[j]).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn wd_never_beats_north_west_corner_or_assignment() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..200 {
        let m = rng.gen_range(1..=6);
        let n = rng.gen_range(1..=6);
        let c = random_cost(&mut rng, m, n);
        let p = random_simplex(&mut rng, m);
        let q = random_simplex(&mut rng, n);
        let wd = solve_wd(&CostMatrix::new(c.clone()).unwrap(), &p, &q).unwrap().objective;

        // north-west corner coupling, built by hand
        let (mut s, mut d) = (p.clone(), q.clone());
        let (mut i, mut j, mut nw) = (0, 0, 0.0);
        while i < m && j < n {
            let x = s[i].min(d[j]);
            nw += x * c[i][j];
            s[i] -= x;
            d[j] -= x;
            if s[i] <= d[j] { i += 1 } else { j += 1 }
        }
        assert!(wd <= nw + 1e-12);
        // the product coupling is feasible too
        let product: f64 = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| p[i] * q[j] * c[i][j]).sum();
        assert!(wd <= product + 1e-12);
    }
}

fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    (1usize..=5, 1usize..=5).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..=1.0, n), m),
            prop::collection::vec(0.05f64..1.0, m),
            prop::collection::vec(0.05f64..1.0, n),
        )
            .prop_map(|(c, p, q)| {
                let sp: f64 = p.iter().sum();
                let sq: f64 = q.iter().sum();
                (c, p.iter().map(|x| x / sp).collect(), q.iter().map(|x| x / sq).collect())
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn exact_and_entropic_plans_are_feasible((c, p, q) in instance()) {
        let cost = CostMatrix::new(c).unwrap();
        let wd = solve_wd(&cost, &p, &q).unwrap();
        assert_marginals(&wd, &p, &q, 1e-8);
        let ewd = solve_ewd(&cost, &p, &q, &EntropicParams::default()).unwrap();
        prop_assert!(ewd.converged);
        assert_marginals(&ewd, &p, &q, 1e-8);
        for plan in [&wd, &ewd] {
            let direct: f64 = plan.coupling.iter().enumerate()
                .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, g)| (i, j, *g)))
                .map(|(i, j, g)| g * cost.get(i, j)).sum();
            prop_assert!((direct - plan.objective).abs() < 1e-9);
            prop_assert!(plan.coupling.iter().flatten().all(|&g| g >= 0.0));
        }
    }

    #[test]
    fn cost_scaling_is_linear((c, p, q) in instance(), alpha in 0.01f64..1.0) {
        let cost = CostMatrix::new(c).unwrap();
        let scaled = cost.scaled(alpha);
        let la = solve_la(&cost, &p, &q).unwrap().objective;
        let la_s = solve_la(&scaled, &p, &q).unwrap().objective;
        prop_assert!((la_s - alpha * la).abs() < 1e-12);
        let wd = solve_wd(&cost, &p, &q).unwrap().objective;
        let wd_s = solve_wd(&scaled, &p, &q).unwrap().objective;
        prop_assert!((wd_s - alpha * wd).abs() < 1e-12);
    }

    #[test]
    fn transposed_problem_has_same_value((c, p, q) in instance()) {
        let cost = CostMatrix::new(c).unwrap();
        let t = cost.transpose();
        let a = solve_wd(&cost, &p, &q).unwrap().objective;
        let b = solve_wd(&t, &q, &p).unwrap().objective;
        prop_assert!((a - b).abs() < 1e-9);
        let params = EntropicParams::default();
        let a = solve_ewd(&cost, &p, &q, &params).unwrap();
        let b = solve_ewd(&t, &q, &p, &params).unwrap();
        prop_assert!((a.regularized_objective() - b.regularized_objective()).abs() < 1e-9);
    }
}
