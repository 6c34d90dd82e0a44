use htensor_conic::{check_solution, solve, ConicProblem, PowerCone3, PowerMode, SolveStatus, SolverConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tight() -> SolverConfig {
    SolverConfig { feas_tol: 1e-10, gap_tol: 1e-10, ..SolverConfig::default() }
}

fn geometric_mean_problem() -> ConicProblem {
    let mut p = ConicProblem::new();
    let v = p.add_vars(3);
    p.add_power(PowerCone3::new(0.5).unwrap(), v[0], v[1], v[2]);
    p.add_eq(vec![(v[0], 1.0)], 4.0);
    p.add_eq(vec![(v[1], 1.0)], 9.0);
    p.add_objective(v[2], 1.0);
    p
}

/// maximize lambda  s.t.  b >= 0, 2 - lambda >= b, (b, b, 1) in K_{1/2}.
fn one_dimensional_problem() -> (ConicProblem, usize) {
    let mut p = ConicProblem::new();
    let lambda = p.add_var();
    let b = p.add_vars(2);
    let one = p.add_var();
    let slack = p.add_var();
    p.add_power(PowerCone3::new(0.5).unwrap(), b[0], b[1], one);
    p.add_nonneg(vec![slack]);
    p.add_eq(vec![(b[0], 1.0), (b[1], -1.0)], 0.0);
    p.add_eq(vec![(one, 1.0)], 1.0);
    p.add_eq(vec![(lambda, 1.0), (b[0], 1.0), (slack, 1.0)], 2.0);
    p.add_objective(lambda, 1.0);
    (p, lambda)
}

/// Chained power-cone system for an order-4, dimension-2 tensor with
/// diagonal (4, 1000) and off-diagonal entries -2 at (1,1,1,2), -1 at
/// (1,1,2,2) and 64/3 at (1,2,2,2). Each chain bounds the product of its
/// b-values by c(i) |a_i|^4.
struct ExampleSystem {
    problem: ConicProblem,
    /// Per chain: variables in the cone slots, in chain order.
    chains: Vec<ChainVars>,
    slacks: [usize; 2],
}

struct ChainVars {
    slots: [usize; 4],
    distinct: [usize; 2],
    b: [usize; 2],
    v1: [usize; 2],
    v2: [usize; 2],
    z: usize,
}

fn example_system() -> ExampleSystem {
    // (slots, c(i), a_i)
    let chains_def: [([usize; 4], f64, f64); 3] =
        [([0, 0, 0, 1], 27.0, -2.0), ([0, 0, 1, 1], 81.0, -1.0), ([0, 1, 1, 1], 27.0, 64.0 / 3.0)];
    let mut p = ConicProblem::new();
    let mut row_terms: [Vec<(usize, f64)>; 2] = [Vec::new(), Vec::new()];
    let mut chains = Vec::new();
    for (slots, c, a) in chains_def {
        // slot variables of the three cones: (s0, v1, z), (s1, v2', v1'), (s2, s3, v2)
        let cone1 = p.add_vars(3);
        let cone2 = p.add_vars(3);
        let cone3 = p.add_vars(3);
        p.add_power(PowerCone3::new(0.25).unwrap(), cone1[0], cone1[1], cone1[2]);
        p.add_power(PowerCone3::new(1.0 / 3.0).unwrap(), cone2[0], cone2[1], cone2[2]);
        p.add_power(PowerCone3::new(0.5).unwrap(), cone3[0], cone3[1], cone3[2]);
        p.add_eq(vec![(cone1[2], 1.0)], c.powf(0.25) * a);
        p.add_eq(vec![(cone1[1], 1.0), (cone2[2], -1.0)], 0.0);
        p.add_eq(vec![(cone2[1], 1.0), (cone3[2], -1.0)], 0.0);
        let slot_vars = [cone1[0], cone2[0], cone3[0], cone3[1]];
        let mut b = [usize::MAX; 2];
        for (k, &j) in slots.iter().enumerate() {
            if b[j] == usize::MAX {
                b[j] = slot_vars[k];
                row_terms[j].push((slot_vars[k], 1.0));
            } else {
                p.add_eq(vec![(slot_vars[k], 1.0), (b[j], -1.0)], 0.0);
            }
        }
        chains.push(ChainVars {
            slots: slot_vars,
            distinct: [slots[0], slots[3]],
            b,
            v1: [cone1[1], cone2[2]],
            v2: [cone2[1], cone3[2]],
            z: cone1[2],
        });
    }
    let slacks = [p.add_var(), p.add_var()];
    p.add_nonneg(slacks.to_vec());
    for (j, diag) in [4.0, 1000.0].into_iter().enumerate() {
        let mut terms = row_terms[j].clone();
        terms.push((slacks[j], 1.0));
        p.add_eq(terms, diag);
    }
    ExampleSystem { problem: p, chains, slacks }
}

#[test]
fn geometric_mean_optimum() {
    let r = solve(&geometric_mean_problem(), &tight()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.obj - 6.0).abs() <= 1e-8, "z* = {}", r.obj);
    let report = check_solution(&geometric_mean_problem(), &r.x).unwrap();
    assert!(report.max_violation() <= 1e-8);
}

#[test]
fn one_dimensional_optimum() {
    let (p, lambda) = one_dimensional_problem();
    let r = solve(&p, &tight()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    assert!((r.x[lambda] - 1.0).abs() <= 1e-8, "lambda* = {}", r.x[lambda]);
    assert!((r.x[1] - 1.0).abs() <= 1e-6, "b* = {}", r.x[1]);
}

#[test]
fn example_system_is_feasible() {
    let sys = example_system();
    let r = solve(&sys.problem, &tight()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    let report = check_solution(&sys.problem, &r.x).unwrap();
    assert!(report.max_violation() <= 1e-8, "violation {}", report.max_violation());
}

#[test]
fn example_system_accepts_hand_built_point() {
    // b-values and slacks read off the published decomposition
    let b_vals = [[3.0, 16.0], [3.0 / 16.0, 48.0], [1.0 / 81.0, 768.0]];
    let sys = example_system();
    let mut x = vec![0.0; sys.problem.num_vars()];
    for (chain, b) in sys.chains.iter().zip(b_vals) {
        let _ = chain.distinct;
        let slot_b: Vec<f64> = match chain.slots.iter().position(|&s| s == chain.b[1]) {
            Some(first_two) => (0..4).map(|k| if k < first_two { b[0] } else { b[1] }).collect(),
            None => unreachable!(),
        };
        for (k, &s) in chain.slots.iter().enumerate() {
            x[s] = slot_b[k];
        }
        // v2 = sqrt(b_{s2} b_{s3}); v1 = b_{s1}^{1/3} v2^{2/3}
        let v2 = (slot_b[2] * slot_b[3]).sqrt();
        let v1 = slot_b[1].powf(1.0 / 3.0) * v2.powf(2.0 / 3.0);
        for &i in &chain.v2 {
            x[i] = v2;
        }
        for &i in &chain.v1 {
            x[i] = v1;
        }
        x[chain.z] = sys.problem.rows().iter().find(|r| r.coefs == vec![(chain.z, 1.0)]).unwrap().rhs;
    }
    x[sys.slacks[0]] = 1037.0 / 1296.0;
    x[sys.slacks[1]] = 168.0;
    let report = check_solution(&sys.problem, &x).unwrap();
    assert!(report.max_violation() <= 1e-8, "violation {}", report.max_violation());
}

#[test]
fn tower_mode_matches_direct_mode() {
    let sys = example_system();
    let mut p = sys.problem.clone();
    // maximize the slack of the first row
    p.add_objective(sys.slacks[0], 1.0);
    let direct = solve(&p, &SolverConfig::default()).unwrap();
    let tower = solve(&p, &SolverConfig { power_mode: PowerMode::SocTower, ..SolverConfig::default() }).unwrap();
    assert_eq!(direct.status, SolveStatus::Optimal);
    assert_eq!(tower.status, SolveStatus::Optimal);
    assert!((direct.obj - tower.obj).abs() <= 1e-6 * (1.0 + direct.obj.abs()), "{} vs {}", direct.obj, tower.obj);
    let report = check_solution(&p, &tower.x).unwrap();
    // residuals are relative to the largest right-hand side (1000)
    assert!(report.max_violation() <= 1e-8 * 1001.0 * 10.0, "{}", report.max_violation());
}

#[test]
fn iterates_are_deterministic() {
    let sys = example_system();
    let cfg = SolverConfig { record_iterates: true, ..SolverConfig::default() };
    let a = solve(&sys.problem, &cfg).unwrap();
    let b = solve(&sys.problem, &cfg).unwrap();
    assert!(!a.trace.is_empty());
    assert_eq!(a.trace.len(), b.trace.len());
    for (ra, rb) in a.trace.iter().zip(&b.trace) {
        assert_eq!(ra.mu.to_bits(), rb.mu.to_bits());
        assert_eq!(ra.step.to_bits(), rb.step.to_bits());
        assert!(ra.x.iter().zip(&rb.x).all(|(u, v)| u.to_bits() == v.to_bits()));
    }
    assert!(a.x.iter().zip(&b.x).all(|(u, v)| u.to_bits() == v.to_bits()));
}

#[test]
fn reported_residuals_bound_independent_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let (p, _) = random_box_problem(&mut rng);
        let r = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        let report = check_solution(&p, &r.x).unwrap();
        let scale = 1.0 + p.rows().iter().map(|row| row.rhs.abs()).fold(0.0, f64::max);
        assert!(report.max_eq_violation <= 10.0 * r.residuals.primal.max(1e-15) * scale);
    }
}

/// maximize sqrt(x y) - a x - b y over 0 <= x <= ux, 0 <= y <= uy.
fn random_box_problem(rng: &mut ChaCha8Rng) -> (ConicProblem, [f64; 4]) {
    let a = rng.gen_range(0.1..1.0);
    let b = rng.gen_range(0.1..1.0);
    let ux = rng.gen_range(0.5..5.0);
    let uy = rng.gen_range(0.5..5.0);
    let mut p = ConicProblem::new();
    let v = p.add_vars(3);
    let s = p.add_vars(2);
    p.add_power(PowerCone3::new(0.5).unwrap(), v[0], v[1], v[2]);
    p.add_nonneg(s.clone());
    p.add_eq(vec![(v[0], 1.0), (s[0], 1.0)], ux);
    p.add_eq(vec![(v[1], 1.0), (s[1], 1.0)], uy);
    p.add_objective(v[2], 1.0);
    p.add_objective(v[0], -a);
    p.add_objective(v[1], -b);
    (p, [a, b, ux, uy])
}

/// Concave objective: nested ternary search is exact up to its resolution.
fn box_oracle([a, b, ux, uy]: [f64; 4]) -> f64 {
    let f = |x: f64, y: f64| (x * y).sqrt() - a * x - b * y;
    let inner = |x: f64| {
        let (mut lo, mut hi) = (0.0, uy);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(x, m1) < f(x, m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        f(x, 0.5 * (lo + hi))
    };
    // coarse grid to seed, then ternary refinement
    let (mut lo, mut hi) = (0.0, ux);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if inner(m1) < inner(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let grid_best = (0..=100)
        .flat_map(|i| (0..=100).map(move |j| (i, j)))
        .map(|(i, j)| f(ux * i as f64 / 100.0, uy * j as f64 / 100.0))
        .fold(f64::NEG_INFINITY, f64::max);
    inner(0.5 * (lo + hi)).max(grid_best)
}

#[test]
fn half_cones_agree_with_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let (p, params) = random_box_problem(&mut rng);
        let r = solve(&p, &SolverConfig::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        let oracle = box_oracle(params);
        assert!((r.obj - oracle).abs() <= 1e-6, "{} vs oracle {}", r.obj, oracle);
    }
}

#[test]
fn infeasible_power_system_is_detected() {
    // x1 = 1, x2 = 1, z = 2 cannot satisfy sqrt(x1 x2) >= |z|
    let mut p = ConicProblem::new();
    let v = p.add_vars(3);
    p.add_power(PowerCone3::new(0.5).unwrap(), v[0], v[1], v[2]);
    p.add_eq(vec![(v[0], 1.0)], 1.0);
    p.add_eq(vec![(v[1], 1.0)], 1.0);
    p.add_eq(vec![(v[2], 1.0)], 2.0);
    let r = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Infeasible);
}

#[test]
fn unbounded_power_system_is_detected() {
    // maximize z with x1 = x2: the ray (t, t, t) improves without bound
    let mut p = ConicProblem::new();
    let v = p.add_vars(3);
    p.add_power(PowerCone3::new(0.3).unwrap(), v[0], v[1], v[2]);
    p.add_eq(vec![(v[0], 1.0), (v[1], -1.0)], 0.0);
    p.add_objective(v[2], 1.0);
    let r = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Unbounded);
}

#[test]
fn generic_exponents_solve() {
    // maximize z s.t. x1 = 8, x2 = 1, (x1, x2, z) in K_alpha  ->  8^alpha
    for alpha in [0.1, 0.25, 1.0 / 3.0, 0.6, 0.9] {
        let mut p = ConicProblem::new();
        let v = p.add_vars(3);
        p.add_power(PowerCone3::new(alpha).unwrap(), v[0], v[1], v[2]);
        p.add_eq(vec![(v[0], 1.0)], 8.0);
        p.add_eq(vec![(v[1], 1.0)], 1.0);
        p.add_objective(v[2], 1.0);
        let r = solve(&p, &tight()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.obj - 8f64.powf(alpha)).abs() <= 1e-8, "alpha {alpha}: {}", r.obj);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn membership_is_invariant_under_cone_scaling(
        alpha in 0.05f64..0.95,
        x1 in 1e-3f64..1e3,
        x2 in 1e-3f64..1e3,
        frac in -1.5f64..1.5,
        t in 0.1f64..10.0,
        s in 0.1f64..10.0,
    ) {
        let cone = PowerCone3::new(alpha).unwrap();
        let z = frac * cone.geometric_mean(x1, x2);
        prop_assume!((frac.abs() - 1.0).abs() > 1e-9);
        let scaled_z = t.powf(alpha) * s.powf(1.0 - alpha) * z;
        prop_assert_eq!(cone.member(x1, x2, z, 0.0), cone.member(t * x1, s * x2, scaled_z, 0.0));
    }
}
