use ipf::dynamics::*;
use ipf::model::*;
use proptest::prelude::*;

fn two_seed_sweep(lo: f64, hi: f64, n: usize) -> Vec<(f64, RegimeReport)> {
    let setup = SweepSetup::new(vec![0.164], 0.3, Seeding::Explicit(vec![0.3, 0.0]));
    regime_map(
        &setup,
        InvAlphaRange::new(lo, hi, n).unwrap(),
        &Protocol::default(),
    )
    .unwrap()
}

#[test]
fn single_reflection_returns_from_chaos() {
    let rows = two_seed_sweep(2.4, 2.8, 161);
    let first_chaos = rows
        .iter()
        .position(|(_, r)| r.kind() == RegimeKind::Chaotic)
        .expect("no chaotic column");
    assert!(rows[first_chaos..]
        .iter()
        .any(|(_, r)| r.kind() == RegimeKind::FixedPoint));
}

#[test]
fn single_reflection_has_divergent_gaps() {
    let rows = two_seed_sweep(2.4, 2.8, 161);
    let alive: Vec<bool> = rows
        .iter()
        .map(|(_, r)| r.kind() != RegimeKind::Divergent)
        .collect();
    let gap = (1..alive.len() - 1)
        .any(|i| !alive[i] && alive[..i].iter().any(|a| *a) && alive[i + 1..].iter().any(|a| *a));
    assert!(gap);
}

#[test]
fn first_bifurcation_matches_linear_stability() {
    // Fixed point g = alpha + beta; the Jacobian of (g, g_-) has trace
    // 1 - (1 - beta) / alpha and determinant beta / alpha. An eigenvalue of
    // -1 needs 1 + trace + det = 0, i.e. alpha = 1/2 - beta.
    for beta in [0.0, 0.05, 0.164] {
        let expect = 0.5 - beta;
        let got = first_bifurcation_alpha(&[beta]).unwrap();
        assert!(
            (got - expect).abs() < 1e-3,
            "beta {beta}: {got} vs {expect}"
        );
        let trace = 1.0 - (1.0 - beta) / expect;
        let det = beta / expect;
        assert!((1.0 + trace + det).abs() < 1e-12);
    }
}

#[test]
fn simple_orbit_diagram_doubles_then_diverges() {
    let setup = SweepSetup::new(vec![], 1.0, Seeding::SimpleFromG0);
    let d = orbit_diagram(
        &setup,
        InvAlphaRange::new(1.0, 2.8, 181).unwrap(),
        2500,
        250,
    )
    .unwrap();
    let counts = d.distinct_counts(1e-6);
    for (x, c) in d.axis.iter().zip(&counts) {
        if *x < 1.99 {
            assert_eq!(*c, Some(1), "1/alpha {x}");
        } else if (2.05..=2.35).contains(x) {
            assert_eq!(*c, Some(2), "1/alpha {x}");
        } else if *x > std::f64::consts::E + 0.01 {
            assert_eq!(*c, None, "1/alpha {x}");
        } else if *x < std::f64::consts::E - 0.01 {
            assert!(c.is_some(), "1/alpha {x}");
        }
    }
    let chaotic = d
        .axis
        .iter()
        .zip(&counts)
        .any(|(x, c)| (2.5..=2.7).contains(x) && c.is_some_and(|c| c >= 8));
    assert!(chaotic);
}

#[test]
fn regime_csv_of_a_sweep() {
    let rows = two_seed_sweep(1.0, 1.2, 3);
    let mut buf = Vec::new();
    write_regime_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("1,1,fixed-point,1,"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fixed_point_is_invariant(alpha in 0.05f64..2.0, betas in prop::collection::vec(0.0f64..0.3, 0..4)) {
        let gs = alpha + betas.iter().sum::<f64>();
        let p = IpfParams::new(alpha, betas.clone(), 1.0).unwrap();
        let h = StateHistory::constant(gs, betas.len()).unwrap();
        let next = step_general(&h, &p).unwrap().unwrap();
        prop_assert!(((next - gs) / gs).abs() <= 1e-12);
    }

    #[test]
    fn explicit_and_default_seeding_agree_on_the_simple_map(inv in 1.0f64..2.7, g0 in 0.5f64..2.0) {
        let p = IpfParams::simple(1.0 / inv, g0).unwrap();
        let a = iterate(&p, 300).unwrap();
        let b = iterate_with(&p, &Seeding::Explicit(vec![g0]), 300).unwrap();
        prop_assert_eq!(a.states, b.states);
    }

    #[test]
    fn sweep_columns_are_independent(lo in 1.0f64..2.5, width in 0.01f64..0.3) {
        let setup = SweepSetup::new(vec![0.1], 1.0, Seeding::SimpleFromG0);
        let range = InvAlphaRange::new(lo, lo + width, 4).unwrap();
        let d = orbit_diagram(&setup, range, 400, 50).unwrap();
        for (x, col) in d.axis.iter().zip(&d.columns) {
            let p = IpfParams::new(1.0 / x, vec![0.1], 1.0).unwrap();
            let t = iterate(&p, 400).unwrap();
            match col {
                OrbitColumn::Diverged => prop_assert!(t.diverged()),
                OrbitColumn::Samples(s) => prop_assert_eq!(s.as_slice(), t.tail(50).unwrap()),
            }
        }
    }
}
