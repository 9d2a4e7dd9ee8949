use proptest::prelude::*;
use xflow::energy::EnergyPair;
use xflow::grid::{Field, Grid};
use xflow::solver::{cfl_dt, run, step, InitialData, SimConfig, SimState, SourceModel, Velocity};

fn bumps(g: Grid, amps: &[f64], centers: &[f64]) -> Field {
    Field::from_fn(g, |x| {
        amps.iter()
            .zip(centers)
            .map(|(a, c)| a * (-((x[0] - c).powi(2)) / 0.08).exp())
            .sum()
    })
    .unwrap()
}

fn energy() -> impl Strategy<Value = EnergyPair> {
    prop_oneof![
        (1.5f64..4.0).prop_map(|m| EnergyPair::power(m).unwrap()),
        Just(EnergyPair::entropy()),
    ]
}

fn config(e: EnergyPair, a1: f64, a2: f64, sources: bool, drift: bool) -> SimConfig {
    let g = Grid::new(1, 64, 4.0).unwrap();
    let init = InitialData {
        rho1: bumps(g, &[a1], &[1.6]),
        rho2: bumps(g, &[a2], &[2.4]),
        n: Field::constant(g, 1.0).unwrap(),
    };
    let mut c = SimConfig::new(e, init);
    c.alpha = 0.1;
    c.c1 = 0.5;
    c.c2 = 0.5;
    if sources {
        c.sources = SourceModel::Homeostatic {
            g1: 2.0,
            p_h: 1.5,
            d1: 0.3,
            d2: 0.1,
        };
    }
    if drift {
        c.velocity = Velocity::Rotating {
            omega: 0.7,
            center: [2.0, 0.0],
        };
    }
    c
}

fn mass(f: &Field) -> f64 {
    f.values().iter().sum::<f64>() * f.grid().cell_volume()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mass_changes_only_by_sources_and_clipping(
        e in energy(), a1 in 0.1f64..0.9, a2 in 0.0f64..0.5, sources: bool, drift: bool,
    ) {
        let cfg = config(e, a1, a2, sources, drift);
        let mut s = SimState::initial(&cfg);
        let stepper = xflow::solver::Stepper::new(&cfg).unwrap();
        for _ in 0..50 {
            let d = stepper.derived_fields(&s).unwrap();
            let dt = cfl_dt(&s, &cfg).unwrap();
            let before = mass(&s.rho());
            let (next, report) = step(&s, &cfg, dt).unwrap();
            let expected = before + dt * mass(&d.mu) + report.clipped_mass;
            let after = mass(&next.rho());
            prop_assert!((after - expected).abs() <= 1e-12 * before.max(1.0), "{after} vs {expected}");
            prop_assert!(next.rho1.min() >= 0.0 && next.rho2.min() >= 0.0 && next.n.min() >= 0.0);
            s = next;
        }
    }

    #[test]
    fn species_sum_follows_the_scalar_equation(e in energy(), a1 in 0.1f64..0.9, a2 in 0.05f64..0.5, drift: bool) {
        let two = config(e.clone(), a1, a2, false, drift);
        let mut one = two.clone();
        one.initial = InitialData::single(two.initial.rho1.zip_map(&two.initial.rho2, |a, b| a + b).unwrap());
        let (mut s2, mut s1) = (SimState::initial(&two), SimState::initial(&one));
        for _ in 0..50 {
            let dt = cfl_dt(&s2, &two).unwrap();
            s2 = step(&s2, &two, dt).unwrap().0;
            s1 = step(&s1, &one, dt).unwrap().0;
        }
        let gap = s2.rho().values().iter().zip(s1.rho1.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(gap <= 1e-12, "{gap}");
    }
}

#[test]
fn mirror_symmetry_survives_a_thousand_steps() {
    let g = Grid::new(1, 128, 4.0).unwrap();
    let n = g.cells();
    let mut v = bumps(g, &[0.8, 0.8], &[1.3, 2.7]).into_values();
    for i in 0..n / 2 {
        v[n - 1 - i] = v[i];
    }
    let rho = Field::new(g, v).unwrap();
    for e in [EnergyPair::power(2.0).unwrap(), EnergyPair::entropy()] {
        let mut cfg = SimConfig::new(e, InitialData::single(rho.clone()));
        cfg.gamma = 1e-3;
        cfg.sources = SourceModel::Homeostatic {
            g1: 1.0,
            p_h: 2.0,
            d1: 0.2,
            d2: 0.1,
        };
        let mut s = SimState::initial(&cfg);
        for _ in 0..1000 {
            let dt = cfl_dt(&s, &cfg).unwrap();
            s = step(&s, &cfg, dt).unwrap().0;
        }
        for f in [&s.rho1, &s.rho2, &s.n] {
            let v = f.values();
            let asym = (0..n).map(|i| (v[i] - v[n - 1 - i]).abs()).fold(0.0, f64::max);
            assert!(asym <= 1e-12, "{asym}");
        }
    }
}

#[test]
fn replay_is_bitwise_identical() {
    let mut cfg = config(EnergyPair::power(2.0).unwrap(), 0.8, 0.3, true, true);
    cfg.t_end = 0.05;
    cfg.snapshot_every = 0.01;
    let (a, b) = (run(&cfg).unwrap(), run(&cfg).unwrap());
    assert_eq!(a.ledger, b.ledger);
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        for (f, g) in [(&x.rho1, &y.rho1), (&x.rho2, &y.rho2), (&x.n, &y.n)] {
            assert!(f.values().iter().zip(g.values()).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
    }
}
