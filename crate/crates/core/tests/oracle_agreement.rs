//! Closed-form operations against brute-force grid evaluations.

use iwrr::experiments::{packetized_token_bucket, run_fixed_experiment, ExperimentConfig, StaircaseBound};
use iwrr::oracle::{grid_convolution, grid_hdev, grid_pseudo_inverse, Grid};
use iwrr::service::{FlowSpec, SystemSpec};
use iwrr::{Curve, Error, Rat};
use proptest::prelude::*;

/// Random UPP curve with integer breakpoints, nondecreasing, starting at 0.
fn upp_curve() -> impl Strategy<Value = Curve> {
    (prop::collection::vec((1i128..=4, 0i128..=3), 1..=5), 0i128..=3).prop_map(|(steps, extra)| {
        let mut pts = vec![(Rat::ZERO, Rat::ZERO)];
        let (mut x, mut y) = (0, 0);
        for (dx, dy) in steps {
            x += dx;
            y += dy;
            pts.push((Rat::int(x), Rat::int(y)));
        }
        // the last segment is the period; make sure it rises
        let last = pts.len() - 1;
        let (px, py) = pts[last - 1];
        pts[last].1 = pts[last].1.max(py) + Rat::int(extra + 1);
        let period = pts[last].0 - px;
        let increment = pts[last].1 - py;
        Curve::from_points(&pts, period, increment).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn smoothing_matches_grid_convolution(f in upp_curve()) {
        let grid = Grid::new(Rat::new(1, 4), Rat::int(30)).unwrap();
        let exact = f.convolve_unit_rate();
        for (x, v) in grid_convolution(&Curve::unit_rate(), &f, &grid) {
            prop_assert_eq!(v, exact.value_at(x), "at {}", x);
        }
    }

    #[test]
    fn pseudo_inverse_matches_grid(f in upp_curve()) {
        let grid = Grid::new(Rat::new(1, 8), Rat::int(60)).unwrap();
        let inv = f.lower_pseudo_inverse().unwrap();
        let top = f.value_at(Rat::int(50));
        let ys: Vec<Rat> = (0..=40).map(|k| top * Rat::new(k, 40)).collect();
        for (y, x) in ys.iter().zip(grid_pseudo_inverse(&f, &grid, &ys)) {
            let x = x.expect("grid reaches the level");
            let exact = inv.value_at(*y);
            prop_assert!(exact <= x && x - grid.step < exact, "f^-1({}) = {}, grid {}", y, exact, x);
        }
    }

    #[test]
    fn deviation_matches_grid(rate in 0i128..=3, burst in 0i128..=6, service in 1i128..=4, latency in 0i128..=5) {
        let alpha = Curve::token_bucket(Rat::int(rate), Rat::int(burst));
        let beta = Curve::rate_latency(Rat::int(service), Rat::int(latency));
        let grid = Grid::new(Rat::new(1, 4), Rat::int(120)).unwrap();
        match alpha.horizontal_deviation(&beta) {
            Ok(d) => {
                let est = grid_hdev(&alpha, &beta, &grid).unwrap();
                prop_assert!(d.value <= est && est - grid.step < d.value, "exact {}, grid {}", d.value, est);
            }
            Err(Error::Unbounded) => prop_assert!(rate > service),
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }

    #[test]
    fn staircase_fast_path_matches_general_deviation(
        weights in prop::collection::vec(1u64..=8, 1..=4),
        l in 64i128..=1522,
        rate_frac in 0i128..=10,
        burst in (1i128..=80, 1i128..=4),
    ) {
        let l = Rat::int(8 * l);
        let flows = weights.iter().map(|&w| FlowSpec::fixed(w, l).unwrap()).collect();
        let sys = SystemSpec::unit_rate(flows).unwrap();
        let beta = sys.iwrr_service_curve(0).unwrap();
        let rate = beta.long_term_rate() * Rat::new(rate_frac, 10);
        let burst = Rat::new(burst.0, burst.1);
        let fast = StaircaseBound::new(&beta, l).unwrap().token_bucket(rate, burst).unwrap();
        let general = packetized_token_bucket(rate, burst * l, l).horizontal_deviation(&beta).unwrap().value;
        prop_assert_eq!(fast, general);
    }
}

#[test]
fn experiments_are_reproducible_per_seed() {
    let cfg = ExperimentConfig {
        samples: 25,
        ..ExperimentConfig::fixed_default()
    };
    let a = run_fixed_experiment(&cfg).unwrap();
    assert_eq!(a, run_fixed_experiment(&cfg).unwrap());
    let other = run_fixed_experiment(&ExperimentConfig {
        seed: cfg.seed + 1,
        ..cfg.clone()
    })
    .unwrap();
    assert_ne!(a.samples, other.samples);
    for s in &a.samples {
        assert!(s.iwrr_bound <= s.wrr_bound);
    }
}
