//! Property-based checks of structural invariants.

use std::io::Cursor;

use proptest::collection::vec;
use proptest::prelude::*;
use specdet::maxent::{kl_divergence, total_variation_bound, Grid, GridDensity};
use specdet::oracle::{self, DenseSpectrum};
use specdet::synth;
use specdet::CsrMatrix64;

fn banded_matrix() -> impl Strategy<Value = CsrMatrix64> {
    (2usize..40, 1usize..4, 0u64..1000).prop_map(|(n, hb, seed)| {
        synth::banded_spd::<f64>(n, hb.min(n - 1), 1.0, 5.0, 0.8, seed)
    })
}

fn normalized_density(grid: &Grid<f64>, raw: Vec<f64>) -> GridDensity<f64> {
    let mass = grid.integrate(&raw);
    let values = raw.into_iter().map(|v| v / mass).collect();
    GridDensity::new(grid.clone(), values).unwrap()
}

proptest! {
    #[test]
    fn matvec_is_symmetric_as_a_bilinear_form(a in banded_matrix(), sx in 0u64..500, sy in 0u64..500) {
        let n = a.n();
        let x: Vec<f64> = synth::gaussian_dense::<f64>(n, 1, sx).as_slice().to_vec();
        let y: Vec<f64> = synth::gaussian_dense::<f64>(n, 1, 1000 + sy).as_slice().to_vec();
        let ay = a.matvec(&y).unwrap();
        let ax = a.matvec(&x).unwrap();
        let xay: f64 = x.iter().zip(&ay).map(|(u, v)| u * v).sum();
        let yax: f64 = y.iter().zip(&ax).map(|(u, v)| u * v).sum();
        let scale = xay.abs().max(1.0);
        prop_assert!((xay - yax).abs() <= 1e-9 * scale);
    }

    #[test]
    fn gershgorin_bound_dominates_the_spectrum(a in banded_matrix()) {
        let bound = a.gershgorin_bound().value;
        let spectrum = oracle::exact_logdet_csr(&a).unwrap();
        prop_assert!(spectrum.lambda_max() <= bound + 1e-9 * bound.abs());
        let max_diag = (0..a.n())
            .map(|i| a.entry(i, i).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(bound >= max_diag);
    }

    #[test]
    fn matrix_market_round_trip_is_exact(a in banded_matrix()) {
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let b = CsrMatrix64::parse_matrix_market(Cursor::new(buf)).unwrap();
        prop_assert_eq!(a.n(), b.n());
        let ta: Vec<_> = a.triplets().collect();
        let tb: Vec<_> = b.triplets().collect();
        prop_assert_eq!(ta, tb);
    }

    #[test]
    fn kl_is_nonnegative_and_pinsker_bounds_tv(
        p_raw in vec(0.01f64..10.0, 100),
        q_raw in vec(0.01f64..10.0, 100),
    ) {
        let grid = Grid::new(1e-2).unwrap();
        let p = normalized_density(&grid, p_raw);
        let q = normalized_density(&grid, q_raw);
        let kl = kl_divergence(&p, &q).unwrap();
        prop_assert!(kl >= -1e-12);
        let tv = p.total_variation_distance(&q).unwrap();
        let bound = total_variation_bound(kl.max(0.0)).unwrap();
        prop_assert!(tv <= bound + 1e-12, "tv {} exceeds Pinsker bound {}", tv, bound);
    }

    #[test]
    fn exact_moments_of_a_unit_spectrum_are_nonincreasing(
        eigenvalues in vec(0.05f64..0.999, 1..50),
    ) {
        let spectrum = DenseSpectrum::from_eigenvalues(eigenvalues).unwrap();
        let moments = oracle::exact_moments(&spectrum, 1.0, 8).unwrap();
        for pair in moments.windows(2) {
            prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-15));
        }
        for &m in &moments {
            prop_assert!(m > 0.0 && m <= 1.0);
        }
    }
}
