use fluxonium_relax::analysis::{bin_average, T1Dataset, T1Record};
use fluxonium_relax::dynamics::{evolve, log_spaced, RateMatrix};
use fluxonium_relax::loss::build_mechanism_table;
use fluxonium_relax::stats::welch_t_test;
use fluxonium_relax::{diagonalize, Environment, FluxBias, FluxoniumParams, Mechanism, ResonatorParams};
use nalgebra::DMatrix;
use proptest::prelude::*;

const H: f64 = 6.626_070_15e-34;
const KB: f64 = 1.380_649e-23;

fn params() -> impl Strategy<Value = FluxoniumParams> {
    (2.0e9..6.0e9, 0.8e9..1.5e9, 0.3e9..1.0e9).prop_map(|(ej, ec, el)| FluxoniumParams::new(ej, ec, el).unwrap())
}

/// Detailed-balance generator from random energies and symmetric couplings.
fn generator() -> impl Strategy<Value = (Vec<f64>, DMatrix<f64>, f64)> {
    (
        prop::collection::vec(0.1e9..8.0e9, 5),
        prop::collection::vec(1e2..1e5, 15),
        0.02..0.2f64,
    )
        .prop_map(|(gaps, couplings, t)| {
            let mut energies = vec![0.0];
            for g in gaps {
                energies.push(energies.last().unwrap() + g);
            }
            let mut rates = DMatrix::zeros(6, 6);
            let mut k = 0;
            for i in 0..6 {
                for j in (i + 1)..6 {
                    let down = couplings[k];
                    k += 1;
                    rates[(j, i)] = down;
                    rates[(i, j)] = down * (-H * (energies[j] - energies[i]) / (KB * t)).exp();
                }
            }
            (energies, rates, t)
        })
}

fn boltzmann(energies: &[f64], t: f64) -> Vec<f64> {
    let w: Vec<f64> = energies.iter().map(|e| (-H * e / (KB * t)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectrum_is_periodic_and_mirror_symmetric(p in params(), phi in 0.0..1.0f64) {
        let e = diagonalize(p, FluxBias(phi), 5).unwrap().energies;
        for other in [phi + 1.0, -phi, 1.0 - phi] {
            let f = diagonalize(p, FluxBias(other), 5).unwrap().energies;
            for (a, b) in e.iter().zip(&f) {
                prop_assert!(((a - b) / (e[1] - e[0])).abs() < 1e-8, "{a} vs {b} at {other}");
            }
        }
    }

    #[test]
    fn rates_obey_detailed_balance_and_flux_noise_symmetry(p in params(), phi in 0.05..0.45f64) {
        let spec = diagonalize(p, FluxBias(phi), 5).unwrap();
        let res = ResonatorParams::new(7.1e9, 120e6, 0.3e6).unwrap();
        let env = Environment { a_phi: 1e-11, x_qp: 1e-7, ..Environment::default() };
        for m in Mechanism::ALL {
            let table = build_mechanism_table(&spec, &res, &env, m).unwrap();
            let t = m.temperature(&env);
            for i in 0..5 {
                for j in (i + 1)..5 {
                    let (down, up) = (table.rates[(j, i)], table.rates[(i, j)]);
                    prop_assert!(down >= 0.0 && up >= 0.0);
                    if m == Mechanism::FluxNoise {
                        prop_assert_eq!(down, up);
                    } else if down > 1e-300 && up > 1e-300 {
                        let ratio = (H * (spec.energies[j] - spec.energies[i]) / (KB * t)).exp();
                        prop_assert!((down / up / ratio - 1.0).abs() < 1e-9, "{m:?} {i}-{j}");
                    }
                }
            }
        }
    }

    #[test]
    fn generator_conserves_probability((energies, rates, t) in generator()) {
        let rm = RateMatrix::from_rates(&rates).unwrap();
        let max_rate = rates.amax();
        prop_assert!(rm.column_sum_defect() <= 1e-12 * max_rate);

        let re: Vec<f64> = rm.eigenvalues.iter().map(|z| z.re).collect();
        prop_assert!(re[0].abs() <= 1e-9 * max_rate);
        prop_assert!(re.iter().all(|&x| x <= 1e-9 * max_rate));
        prop_assert!(rm.eigenvalues.iter().all(|z| z.im.abs() <= 1e-9 * max_rate));

        for (a, b) in rm.stationary().iter().zip(boltzmann(&energies, t)) {
            prop_assert!((a - b).abs() < 1e-6);
        }

        let mut p0 = vec![0.0; 6];
        p0[1] = 1.0;
        let times = log_spaced(1e-8, 1e-1, 40);
        let trace = evolve(&rm, &p0, &times).unwrap();
        for row in trace.populations.row_iter() {
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&x| x > -1e-9));
        }
    }

    #[test]
    fn binning_is_idempotent(
        freqs in prop::collection::vec(1e8..2e9f64, 1..60),
        t1s in prop::collection::vec(1e-5..1e-3f64, 60),
        width in 1e6..5e7f64,
    ) {
        let records = freqs
            .iter()
            .zip(&t1s)
            .enumerate()
            .map(|(k, (&f, &t1))| T1Record::new(k as f64 / 200.0, t1).with_frequency(f))
            .collect();
        let ds = T1Dataset { qubit_id: "X".into(), records };
        let once = bin_average(&ds, width).unwrap();
        let twice = bin_average(&once, width).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert!(once.len() <= ds.len());
        let total: usize = once.records.iter().map(|r| r.n_binned).sum();
        prop_assert_eq!(total, ds.len());
    }

    #[test]
    fn welch_respects_affine_maps_and_swaps(
        a in prop::collection::vec(-10.0..10.0f64, 2..30),
        b in prop::collection::vec(-10.0..10.0f64, 2..30),
        shift in -100.0..100.0f64,
        scale in 0.01..100.0f64,
    ) {
        prop_assume!(a.iter().any(|&x| x != a[0]) || b.iter().any(|&x| x != b[0]));
        let base = welch_t_test(&a, &b, 0.05).unwrap();
        let (n1, n2) = (a.len() as f64, b.len() as f64);
        prop_assert!(base.nu >= n1.min(n2) - 1.0 - 1e-9 && base.nu <= n1 + n2 - 2.0 + 1e-9);

        let swapped = welch_t_test(&b, &a, 0.05).unwrap();
        prop_assert_eq!(swapped.t0, -base.t0);
        prop_assert_eq!(swapped.nu, base.nu);

        let map = |xs: &[f64]| xs.iter().map(|x| scale * x + shift).collect::<Vec<_>>();
        let mapped = welch_t_test(&map(&a), &map(&b), 0.05).unwrap();
        prop_assert!((mapped.p_value - base.p_value).abs() < 1e-9);
        prop_assert!((mapped.nu - base.nu).abs() <= 1e-9 * base.nu);
    }
}
