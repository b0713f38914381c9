use noonsim::circuit::{propagate_pump, DeviceTemplate, PhaseDrive, PumpField};
use noonsim::config::{parse_netlist, to_netlist};
use noonsim::fit::{fit_model, FitData, FitOptions, FringeModel};
use noonsim::fock::{
    apply_linear_map, beamsplitter_map, phase_shift, Channel, FockOccupation, LinearMap, ModeLabel,
    Path, QuantumState,
};
use noonsim::hom::{hom_probability_closed, hom_probability_numeric, BiphotonSpectrum};
use num_complex::Complex;
use proptest::prelude::*;

const LP: f64 = 1549.6;

fn modes() -> Vec<ModeLabel> {
    vec![
        ModeLabel::new(Path::A, Channel::Signal),
        ModeLabel::new(Path::B, Channel::Signal),
        ModeLabel::new(Path::A, Channel::Idler),
    ]
}

/// Lossless 3-mode map built from beamsplitters and phases.
fn network(rs: [f64; 3], phases: [f64; 3]) -> LinearMap<f64> {
    let m = modes();
    let diag = |p: [f64; 3]| {
        let mut mat = vec![Complex::new(0.0, 0.0); 9];
        for i in 0..3 {
            mat[i * 4] = Complex::from_polar(1.0, p[i]);
        }
        LinearMap::new(m.clone(), mat).unwrap()
    };
    let bs1 = beamsplitter_map(rs[0], (m[0], m[1])).unwrap();
    // Couples a signal and an idler label; fine for an abstract unitary.
    let s = rs[1].sqrt();
    let t = (1.0 - rs[1]).sqrt();
    let mut mat = vec![Complex::new(0.0, 0.0); 9];
    mat[0] = Complex::new(1.0, 0.0);
    mat[4] = Complex::new(s, 0.0);
    mat[5] = Complex::new(0.0, t);
    mat[7] = Complex::new(0.0, t);
    mat[8] = Complex::new(s, 0.0);
    let bs2 = LinearMap::new(m.clone(), mat).unwrap();
    let bs3 = beamsplitter_map(rs[2], (m[0], m[1])).unwrap();
    bs3.after(&diag(phases)).after(&bs2).after(&bs1)
}

fn state(amps: &[(u8, u8, u8, f64, f64)]) -> QuantumState<f64> {
    let m = modes();
    QuantumState::from_terms(amps.iter().map(|&(a, b, c, re, im)| {
        (
            FockOccupation::from_counts([(m[0], a), (m[1], b), (m[2], c)]).unwrap(),
            Complex::new(re, im),
        )
    }))
}

fn two_photon_state() -> impl Strategy<Value = QuantumState<f64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 6).prop_map(|c| {
        let occ = [(2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1)];
        let terms: Vec<_> = occ
            .iter()
            .zip(&c)
            .map(|(&(a, b, k), &(re, im))| (a, b, k, re, im))
            .collect();
        state(&terms)
    })
}

fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

fn angle() -> impl Strategy<Value = f64> {
    -7.0..7.0f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lossless_maps_are_unitary(r in prop::array::uniform3(unit()), p in prop::array::uniform3(angle()), s in two_photon_state()) {
        let m = network(r, p);
        prop_assert!(m.unitarity_error() < 1e-10);
        let out = apply_linear_map(&s, &m).unwrap();
        prop_assert!((out.norm_sqr() - s.norm_sqr()).abs() < 1e-10);
    }

    #[test]
    fn composition(r1 in prop::array::uniform3(unit()), p1 in prop::array::uniform3(angle()),
                   r2 in prop::array::uniform3(unit()), p2 in prop::array::uniform3(angle()),
                   s in two_photon_state()) {
        let (m1, m2) = (network(r1, p1), network(r2, p2));
        let stepwise = apply_linear_map(&apply_linear_map(&s, &m1).unwrap(), &m2).unwrap();
        let direct = apply_linear_map(&s, &m2.after(&m1)).unwrap();
        for (occ, amp) in stepwise.iter().chain(direct.iter()) {
            prop_assert!((stepwise.amplitude(occ) - direct.amplitude(occ)).norm() < 1e-10, "{occ}: {amp}");
        }
    }

    #[test]
    fn phase_linearity(a in angle(), b in angle(), s in two_photon_state()) {
        let mode = modes()[0];
        let twice = phase_shift(&phase_shift(&s, mode, a), mode, b);
        let once = phase_shift(&s, mode, a + b);
        for (occ, amp) in once.iter() {
            prop_assert!((twice.amplitude(occ) - *amp).norm() < 1e-14);
        }
        prop_assert_eq!(twice.len(), once.len());
    }

    #[test]
    fn pump_energy_conserved(r in unit(), phi in angle(), power in 0.1..100.0f64) {
        let mut t = DeviceTemplate::<f64>::ideal();
        t.coupler_reflectivity = r;
        t.phase = PhaseDrive::Radians(phi);
        let prop = propagate_pump(&t.build().unwrap(), &PumpField::single(LP, power).unwrap()).unwrap();
        prop_assert!((prop.transmission[0] + prop.transmission[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn loss_never_adds_power(loss in 0.0..10.0f64, extra in 0.0..5.0f64, phi in angle(), db in 0.0..10.0f64) {
        let pump = PumpField::single(LP, 15.0).unwrap();
        let mut t = DeviceTemplate::<f64>::ideal();
        t.phase = PhaseDrive::Radians(phi);
        t.loss_db_per_cm = loss;
        t.coupling_loss_db = db;
        let before = propagate_pump(&t.build().unwrap(), &pump).unwrap().transmission;
        t.loss_db_per_cm = loss + extra;
        let after = propagate_pump(&t.build().unwrap(), &pump).unwrap().transmission;
        for k in 0..2 {
            prop_assert!(after[k] <= before[k] * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn netlist_round_trip(r in 0.01..0.99f64, l in 0.5..20.0f64, loss in 0.0..8.0f64,
                          phi in angle(), db in 0.0..10.0f64, io in prop::bool::ANY) {
        let mut t = DeviceTemplate::<f64>::ideal();
        t.coupler_reflectivity = r;
        t.source_length_mm = l;
        t.loss_db_per_cm = loss;
        t.coupling_loss_db = db;
        t.io_sources = io;
        t.phase = PhaseDrive::Radians(phi);
        let c = t.build().unwrap();
        prop_assert_eq!(parse_netlist(&to_netlist(&c)).unwrap(), c);
    }

    #[test]
    fn hom_closed_form_is_even(x in -3000.0..3000.0f64, delta in 0.0..12.0f64, w in 0.05..2.0f64, v in 0.0..1.0f64) {
        let p = hom_probability_closed(x, delta, w, LP, v);
        prop_assert_eq!(p, hom_probability_closed(-x, delta, w, LP, v));
        prop_assert!((p - 0.5).abs() <= v / 2.0 + 1e-15);
    }

    #[test]
    fn hom_numeric_is_even(x in -1500.0..1500.0f64, delta in 0.0..12.0f64, w in 0.2..1.6f64) {
        let spec = BiphotonSpectrum::two_lobe(LP, delta, w, 64).unwrap();
        let a = hom_probability_numeric(&spec, x, 0.5).unwrap();
        let b = hom_probability_numeric(&spec, -x, 0.5).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!((a - 0.5).abs() <= 0.5 + 1e-12);
    }

    #[test]
    fn fit_scale_equivariance(k in 0.01..1000.0f64, a in 50.0..500.0f64, phi0 in -1.0..1.0f64, c in 0.0..20.0f64) {
        let xs: Vec<f64> = (0..32).map(|i| i as f64 * std::f64::consts::PI / 16.0).collect();
        let jitter = |i: usize| ((i * 7919) % 13) as f64 / 13.0 - 0.5;
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| a * (x - phi0).sin().powi(2) + c + 3.0 * jitter(i))
            .collect();
        let sig: Vec<f64> = ys.iter().map(|y| y.abs().sqrt().max(1.0)).collect();
        let m = FringeModel::SinSq;
        let base = fit_model(&FitData::new(xs.clone(), ys.clone(), sig.clone()).unwrap(), m, &FitOptions::default()).unwrap();
        let scaled = FitData::new(xs, ys.iter().map(|y| y * k).collect(), sig.iter().map(|s| s * k).collect()).unwrap();
        let other = fit_model(&scaled, m, &FitOptions::default()).unwrap();
        prop_assert!((base.visibility - other.visibility).abs() < 1e-9);
        prop_assert!((base.param("phi0") - other.param("phi0")).abs() < 1e-9);
    }
}

#[test]
fn balanced_splitter_suppresses_coincidence() {
    let m = modes();
    let bs = beamsplitter_map(0.5, (m[0], m[1])).unwrap();
    let out = apply_linear_map(&state(&[(1, 1, 0, 1.0, 0.0)]), &bs).unwrap();
    let occ = FockOccupation::from_counts([(m[0], 1), (m[1], 1)]).unwrap();
    assert!(out.amplitude(&occ).norm() < 1e-12);
}

#[test]
fn eq4_fit_is_scale_free() {
    let xs: Vec<f64> = (0..64).map(|i| i as f64 * std::f64::consts::TAU / 64.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| 300.0 * (1.158 * x.cos() - 0.158).powi(2) + ((i % 5) as f64 - 2.0))
        .collect();
    let sig: Vec<f64> = ys.iter().map(|y| y.abs().sqrt().max(1.0)).collect();
    let m = FringeModel::Eq4Asym(noonsim::fit::Branch::A);
    let a = fit_model(&FitData::new(xs.clone(), ys.clone(), sig.clone()).unwrap(), m, &FitOptions::default()).unwrap();
    let b = fit_model(
        &FitData::new(xs, ys.iter().map(|y| y * 37.0).collect(), sig.iter().map(|s| s * 37.0).collect()).unwrap(),
        m,
        &FitOptions::default(),
    )
    .unwrap();
    assert!((a.param("g") - b.param("g")).abs() < 1e-9);
    assert!((a.visibility - b.visibility).abs() < 1e-9);
}
