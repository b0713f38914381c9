use noonsim::circuit::{DeviceTemplate, PumpField};
use noonsim::counts::{point_rng, poisson};
use noonsim::experiment::{pattern_rates, phase_grid};
use noonsim::fit::{fit_model, FitData, FitOptions, FringeModel};
use noonsim::fock::{apply_linear_map, Channel, FockOccupation, LinearMap, ModeLabel, Path, QuantumState};
use noonsim::hom::{beat_period, hom_probability_closed, hom_probability_numeric, BiphotonSpectrum};
use noonsim::pairgen::PairProcess;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex<f64>;

fn permanent(m: &[Vec<C>]) -> C {
    let n = m.len();
    if n == 0 {
        return C::new(1.0, 0.0);
    }
    // Ryser's formula.
    let mut total = C::new(0.0, 0.0);
    for mask in 1u32..(1 << n) {
        let mut prod = C::new(1.0, 0.0);
        for row in m {
            let s: C = (0..n).filter(|j| mask & (1 << j) != 0).map(|j| row[j]).sum();
            prod *= s;
        }
        let sign = if (n - mask.count_ones() as usize) % 2 == 0 { 1.0 } else { -1.0 };
        total += prod * sign;
    }
    total
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).map(f64::from).product()
}

fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<C>> {
    // Gram-Schmidt on a random complex matrix.
    let mut cols: Vec<Vec<C>> = Vec::new();
    while cols.len() < n {
        let mut v: Vec<C> = (0..n)
            .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        for u in &cols {
            let proj: C = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.iter().map(|z| z / norm).collect());
        }
    }
    (0..n).map(|r| (0..n).map(|c| cols[c][r]).collect()).collect()
}

/// `⟨out|U|in⟩ = Perm(U[out rows, in cols]) / √(∏ in! ∏ out!)`.
fn transition(u: &[Vec<C>], input: &[u8], output: &[u8]) -> C {
    let rows: Vec<usize> = output.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize)).collect();
    let cols: Vec<usize> = input.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k as usize)).collect();
    let sub: Vec<Vec<C>> = rows.iter().map(|&r| cols.iter().map(|&c| u[r][c]).collect()).collect();
    let norm: f64 = input.iter().chain(output).map(|&k| factorial(k)).product();
    permanent(&sub) / norm.sqrt()
}

fn patterns(modes: usize, photons: u8) -> Vec<Vec<u8>> {
    if modes == 1 {
        return vec![vec![photons]];
    }
    (0..=photons)
        .flat_map(|k| {
            patterns(modes - 1, photons - k).into_iter().map(move |mut rest| {
                rest.insert(0, k);
                rest
            })
        })
        .collect()
}

#[test]
fn linear_map_matches_permanents() {
    let modes = vec![
        ModeLabel::new(Path::A, Channel::Signal),
        ModeLabel::new(Path::B, Channel::Signal),
        ModeLabel::new(Path::A, Channel::Idler),
        ModeLabel::new(Path::B, Channel::Idler),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let u = random_unitary(4, &mut rng);
        let map = LinearMap::new(modes.clone(), u.iter().flatten().copied().collect()).unwrap();
        for photons in 1..=3u8 {
            for input in patterns(4, photons) {
                let occ = |p: &[u8]| FockOccupation::from_counts(modes.iter().copied().zip(p.iter().copied())).unwrap();
                let out = apply_linear_map(&QuantumState::basis(occ(&input)), &map).unwrap();
                for output in patterns(4, photons) {
                    let expected = transition(&u, &input, &output);
                    let got = out.amplitude(&occ(&output));
                    assert!((expected - got).norm() < 1e-12, "{input:?} -> {output:?}: {expected} vs {got}");
                }
            }
        }
    }
}

#[test]
fn bunch_fringes_follow_spurious_pair_model() {
    let ratios = [0.025, 0.021];
    let circuit = DeviceTemplate::ideal().with_spurious_ratios(ratios).unwrap().build().unwrap();
    let phases = phase_grid(0.0, std::f64::consts::TAU, 64).unwrap();
    for process in [PairProcess::non_degenerate(6.4).unwrap(), PairProcess::degenerate()] {
        let pump = match process.kind {
            noonsim::pairgen::ProcessKind::NonDegenerate => PumpField::single(1549.6, 15.0).unwrap(),
            noonsim::pairgen::ProcessKind::Degenerate => PumpField::dual([1538.4, 1560.8], [7.5, 7.5]).unwrap(),
        };
        let (rel, _) = pattern_rates(&circuit, &pump, &process, &phases).unwrap();
        for (k, sign) in [(0usize, -1.0), (1, 1.0)] {
            let g: f64 = ratios[k].sqrt();
            let oracle: Vec<f64> = phases.iter().map(|p| ((1.0 + g) * p.cos() + sign * g).powi(2)).collect();
            let sim: Vec<f64> = rel.iter().map(|r| if k == 0 { r.p_bunch_a } else { r.p_bunch_b }).collect();
            let (so, ss) = (oracle.iter().sum::<f64>(), sim.iter().sum::<f64>());
            for (o, s) in oracle.iter().zip(&sim) {
                assert!((o / so - s / ss).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn hom_closed_form_matches_spectral_sum() {
    let lp: f64 = 1549.6;
    let w = 0.8;
    for delta in [0.0, 3.2, 6.4, 9.6] {
        let period = beat_period(delta, lp);
        let span = if period.is_finite() { 3.0 * period } else { 1200.0 };
        let spec = BiphotonSpectrum::two_lobe(lp, delta, w, 2048).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..512 {
            let x = -span + 2.0 * span * i as f64 / 511.0;
            let closed = hom_probability_closed(x, delta, w, lp, 1.0);
            let numeric = hom_probability_numeric(&spec, x, 0.5).unwrap();
            worst = worst.max((closed - numeric).abs());
        }
        assert!(worst < 1e-6, "δ = {delta}: {worst}");
    }
}

#[test]
fn poisson_dispersion() {
    for (mean, seed) in [(100.0, 1u64), (1e6, 2)] {
        let mut rng = point_rng(seed, 0);
        let draws: Vec<f64> = (0..10_000).map(|_| poisson(&mut rng, mean).unwrap() as f64).collect();
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        let z = (m - mean).abs() / (mean / draws.len() as f64).sqrt();
        assert!(z < 5.0, "mean {m} for λ = {mean}");
        let d = var / m;
        assert!((0.9..=1.1).contains(&d), "dispersion {d} for λ = {mean}");
    }
}

#[test]
fn visibility_interval_coverage() {
    let (a, c) = (4000.0, 300.0);
    let truth = a / (a + c);
    let xs: Vec<f64> = (0..64).map(|i| i as f64 * std::f64::consts::TAU / 64.0).collect();
    let mut covered = 0;
    let replicas = 400;
    for r in 0..replicas {
        let mut rng = point_rng(2024, r);
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| poisson(&mut rng, a * x.sin().powi(2) + c).unwrap() as f64)
            .collect();
        let data = FitData::poisson(xs.clone(), ys).unwrap();
        let fit = fit_model(&data, FringeModel::SinSq, &FitOptions::default()).unwrap();
        if (fit.visibility - truth).abs() <= fit.visibility_sigma {
            covered += 1;
        }
    }
    let frac = covered as f64 / replicas as f64;
    println!("coverage {frac}");
    assert!((0.60..=0.75).contains(&frac), "coverage {frac}");
}
