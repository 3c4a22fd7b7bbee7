use atomlens_core::correlation::*;
use atomlens_core::rng::substream;
use proptest::prelude::*;

/// Bloch equations of the driven, damped two-level atom in the rotating
/// frame: ρ_eg = x + iy, w = ρ_ee.
#[derive(Clone, Copy)]
struct Bloch {
    omega: f64,
    gamma: f64,
    delta: f64,
}

impl Bloch {
    fn of(d: &TwoLevelDrive) -> Self {
        Self { omega: d.omega(), gamma: d.gamma(), delta: d.delta() }
    }

    fn rhs(&self, [x, y, w]: [f64; 3]) -> [f64; 3] {
        let (o, g, d) = (self.omega, self.gamma, self.delta);
        [-0.5 * g * x - d * y, d * x - 0.5 * g * y - 0.5 * o * (1.0 - 2.0 * w), -o * y - g * w]
    }

    fn rk4(&self, s: [f64; 3], h: f64) -> [f64; 3] {
        let add = |a: [f64; 3], b: [f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
        let k1 = self.rhs(s);
        let k2 = self.rhs(add(s, k1, 0.5 * h));
        let k3 = self.rhs(add(s, k2, 0.5 * h));
        let k4 = self.rhs(add(s, k3, h));
        core::array::from_fn(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
    }

    /// Steady-state ρ_ee by Cramer's rule on the stationary equations.
    fn steady_w(&self) -> f64 {
        let (o, g, d) = (self.omega, self.gamma, self.delta);
        let m = [[-0.5 * g, -d, 0.0], [d, -0.5 * g, o], [0.0, -o, -g]];
        let b = [0.0, 0.5 * o, 0.0];
        let det = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let mut mw = m;
        for r in 0..3 {
            mw[r][2] = b[r];
        }
        det(mw) / det(m)
    }

    /// g²(τ) = ρ_ee(τ | ground at 0) / ρ_ee(∞) on a uniform grid.
    fn g2(&self, step: f64, samples: usize, every: usize) -> Vec<(f64, f64)> {
        let ss = self.steady_w();
        let mut s = [0.0; 3];
        let mut out = vec![(0.0, 0.0)];
        for k in 1..=samples * every {
            s = self.rk4(s, step);
            if k % every == 0 {
                out.push((k as f64 * step, s[2] / ss));
            }
        }
        out
    }
}

fn max_deviation(drive: &TwoLevelDrive) -> f64 {
    let oracle = Bloch::of(drive).g2(2e-12, 2000, 50);
    let taus: Vec<f64> = oracle.iter().map(|p| p.0).collect();
    let model = g2_closed_form(drive, &taus).unwrap();
    oracle.iter().zip(&model).map(|(o, m)| (o.1 - m).abs()).fold(0.0, f64::max)
}

#[test]
fn closed_form_matches_bloch_integration_at_experiment_drive() {
    let d = max_deviation(&TwoLevelDrive::experiment());
    assert!(d < 1e-6, "{d}");
}

#[test]
fn closed_form_matches_bloch_integration_off_resonance_and_weak_drive() {
    let base = TwoLevelDrive::experiment();
    for (rabi, det) in [(62.0, 15.0), (62.0, -40.0), (1.0, 0.0), (1.4741, 0.0), (3.0, 2.0), (0.3, 8.0)] {
        let d = max_deviation(&TwoLevelDrive { rabi_mhz: rabi, detuning_mhz: det, ..base });
        assert!(d < 1e-6, "Ω/2π = {rabi}, Δ/2π = {det}: {d}");
    }
}

#[test]
fn first_maximum_near_eight_nanoseconds() {
    let taus: Vec<f64> = (0..=4000).map(|k| k as f64 * 5e-12).collect();
    let g = g2_closed_form(&TwoLevelDrive::experiment(), &taus).unwrap();
    let k = (1..g.len() - 1).find(|&k| g[k] > g[k - 1] && g[k] >= g[k + 1]).unwrap();
    let t = taus[k];
    // half a generalized Rabi period, 1/(2·62 MHz) ≈ 8.06 ns
    assert!((t - 8.06e-9).abs() < 0.2e-9, "{t}");
    assert_eq!(g[0], 0.0);
}

#[test]
fn long_delays_decorrelate() {
    let d = TwoLevelDrive::experiment();
    let lifetime = 1.0 / d.gamma();
    let taus: Vec<f64> = (0..50).map(|k| (20.0 + k as f64) * lifetime).collect();
    for g in g2_closed_form(&d, &taus).unwrap() {
        assert!((g - 1.0).abs() < 1e-6);
    }
}

#[test]
fn waiting_time_density_matches_no_jump_evolution() {
    // i ċ = H c with H = [[0, Ω/2], [Ω/2, −Δ − iΓ/2]], c(0) = ground.
    for det in [0.0, 12.0] {
        let drive = TwoLevelDrive { detuning_mhz: det, ..TwoLevelDrive::experiment() };
        let wt = WaitingTime::new(&drive).unwrap();
        let (o, g, d) = (drive.omega(), drive.gamma(), drive.delta());
        // c = (gr + i gi, er + i ei)
        let rhs = |c: [f64; 4]| {
            let [gr, gi, er, ei] = c;
            // ċ_g = −i Ω/2 c_e ; ċ_e = −i Ω/2 c_g + (iΔ − Γ/2) c_e
            [
                0.5 * o * ei,
                -0.5 * o * er,
                0.5 * o * gi - d * ei - 0.5 * g * er,
                -0.5 * o * gr + d * er - 0.5 * g * ei,
            ]
        };
        let h = 2e-12;
        let mut c = [1.0, 0.0, 0.0, 0.0];
        let mut peak: f64 = 0.0;
        let mut worst: f64 = 0.0;
        for k in 1..=100_000 {
            let add = |a: [f64; 4], b: [f64; 4], s: f64| core::array::from_fn::<f64, 4, _>(|i| a[i] + s * b[i]);
            let k1 = rhs(c);
            let k2 = rhs(add(c, k1, 0.5 * h));
            let k3 = rhs(add(c, k2, 0.5 * h));
            let k4 = rhs(add(c, k3, h));
            c = core::array::from_fn(|i| c[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
            if k % 100 == 0 {
                let t = k as f64 * h;
                let w = g * (c[2] * c[2] + c[3] * c[3]);
                peak = peak.max(w);
                worst = worst.max((w - wt.density(t)).abs());
                let survival = c.iter().map(|x| x * x).sum::<f64>();
                assert!((survival - wt.survival(t)).abs() < 1e-9);
            }
        }
        assert!(worst < 1e-8 * peak, "Δ = {det}: {worst} vs {peak}");
        // mean waiting time is the inverse emission rate
        assert!((wt.mean() * drive.emission_rate() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn waiting_time_samples_follow_the_distribution() {
    let wt = WaitingTime::new(&TwoLevelDrive::experiment()).unwrap();
    let mut rng = substream(7, 3);
    let n = 20_000;
    let mut xs: Vec<f64> = (0..n).map(|_| wt.sample(&mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = wt.cdf(x);
            (c - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - c).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value of the Kolmogorov-Smirnov statistic
    assert!(ks < 1.63 / (n as f64).sqrt(), "{ks}");
}

#[test]
fn undriven_atom_without_background_is_silent() {
    let d = TwoLevelDrive { rabi_mhz: 0.0, ..TwoLevelDrive::experiment() };
    let (a, b) = simulate_streams(&d, 1e-3, 1).unwrap();
    assert!(a.is_empty() && b.is_empty());
    let h = histogram_g2(&a, &b, 1e-9, 20e-9).unwrap();
    assert!(h.insufficient_data);
    assert!(h.values.iter().all(|&v| v == 0.0));
    assert!(simulate_streams(&d, 0.0, 1).is_err());
}

#[test]
fn background_only_streams_are_flat() {
    let d = TwoLevelDrive { rabi_mhz: 0.0, background_rate: 2e5, ..TwoLevelDrive::experiment() };
    let (a, b) = simulate_streams(&d, 20.0, 11).unwrap();
    let h = histogram_g2(&a, &b, 2e-9, 40e-9).unwrap();
    let chi2 = h
        .counts
        .iter()
        .map(|&c| (c as f64 - h.normalization).powi(2) / h.normalization)
        .sum::<f64>();
    let dof = h.counts.len() as f64;
    assert!(chi2 < dof + 4.0 * (2.0 * dof).sqrt(), "{chi2}");
    for (v, s) in h.values.iter().zip(&h.sigma) {
        assert!((v - 1.0).abs() < 4.0 * s);
    }
}

#[test]
fn identical_streams_pile_up_at_zero_delay() {
    let d = TwoLevelDrive { rabi_mhz: 0.0, background_rate: 1e4, ..TwoLevelDrive::experiment() };
    let (a, _) = simulate_streams(&d, 1.0, 5).unwrap();
    let h = histogram_g2(&a, &a, 1e-9, 10e-9).unwrap();
    let zero = h.values[h.values.len() / 2];
    assert!(zero > 1e3, "{zero}");
}

#[test]
fn simulation_reproduces_closed_form() {
    let drive = TwoLevelDrive::experiment();
    let (a, b) = simulate_streams(&drive, 2e-3, 2008).unwrap();
    let h = histogram_g2(&a, &b, 1e-9, 40e-9).unwrap();
    let expected = expected_bin_values(&h, &drive).unwrap();
    let outside = h
        .counts
        .iter()
        .zip(&expected)
        .filter(|(&c, &g)| {
            let mu = g * h.normalization;
            mu > 0.0 && (c as f64 - mu).abs() > 3.0 * mu.sqrt()
        })
        .count();
    assert!(outside <= 2, "{outside} bins beyond 3σ");
    let chi = chi_squared(&h, &drive).unwrap();
    assert!(chi.reduced() > 0.6 && chi.reduced() < 1.5, "{}", chi.reduced());
}

#[test]
fn background_subtraction_recovers_antibunching() {
    let drive = TwoLevelDrive { background_rate: 2e5, detection_efficiency: 0.05, ..TwoLevelDrive::experiment() };
    let (a, b) = simulate_streams(&drive, 0.2, 3).unwrap();
    let h = histogram_g2(&a, &b, 2e-9, 40e-9).unwrap();
    let raw = h.values[h.values.len() / 2];
    let (r1, r2) = drive.signal_fractions();
    let clean = h.background_subtracted(r1, r2).unwrap();
    let zero = clean.values[clean.values.len() / 2];
    assert!(raw > 0.1, "background fills the dip: {raw}");
    assert!(zero < 0.1 + 2.0 * clean.sigma[clean.sigma.len() / 2], "{zero}");
    let chi = chi_squared(&h, &drive).unwrap();
    assert!(chi.reduced() < 1.6, "{}", chi.reduced());
}

#[test]
fn streams_are_deterministic() {
    let d = TwoLevelDrive { background_rate: 1e3, ..TwoLevelDrive::experiment() };
    let a = simulate_streams(&d, 1e-4, 42).unwrap();
    let b = simulate_streams(&d, 1e-4, 42).unwrap();
    assert_eq!(a, b);
    let c = simulate_streams(&d, 1e-4, 43).unwrap();
    assert_ne!(a, c);
}

#[test]
fn invalid_streams_are_rejected() {
    assert!(PhotonStream::new("x", vec![0.2, 0.1], 1.0).is_err());
    assert!(PhotonStream::new("x", vec![0.1, 0.1], 1.0).is_err());
    assert!(PhotonStream::new("x", vec![0.1, 1.5], 1.0).is_err());
    let a = PhotonStream::new("a", vec![0.1], 1.0).unwrap();
    let b = PhotonStream::new("b", vec![0.1], 2.0).unwrap();
    assert!(histogram_g2(&a, &b, 1e-9, 1e-8).is_err());
}

fn sorted_times() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(0u32..1_000_000, 0..300)
        .prop_map(|s| s.into_iter().map(|k| k as f64 * 1e-9).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exchanging_detectors_mirrors_the_histogram(t1 in sorted_times(), t2 in sorted_times()) {
        let a = PhotonStream::new("a", t1, 1e-3).unwrap();
        let b = PhotonStream::new("b", t2, 1e-3).unwrap();
        let ab = histogram_g2(&a, &b, 3.7e-9, 60e-9).unwrap();
        let ba = histogram_g2(&b, &a, 3.7e-9, 60e-9).unwrap();
        let mut rev = ba.counts.clone();
        rev.reverse();
        prop_assert_eq!(&ab.counts, &rev);
        prop_assert!(ab.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn closed_form_is_bounded(rabi in 0.1f64..200.0, det in -50.0f64..50.0, t in 0.0f64..400e-9) {
        let d = TwoLevelDrive { rabi_mhz: rabi, detuning_mhz: det, ..TwoLevelDrive::experiment() };
        let g = G2Model::new(&d).unwrap();
        let v = g.eval(t);
        prop_assert!(v >= -1e-12 && v.is_finite());
        prop_assert_eq!(g.eval(0.0), 0.0);
    }
}
