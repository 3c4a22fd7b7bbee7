use atomlens_core::rng::substream;
use atomlens_core::sequence::{synthesize_spectrum, RatePolicy, SequenceConfig};
use atomlens_core::spectroscopy::*;
use atomlens_core::Error;
use proptest::prelude::*;
use rand::Rng;

fn grid(half: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
}

fn noiseless(shape: &LineShape, sigma: f64) -> Vec<SpectrumPoint> {
    transmission_model(&grid(20.0, 41), shape)
        .unwrap()
        .into_iter()
        .map(|p| SpectrumPoint { sigma, ..p })
        .collect()
}

fn chi2(points: &[SpectrumPoint], p: [f64; 4]) -> f64 {
    points
        .iter()
        .map(|q| {
            let m = p[3] * (1.0 - p[2] * lorentzian(q.detuning, p[0], p[1]));
            ((q.transmission - m) / q.sigma).powi(2)
        })
        .sum()
}

/// Gauss-Jordan inverse of a small symmetric matrix.
fn invert(mut a: [[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut inv = [[0.0; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for c in 0..4 {
        let p = (c..4).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for k in 0..4 {
            a[c][k] /= d;
            inv[c][k] /= d;
        }
        for r in 0..4 {
            if r != c {
                let f = a[r][c];
                for k in 0..4 {
                    a[r][k] -= f * a[c][k];
                    inv[r][k] -= f * inv[c][k];
                }
            }
        }
    }
    inv
}

#[test]
fn noiseless_round_trip() {
    for (eps, fwhm, center) in [(0.098, 7.5, 0.0), (0.074, 9.1, 1.3), (0.3, 6.0, -4.0)] {
        let shape = LineShape { p_sc_max: eps, fwhm, center, alpha: 0.0 };
        let fit = fit_lorentzian(&noiseless(&shape, 0.005)).unwrap();
        assert!((fit.extinction.value / eps - 1.0).abs() < 1e-6);
        assert!((fit.fwhm.value / fwhm - 1.0).abs() < 1e-6);
        assert!((fit.center.value - center).abs() < 1e-6 * fwhm);
        assert!((fit.baseline.value - 1.0).abs() < 1e-6);
        assert!(fit.chi_squared < 1e-12);
    }
}

#[test]
fn uncertainties_are_the_curvature_of_chi_squared() {
    let shape = LineShape { p_sc_max: 0.098, fwhm: 7.5, center: 0.0, alpha: 0.0 };
    let pts = noiseless(&shape, 0.005);
    let fit = fit_lorentzian(&pts).unwrap();
    let p0 = [fit.center.value, fit.fwhm.value, fit.extinction.value, fit.baseline.value];
    let h = [1e-3, 1e-3, 1e-5, 1e-5];
    // central-difference Hessian; covariance is (½H)⁻¹
    let mut hess = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let at = |si: f64, sj: f64| {
                let mut p = p0;
                p[i] += si * h[i];
                p[j] += sj * h[j];
                chi2(&pts, p)
            };
            hess[i][j] = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h[i] * h[j]);
        }
    }
    let half: [[f64; 4]; 4] = core::array::from_fn(|i| core::array::from_fn(|j| 0.5 * hess[i][j]));
    let cov = invert(half);
    let sig = [fit.center.sigma, fit.fwhm.sigma, fit.extinction.sigma, fit.baseline.sigma];
    for i in 0..4 {
        assert!((sig[i] / cov[i][i].sqrt() - 1.0).abs() < 1e-4, "parameter {i}");
    }
}

#[test]
fn resampling_agrees_with_curvature() {
    let shape = LineShape { p_sc_max: 0.098, fwhm: 7.5, center: 0.0, alpha: 0.0 };
    let pts = noiseless(&shape, 0.005);
    let fit = fit_lorentzian(&pts).unwrap();
    let s = resample_uncertainties(&pts, &fit, 400, &mut substream(1, 0)).unwrap();
    let sig = [fit.center.sigma, fit.fwhm.sigma, fit.extinction.sigma, fit.baseline.sigma];
    for i in 0..4 {
        assert!((s[i] / sig[i] - 1.0).abs() < 0.15, "parameter {i}: {} vs {}", s[i], sig[i]);
    }
}

#[test]
fn synthetic_paper_spectrum_is_recovered() {
    let shape = LineShape { p_sc_max: 0.098, fwhm: 7.5, center: 0.0, alpha: 0.0 };
    let cfg = SequenceConfig { seed: 2008, ..Default::default() };
    let pts = synthesize_spectrum(&cfg, &grid(20.0, 41), &shape, &RatePolicy::default()).unwrap();
    let on = pts.iter().find(|p| p.detuning == 0.0).unwrap();
    // error bars of the order of half a percent
    assert!(on.sigma > 0.003 && on.sigma < 0.008, "{}", on.sigma);
    let fit = fit_lorentzian(&pts).unwrap();
    assert!((fit.extinction.value - 0.098).abs() < 2.0 * fit.extinction.sigma);
    assert!((fit.fwhm.value - 7.5).abs() < 2.0 * fit.fwhm.sigma);
}

#[test]
fn transmission_model_examples() {
    let shape = LineShape { p_sc_max: 0.098, fwhm: 7.5, center: 1.0, alpha: 0.0 };
    let pts = transmission_model(&[1.0, 1.0 + 3.75, 1.0 - 3.75], &shape).unwrap();
    assert!((pts[0].transmission - 0.902).abs() < 1e-15);
    for p in &pts[1..] {
        assert!((1.0 - p.transmission - 0.049).abs() < 1e-15);
    }
    let flat = transmission_model(&grid(10.0, 5), &LineShape { p_sc_max: 0.0, ..shape }).unwrap();
    assert!(flat.iter().all(|p| p.transmission == 1.0));
    assert!(transmission_model(&[0.0], &LineShape { alpha: 1.0, ..shape }).is_err());
}

#[test]
fn extinction_conversion_examples() {
    assert_eq!(extinction_to_scattering(0.098, 0.0).unwrap(), 0.098);
    assert!((extinction_to_scattering(0.098, 0.05).unwrap() - 0.098 / 0.95).abs() < 1e-15);
    assert_eq!(extinction_to_scattering(0.0, 0.3).unwrap(), 0.0);
    assert!(extinction_to_scattering(0.1, 1.0).is_err());
    // below 5% collection the correction stays under 5.3%
    let p = extinction_to_scattering(0.098, 0.0499).unwrap();
    assert!(p - 0.098 < 0.098 * 0.053);
}

#[test]
fn laser_linewidth_adds_in_quadrature() {
    let shape = LineShape { p_sc_max: 0.1, fwhm: 6.0, center: 0.0, alpha: 0.0 };
    let b = shape.broadened(LASER_LINEWIDTH_MHZ);
    assert!((b.fwhm - 37f64.sqrt()).abs() < 1e-15);
    assert!(!shape.below_natural_linewidth());
    assert!(LineShape { fwhm: 5.0, ..shape }.below_natural_linewidth());
}

#[test]
fn fit_rejects_bad_input() {
    let shape = LineShape { p_sc_max: 0.098, fwhm: 7.5, center: 0.0, alpha: 0.0 };
    let pts = noiseless(&shape, 0.005);
    assert!(matches!(fit_lorentzian(&pts[..4]), Err(Error::InvalidInput(_))));
    let flat: Vec<_> = pts.iter().map(|p| SpectrumPoint { transmission: 0.95, ..*p }).collect();
    assert_eq!(fit_lorentzian(&flat), Err(Error::DegenerateData));
    let mut zero = pts.clone();
    zero[3].sigma = 0.0;
    assert!(fit_lorentzian(&zero).is_err());
}

#[test]
fn loss_chain_examples() {
    let t = chain_transmission(&LossChain::experiment());
    assert!((t - 0.784 * 0.947 * 0.716).abs() < 1e-15);
    assert!((t - 0.531).abs() < 0.005);
    let one = LossChain::new(vec![LossElement { name: "x".into(), transmission: 1.0 }]).unwrap();
    assert_eq!(chain_transmission(&one), 1.0);
    assert_eq!(LossChain::new(vec![]), Err(Error::Empty));
    assert!(LossChain::new(vec![LossElement { name: "x".into(), transmission: 0.0 }]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_ignores_point_order(seed in any::<u64>()) {
        let shape = LineShape { p_sc_max: 0.098, fwhm: 7.5, center: 0.5, alpha: 0.0 };
        let mut rng = substream(seed, 0);
        let mut pts = noiseless(&shape, 0.005);
        for p in &mut pts {
            p.transmission += 0.005 * (rng.random::<f64>() - 0.5);
        }
        let a = fit_lorentzian(&pts).unwrap();
        for i in (1..pts.len()).rev() {
            pts.swap(i, rng.random_range(0..=i));
        }
        prop_assert_eq!(a, fit_lorentzian(&pts).unwrap());
    }

    #[test]
    fn peak_extinction_converts_back(p in 0.0f64..1.0, alpha in 0.0f64..0.999, fwhm in 1.0f64..20.0) {
        let shape = LineShape { p_sc_max: p, fwhm, center: 0.0, alpha };
        let eps = 1.0 - shape.transmission(0.0);
        let back = extinction_to_scattering(eps, alpha).unwrap();
        prop_assert!((back - p).abs() <= 1e-12);
    }

    #[test]
    fn transmission_stays_in_range(p in 0.0f64..=1.0, alpha in 0.0f64..0.999, d in -100.0f64..100.0) {
        let shape = LineShape { p_sc_max: p, fwhm: 7.5, center: 0.0, alpha };
        let t = shape.transmission(d);
        prop_assert!(t <= 1.0 && t >= 1.0 - p - 1e-15);
        prop_assert!(t >= shape.transmission(0.0));
    }

    #[test]
    fn chain_order_is_irrelevant(ts in prop::collection::vec(0.01f64..=1.0, 1..8), seed in any::<u64>()) {
        let mut els: Vec<LossElement> =
            ts.iter().enumerate().map(|(i, &t)| LossElement { name: i.to_string(), transmission: t }).collect();
        let a = chain_transmission(&LossChain::new(els.clone()).unwrap());
        let mut rng = substream(seed, 0);
        for i in (1..els.len()).rev() {
            els.swap(i, rng.random_range(0..=i));
        }
        let b = chain_transmission(&LossChain::new(els).unwrap());
        prop_assert!((a - b).abs() <= 1e-15 * a);
    }
}
