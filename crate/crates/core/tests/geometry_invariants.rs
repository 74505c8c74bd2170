mod common;

use hl_core::experiments::{mean_length, run_replications, ExperimentConfig};
use hl_core::field::{
    sample_for_stream, HarmonicCoefficients, StreamKey, SynthesisMethod, SynthesisPlan,
};
use hl_core::geometry::{epsilon_band_length, extrapolated_length, level_curve_length};
use hl_core::stats::mc_summary;
use num_complex::Complex64;

fn zonal_grid(l: usize, k: usize) -> hl_core::field::FieldGrid {
    SynthesisPlan::new(l, k)
        .unwrap()
        .synthesize(&HarmonicCoefficients::zonal(l).unwrap(), SynthesisMethod::Fft)
        .unwrap()
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[test]
fn zonal_contour_oracle() {
    // levels with well-separated roots; a level grazing a local extremum puts two
    // circles closer than any ring spacing
    for (l, u) in [(10, 0.0), (25, 0.0), (25, 0.1), (50, 0.1), (80, -0.05)] {
        let want = common::zonal_level_length(l, u);
        let got = level_curve_length(&zonal_grid(l, 4), u).unwrap().length;
        assert!((got - want).abs() <= 5e-3 * want, "l={l} u={u}: {got} vs {want}");
    }
}

#[test]
fn zonal_band_oracle() {
    let (l, u) = (50, 0.1);
    let want = common::zonal_level_length(l, u);
    let got = epsilon_band_length(&zonal_grid(l, 4), u, 0.05).unwrap().length;
    assert!((got - want).abs() <= 0.03 * want, "{got} vs {want}");
}

#[test]
fn empty_level_sets() {
    let c = sample_for_stream(StreamKey::new(1, 20, 0)).unwrap();
    let grid = SynthesisPlan::new(20, 2)
        .unwrap()
        .synthesize(&c, SynthesisMethod::Fft)
        .unwrap();
    let u = grid.max_abs() + 0.1;
    assert_eq!(level_curve_length(&grid, u).unwrap().length, 0.0);
    assert_eq!(epsilon_band_length(&grid, u + 0.1, 0.05).unwrap().length, 0.0);
}

#[test]
fn band_needs_gradients() {
    let c = sample_for_stream(StreamKey::new(1, 20, 0)).unwrap();
    let grid = SynthesisPlan::new(20, 2).unwrap().synthesize_values(&c).unwrap();
    assert!(epsilon_band_length(&grid, 0.0, 0.05).is_err());
    assert!(level_curve_length(&grid, 0.0).is_ok());
}

#[test]
fn band_sweep_approaches_contour() {
    let l = 50;
    let plan = SynthesisPlan::new(l, 4).unwrap();
    for r in 0..5 {
        let c = sample_for_stream(StreamKey::new(21, l, r)).unwrap();
        let grid = plan.synthesize(&c, SynthesisMethod::Fft).unwrap();
        let reference = level_curve_length(&grid, 0.0).unwrap().length;
        let gaps: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&e| {
                let b = epsilon_band_length(&grid, 0.0, e).unwrap().length;
                (b - reference).abs() / reference
            })
            .collect();
        assert!(
            gaps.windows(2).all(|w| w[1] <= w[0]),
            "rep {r}: gaps {gaps:?} not decreasing"
        );
        assert!(gaps[2] < 0.02, "rep {r}: final gap {}", gaps[2]);
    }
}

#[test]
fn estimators_agree_per_realization() {
    let cfg = ExperimentConfig::default();
    let l = 50;
    let plan = SynthesisPlan::new(l, cfg.grid_factor).unwrap();
    let fine = plan.doubled();
    for r in 0..20 {
        let c = sample_for_stream(StreamKey::new(cfg.master_seed, l, r)).unwrap();
        let grid = plan.synthesize(&c, SynthesisMethod::Fft).unwrap();
        let fine_grid = fine.synthesize_values(&c).unwrap();
        for u in [0.0, 0.5, 1.0] {
            let a = extrapolated_length(&grid, &fine_grid, u).unwrap().length;
            let b = epsilon_band_length(&grid, u, cfg.epsilon).unwrap().length;
            assert!((a - b).abs() <= 0.02 * a, "rep {r} u={u}: contour {a} band {b}");
        }
    }
}

#[test]
fn refinement_stability() {
    let l = 50;
    let p2 = SynthesisPlan::new(l, 2).unwrap();
    let p4 = p2.doubled();
    let p8 = p4.doubled();
    let (mut d24, mut d48, mut extra) = (Vec::new(), Vec::new(), vec![Vec::new(); 3]);
    for r in 0..50 {
        let c = sample_for_stream(StreamKey::new(31, l, r)).unwrap();
        let g: Vec<_> = [&p2, &p4, &p8]
            .iter()
            .map(|p| p.synthesize_values(&c).unwrap())
            .collect();
        let raw: Vec<f64> = g
            .iter()
            .map(|g| level_curve_length(g, 0.0).unwrap().length)
            .collect();
        d24.push(raw[1] - raw[0]);
        d48.push(raw[2] - raw[1]);
        for (i, u) in [0.0, 0.5, 1.0].into_iter().enumerate() {
            let e1 = extrapolated_length(&g[0], &g[1], u).unwrap().length;
            let e2 = extrapolated_length(&g[1], &g[2], u).unwrap().length;
            extra[i].push((e2 - e1).abs() / e2);
        }
    }
    // the reported length: doubling k from the default changes it by < 0.5%
    for (u, rel) in [0.0, 0.5, 1.0].iter().zip(extra) {
        let m = median(rel);
        assert!(m < 5e-3, "extrapolated u={u}: median change {m}");
    }
    // the raw contour converges at second order in the grid spacing
    let ratio = d24.iter().sum::<f64>() / d48.iter().sum::<f64>();
    assert!((3.0..=5.0).contains(&ratio), "raw refinement ratio {ratio}");
}

#[test]
fn rotation_about_the_axis() {
    let l = 30;
    let plan = SynthesisPlan::new(l, 2).unwrap();
    let fine = plan.doubled();
    let n = 300;
    let mut diff = Vec::with_capacity(n);
    let mut plain = Vec::with_capacity(n);
    for r in 0..n as u64 {
        let c = sample_for_stream(StreamKey::new(41, l, r)).unwrap();
        // shifting the φ origin by α multiplies a_m by e^{−imα}
        let alpha = 0.37 + r as f64 * 0.011;
        let am = c
            .am
            .iter()
            .enumerate()
            .map(|(i, a)| a * Complex64::from_polar(1.0, -((i + 1) as f64) * alpha))
            .collect();
        let rotated = HarmonicCoefficients::new(l, c.a0, am, c.seed).unwrap();
        let len = |c: &HarmonicCoefficients| {
            let g = plan.synthesize_values(c).unwrap();
            let f = fine.synthesize_values(c).unwrap();
            extrapolated_length(&g, &f, 0.5).unwrap().length
        };
        let (a, b) = (len(&c), len(&rotated));
        plain.push(a);
        diff.push(b - a);
    }
    let d = mc_summary(&diff).unwrap();
    assert!(d.mean.abs() <= 3.0 * d.se_mean, "shift changes the mean by {}", d.mean);
    let p = mc_summary(&plain).unwrap();
    let target = mean_length(l, 0.5);
    assert!((p.mean - target).abs() <= 3.0 * p.se_mean);
}

#[test]
fn level_sign_symmetry() {
    let cfg = ExperimentConfig {
        levels: vec![1.0, -1.0],
        replications: 500,
        ..ExperimentConfig::default()
    };
    let records = run_replications(&cfg, 30, false).unwrap();
    let plus: Vec<f64> = records.iter().map(|r| r.length_at(1.0).unwrap()).collect();
    let minus: Vec<f64> = records.iter().map(|r| r.length_at(-1.0).unwrap()).collect();
    let (a, b) = (mc_summary(&plus).unwrap(), mc_summary(&minus).unwrap());
    let z = (a.mean - b.mean) / a.se_mean.hypot(b.se_mean);
    assert!(z.abs() <= 3.0, "{} vs {}", a.mean, b.mean);
}

#[test]
fn extrapolation_requires_exact_doubling() {
    let c = sample_for_stream(StreamKey::new(1, 12, 0)).unwrap();
    let a = SynthesisPlan::new(12, 2).unwrap().synthesize_values(&c).unwrap();
    let b = SynthesisPlan::new(12, 4).unwrap().synthesize_values(&c).unwrap();
    // k=4 rounds n_phi up independently, so it need not be the doubling of k=2
    if b.n_phi() != 2 * a.n_phi() || b.n_theta() != 2 * a.n_theta() {
        assert!(extrapolated_length(&a, &b, 0.0).is_err());
    }
    let d = SynthesisPlan::new(12, 2).unwrap().doubled().synthesize_values(&c).unwrap();
    assert!(extrapolated_length(&a, &d, 0.0).is_ok());
}
