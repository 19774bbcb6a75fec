use std::f64::consts::PI;

use defilter_core::{
    analyze_linear_operator, apply_filter, kernel_spectrum, matrix_from_conv, project_omega,
    Boundary, ContractionClass, FilterSpec, Image, Kernel, OmegaSide,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// |1 - K(u, v)| by the textbook double sum, kernel taps placed circularly
/// around the anchor.
fn brute_moduli(k: &Kernel, h: usize, w: usize) -> Vec<f64> {
    let (ay, ax) = k.anchor();
    let mut out = Vec::with_capacity(h * w);
    for u in 0..h {
        for v in 0..w {
            let (mut re, mut im) = (0.0, 0.0);
            for r in 0..k.height() {
                for c in 0..k.width() {
                    let dy = r as f64 - ay as f64;
                    let dx = c as f64 - ax as f64;
                    let phase = -2.0 * PI * (u as f64 * dy / h as f64 + v as f64 * dx / w as f64);
                    re += k.weight(r, c) * phase.cos();
                    im += k.weight(r, c) * phase.sin();
                }
            }
            out.push(((1.0 - re).powi(2) + im * im).sqrt());
        }
    }
    out
}

fn random_image(rng: &mut StdRng, h: usize, w: usize) -> Image {
    Image::from_fn(h, w, 1, |_, _, _| rng.random::<f64>()).unwrap()
}

#[test]
fn spectrum_matches_brute_force() {
    let kernels = [
        Kernel::gaussian(1.3, 7).unwrap(),
        Kernel::disk(2.0, 5).unwrap(),
        Kernel::boxed(2).unwrap(),
        Kernel::new(3, 5, (0..15).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap(),
    ];
    for k in &kernels {
        for (h, w) in [(8, 8), (12, 10), (7, 9)] {
            let got = kernel_spectrum(k, (h, w)).unwrap().contraction_moduli();
            let want = brute_moduli(k, h, w);
            for (g, t) in got.iter().zip(&want) {
                assert!((g - t).abs() < 1e-12, "{g} vs {t}");
            }
        }
    }
}

#[test]
fn classes_follow_the_oracle() {
    for (k, (h, w)) in [
        (Kernel::delta(), (16, 16)),
        (Kernel::disk(3.0, 7).unwrap(), (64, 64)),
        (Kernel::gaussian(2.0, 21).unwrap(), (64, 64)),
        (Kernel::gaussian(0.5, 3).unwrap(), (32, 32)),
    ] {
        let report = kernel_spectrum(&k, (h, w)).unwrap();
        let moduli = brute_moduli(&k, h, w);
        // bins within rounding of the boundary are excluded from the comparison
        let inside = moduli.iter().filter(|&&m| m < 1.0 - 1e-9).count();
        let outside = moduli.iter().filter(|&&m| m > 1.0 + 1e-9).count();
        let near = moduli.len() - inside - outside;
        assert!(report.omega_count() >= inside && report.omega_count() <= inside + near);
        let class = report.class;
        if outside == 0 && near == 0 {
            assert_eq!(class, ContractionClass::StrictContraction);
        } else if inside > 0 && outside > 0 {
            assert_eq!(class, ContractionClass::PartiallyReversible);
        }
    }
}

#[test]
fn two_tap_average() {
    let k = Kernel::with_anchor(1, 2, (0, 0), vec![0.5, 0.5]).unwrap();
    let r = kernel_spectrum(&k, (1, 2)).unwrap();
    assert_eq!(r.omega_mask, vec![true, false]);
    assert_eq!(r.omega_fraction, 0.5);
    assert_eq!(r.contraction_constant, Some(0.0));
}

#[test]
fn circulant_matrix_agrees_with_spectrum() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..4 {
        let w: Vec<f64> = (0..9).map(|_| rng.random::<f64>() + 0.05).collect();
        let s: f64 = w.iter().sum();
        let k = Kernel::new(3, 3, w.iter().map(|v| v / s).collect()).unwrap();
        let svd =
            analyze_linear_operator(&matrix_from_conv(&k, (6, 6), Boundary::Periodic).unwrap())
                .unwrap();
        let mut want = brute_moduli(&k, 6, 6);
        want.sort_by(|a, b| b.total_cmp(a));
        for (g, t) in svd.singular_values.iter().zip(&want) {
            assert!((g - t).abs() < 1e-12, "{g} vs {t}");
        }
    }
}

#[test]
fn matrix_route_applies_the_same_filter() {
    let mut rng = StdRng::seed_from_u64(4);
    let k = Kernel::gaussian(1.0, 5).unwrap();
    for boundary in [Boundary::Periodic, Boundary::Symmetric] {
        let a = matrix_from_conv(&k, (7, 9), boundary).unwrap();
        let x = random_image(&mut rng, 7, 9);
        let y = apply_filter(
            &FilterSpec::Conv {
                kernel: k.clone(),
                boundary,
            },
            &x,
        )
        .unwrap();
        let ax =
            &a * defilter_core::spectral::DMatrix::from_column_slice(63, 1, &x.to_column_major(0));
        for (p, q) in ax.iter().zip(y.to_column_major(0)) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}

#[test]
fn omega_projections_split_the_image() {
    let mut rng = StdRng::seed_from_u64(5);
    let x = random_image(&mut rng, 16, 16);
    let report = kernel_spectrum(&Kernel::disk(3.0, 7).unwrap(), (16, 16)).unwrap();
    let inside = project_omega(&x, &report, OmegaSide::Omega).unwrap();
    let outside = project_omega(&x, &report, OmegaSide::OmegaComplement).unwrap();
    let sum = inside.add(&outside).unwrap();
    for (a, b) in sum.data().iter().zip(x.data()) {
        assert!((a - b).abs() < 1e-12);
    }
    let dot: f64 = inside
        .data()
        .iter()
        .zip(outside.data())
        .map(|(a, b)| a * b)
        .sum();
    assert!(dot.abs() < 1e-10);
}
