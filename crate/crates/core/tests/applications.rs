use defilter_core::applications::{
    deconvolve, reverse_pointwise, super_resolve, DeconvConfig, SrConfig,
};
use defilter_core::{apply_filter, psnr, Boundary, FilterSpec, Image, Kernel};

fn smooth_scene(h: usize, w: usize) -> Image {
    Image::from_fn(h, w, 1, |y, x, _| {
        // whole periods along both axes, so circular boundaries add no seams
        let tau = 2.0 * std::f64::consts::PI;
        let (y, x) = (tau * y as f64 / h as f64, tau * x as f64 / w as f64);
        0.5 + 0.2 * (3.0 * x + y).sin() + 0.15 * (2.0 * y).cos() * (4.0 * x).sin()
    })
    .unwrap()
}

#[test]
fn deconvolution_recovers_a_gaussian_blur() {
    let truth = smooth_scene(32, 32);
    let kernel = Kernel::gaussian(1.5, 9).unwrap();
    let blurred = apply_filter(
        &FilterSpec::Conv {
            kernel: kernel.clone(),
            boundary: Boundary::Periodic,
        },
        &truth,
    )
    .unwrap();
    let mut cfg = DeconvConfig::new(kernel);
    cfg.ground_truth = Some(truth.clone());
    let out = deconvolve(&blurred, &cfg).unwrap();
    assert!(out.warnings.iter().all(|w| !w.contains("sums to")));
    let init = out.result.trace.init_record().gt_psnr.unwrap();
    let fin = out.result.trace.final_record().gt_psnr.unwrap();
    assert!(fin > init + 10.0, "{init} -> {fin}");
}

#[test]
fn deconvolution_flags_unnormalized_kernels() {
    let truth = smooth_scene(16, 16);
    let kernel = Kernel::new(1, 3, vec![0.3, 0.3, 0.3]).unwrap();
    let out = deconvolve(&truth, &DeconvConfig::new(kernel)).unwrap();
    assert!(out.warnings.iter().any(|w| w.contains("sums to")));
}

#[test]
fn super_resolution_improves_on_the_upsampled_input() {
    let truth = smooth_scene(48, 48);
    let spec = FilterSpec::DownUp {
        scale: 2,
        down: Default::default(),
        up: Default::default(),
    };
    let upsampled = apply_filter(&spec, &truth).unwrap();
    let cfg = SrConfig {
        ground_truth: Some(truth.clone()),
        ..SrConfig::default()
    };
    let res = super_resolve(&upsampled, &cfg).unwrap();
    let init = psnr(&upsampled, &truth).unwrap();
    assert!(psnr(&res.best_image, &truth).unwrap() > init);

    let odd = smooth_scene(47, 48);
    assert!(super_resolve(&odd, &cfg).is_err());
}

#[test]
fn gamma_reversal_matches_closed_form() {
    let truth =
        Image::from_fn(8, 16, 1, |y, x, _| 0.1 + 0.8 * (y * 16 + x) as f64 / 127.0).unwrap();
    let spec = FilterSpec::Gamma { gamma: 2.0 };
    let v = apply_filter(&spec, &truth).unwrap();
    let (res, warnings) = reverse_pointwise(&v, &spec, 50).unwrap();
    assert!(warnings.is_empty());
    for (x, v) in res.final_image.data().iter().zip(v.data()) {
        assert!((x - v.sqrt()).abs() < 1e-3);
    }
}

#[test]
fn pointwise_rejects_other_filters() {
    let img = smooth_scene(8, 8);
    assert!(reverse_pointwise(&img, &FilterSpec::gaussian(1.0), 5).is_err());
    let negative = img.map(|v| v - 1.0);
    assert!(reverse_pointwise(&negative, &FilterSpec::Gamma { gamma: 2.0 }, 5).is_err());
}
