//! CSV traces and JSON analysis reports.

use std::fmt::Write as _;

use defilter_core::reverse::ReverseTrace;
use defilter_core::{LinearOperatorReport, SpectralReport};
use serde::Serialize;

pub const TRACE_HEADER: &str = "iter,dt_psnr,dt_distance,gt_psnr,residual_norm";

/// `%g`-style formatting with 6 significant digits.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..6).contains(&exp) {
        trim(&format!("{:.*}", (5 - exp) as usize, v))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(sig6).unwrap_or_default()
}

/// One CSV row per iterate, numbers to 6 significant digits.
pub fn trace_csv(trace: &ReverseTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.iter,
            sig6(r.dt_psnr),
            sig6(r.dt_distance),
            opt(r.gt_psnr),
            sig6(r.residual_norm)
        );
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct FrequencyBin {
    pub u: usize,
    pub v: usize,
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    pub in_omega: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReportJson {
    pub kind: &'static str,
    pub height: usize,
    pub width: usize,
    pub class: &'static str,
    pub contraction_constant: Option<f64>,
    pub max_modulus: f64,
    pub omega_count: usize,
    pub omega_fraction: f64,
    pub omega_energy_fraction: Option<f64>,
    pub min_real: f64,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<Vec<FrequencyBin>>,
}

impl SpectralReportJson {
    pub fn new(r: &SpectralReport, per_frequency: bool) -> Self {
        let bins = per_frequency.then(|| {
            let moduli = r.contraction_moduli();
            (0..r.height * r.width)
                .map(|i| FrequencyBin {
                    u: i / r.width,
                    v: i % r.width,
                    re: r.spectrum[i].re,
                    im: r.spectrum[i].im,
                    modulus: moduli[i],
                    in_omega: r.omega_mask[i],
                })
                .collect()
        });
        SpectralReportJson {
            kind: "convolution",
            height: r.height,
            width: r.width,
            class: r.class.name(),
            contraction_constant: r.contraction_constant,
            max_modulus: r.max_modulus,
            omega_count: r.omega_count(),
            omega_fraction: r.omega_fraction,
            omega_energy_fraction: r.omega_energy_fraction,
            min_real: r.min_real,
            warnings: r.warnings.clone(),
            bins,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearOperatorReportJson {
    pub kind: &'static str,
    pub dimension: usize,
    pub class: &'static str,
    /// Squared scale, `max s^2` over Omega.
    pub contraction_constant: Option<f64>,
    pub contraction_modulus: Option<f64>,
    pub omega_count: usize,
    pub singular_values: Vec<f64>,
    pub omega: Vec<bool>,
}

impl From<&LinearOperatorReport> for LinearOperatorReportJson {
    fn from(r: &LinearOperatorReport) -> Self {
        LinearOperatorReportJson {
            kind: "linear",
            dimension: r.dimension,
            class: r.class.name(),
            contraction_constant: r.contraction_constant,
            contraction_modulus: r.contraction_modulus,
            omega_count: r.omega_count(),
            singular_values: r.singular_values.clone(),
            omega: r.omega.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use defilter_core::{
        kernel_spectrum, reverse_filter, FilterSpec, Image, Kernel, ReverseConfig,
    };

    #[test]
    fn trace_rows() {
        let j = Image::filled(4, 4, 1, 0.5).unwrap();
        let res = reverse_filter(&FilterSpec::Identity, &j, &ReverseConfig::new(2)).unwrap();
        let csv = trace_csv(&res.trace);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,99,0,,0");
    }

    #[test]
    fn six_significant_digits() {
        let cases = [
            (0.0, "0"),
            (99.0, "99"),
            (35.547123456, "35.5471"),
            (0.5, "0.5"),
            (-2.0, "-2"),
            (123456.7, "123457"),
            (999999.6, "1e6"),
            (1234567.0, "1.23457e6"),
            (0.0001234567, "0.000123457"),
            (0.00001234567, "1.23457e-5"),
            (1e-12, "1e-12"),
        ];
        for (v, want) in cases {
            assert_eq!(sig6(v), want, "{v}");
        }
    }

    #[test]
    fn spectral_json_fields() {
        let r = kernel_spectrum(&Kernel::delta(), (2, 2)).unwrap();
        let v = serde_json::to_value(SpectralReportJson::new(&r, true)).unwrap();
        assert_eq!(v["class"], "StrictContraction");
        assert_eq!(v["contraction_constant"], 0.0);
        assert_eq!(v["bins"].as_array().unwrap().len(), 4);
        let v = serde_json::to_value(SpectralReportJson::new(&r, false)).unwrap();
        assert!(v.get("bins").is_none());
    }
}
