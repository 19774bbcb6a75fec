//! Filter spec strings: `name[:key=value,...]`, e.g.
//! `gaussian:sigma=2,support=21` or `conv:size=1x3,weights=0.25;0.5;0.25`.

use std::collections::HashSet;
use std::fmt::Write as _;

use defilter_core::filters::{DownMethod, UpMethod};
use defilter_core::{Boundary, FilterSpec, Kernel};
use thiserror::Error;

/// A spec string error. `position` is a 1-based character column.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("column {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

fn err<T>(position: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        position,
        message: message.into(),
    })
}

struct Param<'a> {
    key: &'a str,
    key_pos: usize,
    value: &'a str,
    value_pos: usize,
}

impl Param<'_> {
    fn real(&self) -> Result<f64, ParseError> {
        match self.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => err(
                self.value_pos,
                format!("{}: expected a number, got {:?}", self.key, self.value),
            ),
        }
    }

    fn count(&self) -> Result<usize, ParseError> {
        self.value.parse::<usize>().or_else(|_| {
            err(
                self.value_pos,
                format!(
                    "{}: expected a whole number, got {:?}",
                    self.key, self.value
                ),
            )
        })
    }

    fn boundary(&self) -> Result<Boundary, ParseError> {
        match self.value {
            "periodic" => Ok(Boundary::Periodic),
            "symmetric" => Ok(Boundary::Symmetric),
            v => err(
                self.value_pos,
                format!("boundary: expected periodic or symmetric, got {v:?}"),
            ),
        }
    }

    fn pair(&self) -> Result<(usize, usize), ParseError> {
        let parsed = self
            .value
            .split_once('x')
            .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)));
        match parsed {
            Some(p) => Ok(p),
            None => err(
                self.value_pos,
                format!("{}: expected RxC, got {:?}", self.key, self.value),
            ),
        }
    }

    fn list(&self) -> Result<Vec<f64>, ParseError> {
        let mut out = Vec::new();
        let mut pos = self.value_pos;
        for item in self.value.split(';') {
            match item.parse::<f64>() {
                Ok(v) if v.is_finite() => out.push(v),
                _ => return err(pos, format!("{}: bad number {item:?}", self.key)),
            }
            pos += item.chars().count() + 1;
        }
        Ok(out)
    }
}

fn split_params(text: &str, offset: usize) -> Result<Vec<Param<'_>>, ParseError> {
    let mut params = Vec::new();
    let mut seen = HashSet::new();
    let mut pos = offset;
    for item in text.split(',') {
        let len = item.chars().count();
        let Some((key, value)) = item.split_once('=') else {
            return err(pos, format!("expected key=value, got {item:?}"));
        };
        let key_len = key.chars().count();
        if key.is_empty() {
            return err(pos, "missing parameter name");
        }
        if value.is_empty() {
            return err(pos + key_len + 1, format!("missing value for {key}"));
        }
        if !seen.insert(key) {
            return err(pos, format!("duplicate parameter {key}"));
        }
        params.push(Param {
            key,
            key_pos: pos,
            value,
            value_pos: pos + key_len + 1,
        });
        pos += len + 1;
    }
    Ok(params)
}

/// Parses a built-in filter spec.
pub fn parse_spec(text: &str) -> Result<FilterSpec, ParseError> {
    let text_trim = text.trim_end();
    let lead = text_trim.len() - text_trim.trim_start().len();
    let text = text_trim.trim_start();
    let base = lead + 1;
    let (name, params) = match text.split_once(':') {
        Some((name, rest)) => {
            if rest.is_empty() {
                return err(
                    base + name.chars().count() + 1,
                    "expected parameters after ':'",
                );
            }
            (name, split_params(rest, base + name.chars().count() + 1)?)
        }
        None => (text, Vec::new()),
    };
    if name.is_empty() {
        return err(base, "missing filter name");
    }

    let allowed: &[&str] = match name {
        "identity" => &[],
        "gaussian" => &["sigma", "support", "boundary"],
        "box" => &["radius", "boundary"],
        "disk" => &["r", "radius", "support", "boundary"],
        "conv" => &["size", "weights", "anchor", "boundary"],
        "bilateral" => &["sigma_s", "sigma_r", "radius"],
        "guided" => &["radius", "eps"],
        "median" => &["radius"],
        "gamma" => &["gamma"],
        "unsharp" => &["lambda", "sigma", "support", "boundary"],
        "downup" => &["scale", "down", "up"],
        other => return err(base, format!("unknown filter {other:?}")),
    };
    for p in &params {
        if !allowed.contains(&p.key) {
            return err(p.key_pos, format!("{name} has no parameter {:?}", p.key));
        }
    }
    let get = |k: &str| params.iter().find(|p| p.key == k);
    let real = |k: &str, default: f64| get(k).map_or(Ok(default), Param::real);
    let count = |k: &str, default: usize| get(k).map_or(Ok(default), Param::count);
    let opt_count = |k: &str| get(k).map(Param::count).transpose();
    let boundary = || get("boundary").map_or(Ok(Boundary::Periodic), Param::boundary);
    let end = base + text.chars().count();

    let spec = match name {
        "identity" => FilterSpec::Identity,
        "gaussian" => FilterSpec::Gaussian {
            sigma: real("sigma", 2.0)?,
            support: opt_count("support")?,
            boundary: boundary()?,
        },
        "box" => FilterSpec::Box {
            radius: count("radius", 1)?,
            boundary: boundary()?,
        },
        "disk" => {
            if get("r").is_some() && get("radius").is_some() {
                return err(get("radius").unwrap().key_pos, "give either r or radius");
            }
            FilterSpec::Disk {
                radius: get("r").or(get("radius")).map_or(Ok(3.0), Param::real)?,
                support: opt_count("support")?,
                boundary: boundary()?,
            }
        }
        "conv" => {
            let Some(size) = get("size") else {
                return err(end, "conv needs size=RxC");
            };
            let Some(weights) = get("weights") else {
                return err(end, "conv needs weights=a;b;...");
            };
            let (h, w) = size.pair()?;
            let values = weights.list()?;
            let kernel = match get("anchor") {
                Some(a) => {
                    let anchor = a.pair()?;
                    Kernel::with_anchor(h, w, anchor, values)
                }
                None => Kernel::new(h, w, values),
            };
            FilterSpec::Conv {
                kernel: kernel.or_else(|e| err(weights.value_pos, e.to_string()))?,
                boundary: boundary()?,
            }
        }
        "bilateral" => {
            let sigma_s = real("sigma_s", 3.0)?;
            FilterSpec::Bilateral {
                sigma_s,
                sigma_r: real("sigma_r", 0.1)?,
                radius: count("radius", (2.0 * sigma_s).ceil().max(1.0) as usize)?,
            }
        }
        "guided" => FilterSpec::Guided {
            radius: count("radius", 4)?,
            eps: real("eps", 0.01)?,
        },
        "median" => FilterSpec::Median {
            radius: count("radius", 2)?,
        },
        "gamma" => FilterSpec::Gamma {
            gamma: real("gamma", 2.0)?,
        },
        "unsharp" => FilterSpec::Unsharp {
            lambda: real("lambda", 0.5)?,
            sigma: real("sigma", 2.0)?,
            support: opt_count("support")?,
            boundary: boundary()?,
        },
        "downup" => FilterSpec::DownUp {
            scale: count("scale", 2)?,
            down: match get("down") {
                None => DownMethod::Box,
                Some(p) => match p.value {
                    "box" => DownMethod::Box,
                    "point" => DownMethod::Point,
                    v => {
                        return err(
                            p.value_pos,
                            format!("down: expected box or point, got {v:?}"),
                        )
                    }
                },
            },
            up: match get("up") {
                None => UpMethod::Bicubic,
                Some(p) => match p.value {
                    "bicubic" => UpMethod::Bicubic,
                    "bilinear" => UpMethod::Bilinear,
                    "nearest" => UpMethod::Nearest,
                    v => {
                        return err(
                            p.value_pos,
                            format!("up: expected bicubic, bilinear or nearest, got {v:?}"),
                        )
                    }
                },
            },
        },
        _ => unreachable!("checked above"),
    };
    spec.validate().or_else(|e| err(base, e.to_string()))?;
    Ok(spec)
}

/// Canonical spec string; `parse_spec(&format_spec(s)) == s`.
pub fn format_spec(spec: &FilterSpec) -> String {
    let mut s = String::from(spec.name());
    let mut params: Vec<String> = Vec::new();
    let boundary = |b: &Boundary| format!("boundary={}", b.name());
    match spec {
        FilterSpec::Identity => {}
        FilterSpec::Gaussian {
            sigma,
            support,
            boundary: b,
        } => {
            params.push(format!("sigma={sigma}"));
            params.extend(support.map(|v| format!("support={v}")));
            params.push(boundary(b));
        }
        FilterSpec::Box {
            radius,
            boundary: b,
        } => {
            params.push(format!("radius={radius}"));
            params.push(boundary(b));
        }
        FilterSpec::Disk {
            radius,
            support,
            boundary: b,
        } => {
            params.push(format!("r={radius}"));
            params.extend(support.map(|v| format!("support={v}")));
            params.push(boundary(b));
        }
        FilterSpec::Conv {
            kernel,
            boundary: b,
        } => {
            params.push(format!("size={}x{}", kernel.height(), kernel.width()));
            let mut w = String::new();
            for (i, v) in kernel.weights().iter().enumerate() {
                if i > 0 {
                    w.push(';');
                }
                let _ = write!(w, "{v}");
            }
            params.push(format!("weights={w}"));
            let (ay, ax) = kernel.anchor();
            if (ay, ax) != (kernel.height() / 2, kernel.width() / 2)
                || kernel.height() % 2 == 0
                || kernel.width() % 2 == 0
            {
                params.push(format!("anchor={ay}x{ax}"));
            }
            params.push(boundary(b));
        }
        FilterSpec::Bilateral {
            sigma_s,
            sigma_r,
            radius,
        } => {
            params.push(format!("sigma_s={sigma_s}"));
            params.push(format!("sigma_r={sigma_r}"));
            params.push(format!("radius={radius}"));
        }
        FilterSpec::Guided { radius, eps } => {
            params.push(format!("radius={radius}"));
            params.push(format!("eps={eps}"));
        }
        FilterSpec::Median { radius } => params.push(format!("radius={radius}")),
        FilterSpec::Gamma { gamma } => params.push(format!("gamma={gamma}")),
        FilterSpec::Unsharp {
            lambda,
            sigma,
            support,
            boundary: b,
        } => {
            params.push(format!("lambda={lambda}"));
            params.push(format!("sigma={sigma}"));
            params.extend(support.map(|v| format!("support={v}")));
            params.push(boundary(b));
        }
        FilterSpec::DownUp { scale, down, up } => {
            params.push(format!("scale={scale}"));
            params.push(format!("down={}", down.name()));
            params.push(format!("up={}", up.name()));
        }
    }
    if !params.is_empty() {
        s.push(':');
        s.push_str(&params.join(","));
    }
    s
}

/// Replaces the boundary rule of convolution-type specs; others are returned
/// unchanged.
pub fn with_boundary(spec: FilterSpec, b: Boundary) -> FilterSpec {
    match spec {
        FilterSpec::Gaussian { sigma, support, .. } => FilterSpec::Gaussian {
            sigma,
            support,
            boundary: b,
        },
        FilterSpec::Box { radius, .. } => FilterSpec::Box {
            radius,
            boundary: b,
        },
        FilterSpec::Disk {
            radius, support, ..
        } => FilterSpec::Disk {
            radius,
            support,
            boundary: b,
        },
        FilterSpec::Conv { kernel, .. } => FilterSpec::Conv {
            kernel,
            boundary: b,
        },
        FilterSpec::Unsharp {
            lambda,
            sigma,
            support,
            ..
        } => FilterSpec::Unsharp {
            lambda,
            sigma,
            support,
            boundary: b,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_with_params() {
        assert_eq!(
            parse_spec("gaussian:sigma=2,support=21").unwrap(),
            FilterSpec::Gaussian {
                sigma: 2.0,
                support: Some(21),
                boundary: Boundary::Periodic
            }
        );
        assert_eq!(parse_spec("identity").unwrap(), FilterSpec::Identity);
    }

    #[test]
    fn missing_value_points_past_equals() {
        let e = parse_spec("gaussian:sigma=").unwrap_err();
        assert_eq!(e.position, 16);
        assert!(e.message.contains("sigma"));
    }

    #[test]
    fn error_positions() {
        assert_eq!(parse_spec("blur").unwrap_err().position, 1);
        assert_eq!(
            parse_spec("box:radius=2,colour=1").unwrap_err().position,
            14
        );
        assert_eq!(parse_spec("box:radius=two").unwrap_err().position, 12);
        assert_eq!(parse_spec("gaussian:").unwrap_err().position, 10);
        assert_eq!(
            parse_spec("conv:size=1x3,weights=1;x;1")
                .unwrap_err()
                .position,
            25
        );
        assert!(parse_spec("box:radius=1,radius=2").is_err());
        assert!(parse_spec("gaussian:sigma=2,support=20").is_err());
        assert!(parse_spec("gamma:gamma=-1").is_err());
    }

    #[test]
    fn conv_kernels() {
        let s = parse_spec("conv:size=1x3,weights=0.25;0.5;0.25,boundary=symmetric").unwrap();
        match &s {
            FilterSpec::Conv { kernel, boundary } => {
                assert_eq!(kernel.weights(), &[0.25, 0.5, 0.25]);
                assert_eq!(*boundary, Boundary::Symmetric);
            }
            _ => panic!(),
        }
        let two = parse_spec("conv:size=1x2,weights=0.5;0.5,anchor=0x0").unwrap();
        assert_eq!(parse_spec(&format_spec(&two)).unwrap(), two);
        assert!(parse_spec("conv:size=1x3,weights=1;1").is_err());
    }

    #[test]
    fn canonical_round_trip() {
        for text in [
            "identity",
            "gaussian:sigma=1.5",
            "gaussian:sigma=2,support=21,boundary=symmetric",
            "box:radius=3",
            "disk:r=3",
            "disk:radius=2.5,support=7",
            "bilateral:sigma_s=3,sigma_r=0.1",
            "guided:radius=4,eps=0.001",
            "median:radius=2",
            "gamma:gamma=0.4545",
            "unsharp:lambda=0.5,sigma=2",
            "downup:scale=3,down=point,up=bilinear",
            "conv:size=3x3,weights=0;0.1;0;0.1;0.6;0.1;0;0.1;0",
        ] {
            let s = parse_spec(text).unwrap();
            assert_eq!(parse_spec(&format_spec(&s)).unwrap(), s, "{text}");
        }
    }

    #[test]
    fn boundary_override() {
        let s = with_boundary(parse_spec("box:radius=1").unwrap(), Boundary::Symmetric);
        assert_eq!(format_spec(&s), "box:radius=1,boundary=symmetric");
        assert_eq!(
            with_boundary(FilterSpec::Identity, Boundary::Symmetric),
            FilterSpec::Identity
        );
    }
}
