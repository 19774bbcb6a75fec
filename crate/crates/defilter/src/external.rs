//! Filters implemented by an external command.
//!
//! The command template must contain `{IN}` and `{OUT}`; they are replaced
//! with absolute paths of temporary files. The command runs under `/bin/sh -c`
//! with an environment holding only `PATH` and `DEFILTER_FORMAT`.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use defilter_core::{Error as CoreError, Filter, Image};
use thiserror::Error;

use crate::io::{decode_image, encode_pfm, encode_png, IoError, PfmPrecision};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// File format used to talk to the external command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExchangeFormat {
    /// PFM with a 64-bit payload; exact for `f64` images.
    #[default]
    Pfm,
    /// Standard 32-bit PFM.
    Pfm32,
    /// 8-bit PNG; values are clamped and quantized.
    Png,
}

impl ExchangeFormat {
    pub fn name(self) -> &'static str {
        match self {
            ExchangeFormat::Pfm => "pfm",
            ExchangeFormat::Pfm32 => "pfm32",
            ExchangeFormat::Png => "png",
        }
    }

    fn extension(self) -> &'static str {
        match self {
            ExchangeFormat::Png => "png",
            _ => "pfm",
        }
    }

    pub fn is_lossy(self) -> bool {
        self != ExchangeFormat::Pfm
    }
}

impl FromStr for ExchangeFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pfm" | "pfm64" => Ok(ExchangeFormat::Pfm),
            "pfm32" => Ok(ExchangeFormat::Pfm32),
            "png" => Ok(ExchangeFormat::Png),
            other => Err(format!(
                "unknown exchange format {other:?} (pfm, pfm32, png)"
            )),
        }
    }
}

impl fmt::Display for ExchangeFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum ExternalError {
    #[error("command template must contain {{IN}} and {{OUT}}: {0:?}")]
    Template(String),
    #[error("could not start command: {0}")]
    Spawn(std::io::Error),
    #[error("command exited with {status}; stderr: {stderr}")]
    Exit { status: String, stderr: String },
    #[error("command timed out after {seconds:.1} s; stderr: {stderr}")]
    Timeout { seconds: f64, stderr: String },
    #[error("exchange file: {0}")]
    Io(#[from] IoError),
    #[error("command output is {got:?}, expected {expected:?} (height, width, channels)")]
    Dimension {
        expected: (usize, usize, usize),
        got: (usize, usize, usize),
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalFilter {
    template: String,
    format: ExchangeFormat,
    timeout: Duration,
}

impl ExternalFilter {
    pub fn new(template: impl Into<String>) -> Result<Self, ExternalError> {
        let template = template.into();
        if !template.contains("{IN}") || !template.contains("{OUT}") {
            return Err(ExternalError::Template(template));
        }
        Ok(ExternalFilter {
            template,
            format: ExchangeFormat::default(),
            timeout: DEFAULT_TIMEOUT,
        })
    }

    pub fn with_format(mut self, format: ExchangeFormat) -> Self {
        self.format = format;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn format(&self) -> ExchangeFormat {
        self.format
    }

    pub fn run(&self, input: &Image) -> Result<Image, ExternalError> {
        let dir = tempfile::tempdir().map_err(ExternalError::Spawn)?;
        let ext = self.format.extension();
        let in_path = dir.path().join(format!("in.{ext}"));
        let out_path = dir.path().join(format!("out.{ext}"));
        let bytes = match self.format {
            ExchangeFormat::Pfm => encode_pfm(input, PfmPrecision::Double),
            ExchangeFormat::Pfm32 => encode_pfm(input, PfmPrecision::Single),
            ExchangeFormat::Png => encode_png(input)?,
        };
        std::fs::write(&in_path, bytes).map_err(|e| IoError::File {
            path: in_path.clone(),
            source: e,
        })?;

        let command = self
            .template
            .replace("{IN}", &in_path.to_string_lossy())
            .replace("{OUT}", &out_path.to_string_lossy());
        self.run_command(&command)?;

        let bytes = std::fs::read(&out_path).map_err(|e| IoError::File {
            path: out_path.clone(),
            source: e,
        })?;
        let (out, _) = decode_image(&bytes)?;
        if out.dims() != input.dims() {
            return Err(ExternalError::Dimension {
                expected: input.dims(),
                got: out.dims(),
            });
        }
        Ok(out)
    }

    fn run_command(&self, command: &str) -> Result<(), ExternalError> {
        let mut child = Command::new("/bin/sh")
            .arg("-c")
            .arg(command)
            .env_clear()
            .env("PATH", std::env::var_os("PATH").unwrap_or_default())
            .env("DEFILTER_FORMAT", self.format.name())
            .current_dir(Path::new("/"))
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(ExternalError::Spawn)?;

        let captured = Arc::new(Mutex::new(Vec::new()));
        let mut pipe = child.stderr.take().expect("stderr is piped");
        let sink = Arc::clone(&captured);
        let reader = thread::spawn(move || {
            let mut chunk = [0u8; 4096];
            while let Ok(n) = pipe.read(&mut chunk) {
                if n == 0 {
                    break;
                }
                sink.lock().unwrap().extend_from_slice(&chunk[..n]);
            }
        });
        let stderr_text = || {
            String::from_utf8_lossy(&captured.lock().unwrap())
                .trim()
                .to_string()
        };

        let start = Instant::now();
        let status = loop {
            match child.try_wait().map_err(ExternalError::Spawn)? {
                Some(status) => break status,
                None if start.elapsed() >= self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(ExternalError::Timeout {
                        seconds: self.timeout.as_secs_f64(),
                        stderr: stderr_text(),
                    });
                }
                None => thread::sleep(Duration::from_millis(2)),
            }
        };
        let _ = reader.join();
        if !status.success() {
            return Err(ExternalError::Exit {
                status: status.to_string(),
                stderr: stderr_text(),
            });
        }
        Ok(())
    }
}

impl Filter for ExternalFilter {
    fn apply(&self, input: &Image) -> defilter_core::Result<Image> {
        self.run(input)
            .map_err(|e| CoreError::filter(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img() -> Image {
        Image::from_fn(3, 4, 1, |y, x, _| (y * 4 + x) as f64 / 13.0).unwrap()
    }

    #[test]
    fn template_needs_placeholders() {
        assert!(matches!(
            ExternalFilter::new("cp {IN} x"),
            Err(ExternalError::Template(_))
        ));
    }

    #[test]
    fn copy_is_identity() {
        let f = ExternalFilter::new("cp {IN} {OUT}").unwrap();
        assert_eq!(f.run(&img()).unwrap(), img());
    }

    #[test]
    fn environment_is_clean() {
        let f = ExternalFilter::new(
            "test \"$DEFILTER_FORMAT\" = png && test -z \"$HOME\" && cp {IN} {OUT}",
        )
        .unwrap()
        .with_format(ExchangeFormat::Png);
        let out = f.run(&img()).unwrap();
        for (a, b) in out.data().iter().zip(img().data()) {
            assert!((a - b).abs() <= 1.0 / 510.0);
        }
    }

    #[test]
    fn failure_carries_stderr() {
        let f = ExternalFilter::new("echo broken >&2; exit 1; # {IN} {OUT}").unwrap();
        match f.run(&img()) {
            Err(ExternalError::Exit { stderr, .. }) => assert_eq!(stderr, "broken"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn timeout_kills() {
        let f = ExternalFilter::new("sleep 5 # {IN} {OUT}")
            .unwrap()
            .with_timeout(Duration::from_millis(100));
        let t = Instant::now();
        assert!(matches!(f.run(&img()), Err(ExternalError::Timeout { .. })));
        assert!(t.elapsed() < Duration::from_secs(4));
    }

    #[test]
    fn missing_output_is_an_error() {
        let f = ExternalFilter::new("true {IN} {OUT}").unwrap();
        assert!(matches!(f.run(&img()), Err(ExternalError::Io(_))));
    }

    #[test]
    fn core_error_mapping() {
        let f = ExternalFilter::new("exit 3 # {IN} {OUT}").unwrap();
        assert!(matches!(f.apply(&img()), Err(CoreError::Filter { .. })));
    }
}
