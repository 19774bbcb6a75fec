//! Command-line companion to `defilter-core`: PNG/PFM files, filters backed
//! by external commands, filter spec strings, synthetic test images, reports
//! and the benchmark harness behind the `defilter` binary.

pub mod bench;
pub mod cli;
pub mod external;
pub mod io;
pub mod report;
pub mod spec;
pub mod synth;

use defilter_core::{apply_filter, Filter, FilterSpec, Image};

pub use external::{ExchangeFormat, ExternalError, ExternalFilter};
pub use io::{load_image, save_image, ImageFormat, IoError, PfmPrecision};
pub use spec::{format_spec, parse_spec, ParseError};

/// A built-in filter or an external command.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyFilter {
    Builtin(FilterSpec),
    External(ExternalFilter),
}

impl AnyFilter {
    pub fn label(&self) -> String {
        match self {
            AnyFilter::Builtin(spec) => format_spec(spec),
            AnyFilter::External(ext) => format!("external:{}", ext.template()),
        }
    }

    pub fn is_external(&self) -> bool {
        matches!(self, AnyFilter::External(_))
    }
}

impl Filter for AnyFilter {
    fn apply(&self, input: &Image) -> defilter_core::Result<Image> {
        match self {
            AnyFilter::Builtin(spec) => apply_filter(spec, input),
            AnyFilter::External(ext) => ext.apply(input),
        }
    }
}
