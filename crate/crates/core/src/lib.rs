//! Minimum-length transmission frames for single-cell massive MIMO with more
//! devices than pilots.
//!
//! A frame is a multiset of coherence blocks. In each block a *compatible
//! set* of devices is active: some transmit, some receive, at most one pilot
//! each, and every active device meets its SINR threshold under the chosen
//! precoder and power-control scheme. The frame problem is solved by column
//! generation over compatible sets followed by an integer program over the
//! generated columns.
//!
//! ```
//! use mimoframe::model::Precoder;
//! use mimoframe::powerctl::PowerScheme;
//! use mimoframe::run::{run_pipeline, RunOptions};
//! use mimoframe::scenarios::{ExperimentConfig, ScenarioSpec, build_instance};
//!
//! let exp = ExperimentConfig::new(5)?.with_devices(4);
//! let inst = build_instance(&exp, &ScenarioSpec::new(1)?)?;
//! let report = run_pipeline(&inst, Precoder::Zf, PowerScheme::Optimal, &RunOptions::default())?;
//! assert!(report.valid);
//! assert!(report.frame >= report.bounds.pigeonhole);
//! # Ok::<(), mimoframe::Error>(())
//! ```

pub mod colgen;
pub mod error;
pub mod io;
pub mod model;
pub mod powerctl;
pub mod pricing;
pub mod run;
pub mod scenarios;

pub use error::{Error, Result};

// Runs the guide's snippets as doctests so the book stays in sync.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/model.md")]
    pub struct Model;
    #[doc = include_str!("../../../book/src/power-control.md")]
    pub struct PowerControl;
    #[doc = include_str!("../../../book/src/column-generation.md")]
    pub struct ColumnGeneration;
    #[doc = include_str!("../../../book/src/pricing.md")]
    pub struct Pricing;
    #[doc = include_str!("../../../book/src/frames.md")]
    pub struct Frames;
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub struct Experiments;
}
