//! Registry of verification experiments. Each experiment names the statement
//! it probes, declares its parameter schema (the defaults), and produces a
//! [`Report`] with pass/fail criteria at the configured thresholds.

use crate::config::{KvMap, RunContext};
use crate::report::Report;
use crate::{LabError, Result};

mod common;
mod flows;
mod gmc_moment;
mod interface;
mod loewner_exact;
mod points;
mod ratio;
mod rn;
mod rooted;
mod ui;
mod weld;
mod williams;
mod zip;
mod zipper;
mod zoom;

pub trait Experiment: Sync {
    fn name(&self) -> &'static str;
    /// Statement under test, quoted in the report header.
    fn anchor(&self) -> &'static str;
    fn defaults(&self) -> Vec<(&'static str, &'static str)>;
    fn run(&self, ctx: &RunContext) -> Result<Report>;

    fn schema(&self) -> KvMap {
        KvMap::from_defaults(&self.defaults())
    }
}

pub fn registry() -> Vec<Box<dyn Experiment>> {
    vec![
        Box::new(gmc_moment::GmcMoment),
        Box::new(ratio::RatioTrend),
        Box::new(loewner_exact::LoewnerExact),
        Box::new(flows::FlowConvergence),
        Box::new(rn::GirsanovBessel),
        Box::new(williams::WilliamsDecomposition),
        Box::new(zoom::ZoomIn),
        Box::new(rooted::RootedMeasure),
        Box::new(ui::UniformIntegrability),
        Box::new(weld::LengthMatching),
        Box::new(interface::InterfaceLaw),
        Box::new(zip::ZipStationarity),
        Box::new(points::SharedNoisePoints),
        Box::new(zipper::CoupledZipper),
    ]
}

pub fn find(name: &str) -> Result<Box<dyn Experiment>> {
    registry()
        .into_iter()
        .find(|e| e.name() == name)
        .ok_or_else(|| {
            let known: Vec<&str> = registry().iter().map(|e| e.name()).collect();
            LabError::Usage(format!(
                "unknown experiment '{name}'; registered experiments: {}",
                known.join(", ")
            ))
        })
}
