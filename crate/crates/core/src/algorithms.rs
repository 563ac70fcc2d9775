//! Name-based construction of layout algorithms.

use std::fmt;
use std::str::FromStr;

use crate::dh::{Dh, DhParams};
use crate::engine::{run, Layout, LayoutAlgorithm, RunConfig, RunRecord};
use crate::error::{LayoutError, ParamError};
use crate::force::{Fa2, Fa2Params, Fr, FrParams};
use crate::graph::Graph;
use crate::kk::{Kk, KkMs, KkMsDs, KkParams, KkVariant};
use crate::params::ParamMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgorithmKind {
    Kk,
    KkMs,
    KkMsDs,
    Dh,
    Fr,
    Frr,
    Fa2,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 7] = [
        AlgorithmKind::Kk,
        AlgorithmKind::KkMs,
        AlgorithmKind::KkMsDs,
        AlgorithmKind::Dh,
        AlgorithmKind::Fr,
        AlgorithmKind::Frr,
        AlgorithmKind::Fa2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::Kk => "kk",
            AlgorithmKind::KkMs => "kk-ms",
            AlgorithmKind::KkMsDs => "kk-ms-ds",
            AlgorithmKind::Dh => "dh",
            AlgorithmKind::Fr => "fr",
            AlgorithmKind::Frr => "frr",
            AlgorithmKind::Fa2 => "fa2",
        }
    }

    /// Comma-separated list of every algorithm name.
    pub fn names() -> String {
        Self::ALL.map(Self::name).join(", ")
    }

    /// Checks `params` without building anything.
    pub fn validate_params(self, params: &ParamMap) -> Result<(), ParamError> {
        match self {
            AlgorithmKind::Kk => KkParams::from_map(params, KkVariant::Classic).map(drop),
            AlgorithmKind::KkMs => KkParams::from_map(params, KkVariant::MultiSelect).map(drop),
            AlgorithmKind::KkMsDs => KkParams::from_map(params, KkVariant::DecayingStiffness).map(drop),
            AlgorithmKind::Dh => DhParams::from_map(params).map(drop),
            AlgorithmKind::Fr => FrParams::from_map(params, false).map(drop),
            AlgorithmKind::Frr => FrParams::from_map(params, true).map(drop),
            AlgorithmKind::Fa2 => Fa2Params::from_map(params).map(drop),
        }
    }

    /// Builds an instance owning `layout`.
    pub fn build(
        self,
        g: &Graph,
        layout: Layout,
        params: &ParamMap,
        seed: u64,
    ) -> Result<Box<dyn LayoutAlgorithm + Send>, LayoutError> {
        Ok(match self {
            AlgorithmKind::Kk => Box::new(Kk::new(g, layout, KkParams::from_map(params, KkVariant::Classic)?, seed)?),
            AlgorithmKind::KkMs => Box::new(KkMs::new(
                g,
                layout,
                KkParams::from_map(params, KkVariant::MultiSelect)?,
                seed,
            )?),
            AlgorithmKind::KkMsDs => Box::new(KkMsDs::new(
                g,
                layout,
                KkParams::from_map(params, KkVariant::DecayingStiffness)?,
                seed,
            )?),
            AlgorithmKind::Dh => Box::new(Dh::new(g, layout, DhParams::from_map(params)?, seed)?),
            AlgorithmKind::Fr => Box::new(Fr::fr(g, layout, FrParams::from_map(params, false)?, seed)?),
            AlgorithmKind::Frr => Box::new(Fr::frr(g, layout, FrParams::from_map(params, true)?, seed)?),
            AlgorithmKind::Fa2 => Box::new(Fa2::new(g, layout, Fa2Params::from_map(params)?, seed)?),
        })
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown algorithm '{0}'; expected one of: {list}", list = AlgorithmKind::names())]
pub struct UnknownAlgorithm(pub String);

impl FromStr for AlgorithmKind {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownAlgorithm(s.to_string()))
    }
}

/// Builds `kind` on the configured initial layout and runs it to completion.
pub fn run_algorithm(kind: AlgorithmKind, g: &Graph, cfg: &RunConfig) -> Result<RunRecord, LayoutError> {
    cfg.validate()?;
    let layout = cfg.initial_layout.build(g, cfg.bounds, cfg.seed);
    let mut algo = kind.build(g, layout, &cfg.algorithm_params, cfg.seed)?;
    run(algo.as_mut(), g, cfg)
}
