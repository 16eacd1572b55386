//! Core data pipeline for predicting the prestige tier of a researcher's
//! first faculty placement from temporal co-authorship networks.
//!
//! The flow is: `ingest` (normalize + link the raw CSVs) -> `tempgraph`
//! (cumulative annual snapshots over a fixed node set) -> `featurize`
//! (leakage-safe label/feature tensors, temporal splits, per-year masks).
//! `rewire` perturbs per-year increment edges for robustness experiments,
//! `evalstat` holds the ranking metrics and the mixed-model inference, and
//! `synth` generates planted-signal cohorts used as the verification oracle.

pub mod evalstat;
pub mod featurize;
pub mod ingest;
pub mod rewire;
pub mod rng;
pub mod synth;
pub mod tempgraph;
