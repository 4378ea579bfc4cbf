//! Embedding deciders, encodings, block hierarchies, classifiers and
//! deterministic constructions for comparing random sequences under
//! flexible step-embeddings.
//!
//! The crate is organised bottom-up:
//! * [`params`] – parameter sets, exact scale constants, RNG streams;
//! * [`problem`] – alphabets, measures, relations, good sets;
//! * [`rembed`] – the core step-embedding decider/verifier;
//! * [`deciders`] – direct deciders for the three applications;
//! * [`encodings`] – reductions of the applications to the core relation;
//! * [`blocks`] – renewal block construction and sequence partitioning;
//! * [`classify`] – block distributions, embedding probabilities, the
//!   good/semi-bad/strong classifiers;
//! * [`partmaps`] – partitions, generalized mappings, the mapping-family
//!   builders and the schedule that turns mappings into witnesses;
//! * [`construct`] – level catalogs and the deterministic good sequence;
//! * [`experiments`] – seeded Monte Carlo estimates with exact binomial
//!   intervals;
//! * [`store`] – a content-addressed result store.

pub mod blocks;
pub mod classify;
pub mod construct;
pub mod deciders;
pub mod encodings;
pub mod error;
pub mod experiments;
pub mod params;
pub mod partmaps;
pub mod problem;
pub mod rembed;
pub mod store;
