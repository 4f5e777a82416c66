//! Ontology-augmented semantic catalogue for omics cohort discovery.

pub mod augment;
pub mod catalog;
pub mod cli;
pub mod demo;
pub mod embed;
pub mod error;
pub mod eval;
pub mod index;
pub mod ontology;
pub mod pipeline;
pub mod qagen;
pub mod service;

pub use error::{Error, Result};
