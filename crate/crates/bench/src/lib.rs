//! Shared fixtures for the criterion benches.

use legis_core::corpus::{generate_synthetic_corpus, SynthParams, SyntheticCorpus};
use legis_core::features::{build_feature_matrix, build_participation, FeatureOptions, LabeledMatrix};

pub fn corpus(n_bills: usize) -> SyntheticCorpus {
    generate_synthetic_corpus(&SynthParams { n_bills, ..SynthParams::default() }).expect("synthetic corpus")
}

/// Participation feature matrix of a seeded synthetic corpus.
pub fn feature_matrix(n_bills: usize) -> LabeledMatrix {
    let c = corpus(n_bills);
    let records = build_participation(&c.bills, &c.legislators).expect("participation");
    build_feature_matrix(&records, &c.bills, &c.legislators, &c.constituencies, FeatureOptions::default())
        .expect("feature matrix")
}
