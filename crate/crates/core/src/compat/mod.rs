//! Top level: image encodings over base banks, cross-class rule mining,
//! top-level classifiers, and pair scoring/explanation.

mod encode;
mod infer;
mod top;

pub use encode::{
    build_pair_matrix, encode_image, BaseEncoding, EncodingSet, LabelItems, PairEncoding,
};
pub use infer::{
    explain_pair, score_encoded, score_pair, ExplainedElement, Explanation, ImageExplanation,
    PairScore, Scorer,
};
pub use top::{mine_top, top_budget, train_top, CompatModel, TopElement, TopParams, TopRules};

/// Canonical (lexicographic) orientation of a class pair; `true` when the
/// inputs were swapped.
pub fn canonical_pair<'a>(a: &'a str, b: &'a str) -> ((&'a str, &'a str), bool) {
    if a <= b {
        ((a, b), false)
    } else {
        ((b, a), true)
    }
}
