//! Base-level visual elements: mined activation patterns, their covering
//! regions, and one linear discriminant per pattern.

mod bank;
mod index;
mod lda;
mod select;

pub use bank::{
    mine_base_patterns, train_base_bank, BaseBank, BaseElement, BaseParams, BasePatterns,
    ClassRegions, MemberRef,
};
pub use index::{build_inverted_index, retrieve_members, InvertedIndex};
pub use lda::{
    fit_background, fit_background_with, score, train_lda, BackgroundStats, LdaClassifier,
    LdaSolver, LAMBDA_ABS,
};
pub use select::{dedup_patterns, select_elements};
