pub mod bleu;
pub mod canon;
pub mod corpus;
pub mod db;
pub mod diversity;
pub mod domain;
pub mod error;
pub mod normalize;
pub mod ontology;
pub mod overlap;
pub mod report;
pub mod success;
pub mod tokenizer;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/normalization.md")]
    mod normalization {}
    #[doc = include_str!("../../../book/src/bleu.md")]
    mod bleu {}
    #[doc = include_str!("../../../book/src/database.md")]
    mod database {}
    #[doc = include_str!("../../../book/src/inform-success.md")]
    mod inform_success {}
    #[doc = include_str!("../../../book/src/diversity.md")]
    mod diversity {}
    #[doc = include_str!("../../../book/src/overlap.md")]
    mod overlap {}
    #[doc = include_str!("../../../book/src/reports.md")]
    mod reports {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
