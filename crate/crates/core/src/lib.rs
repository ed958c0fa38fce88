//! Morphological analysis toolkit for agglutinative languages.
//!
//! The crate is organised as a pipeline of largely independent layers:
//!
//! * [`twolevel`] — declarative lexical/surface correspondence rules and
//!   their compiled finite-state recognizers.
//! * [`lexicon`] — lexicon files with continuation-class morphotactics,
//!   compiled into a trie-shaped [`lexicon::MorphNetwork`] with bounded
//!   genitive re-entry links and optional guesser arcs.
//! * [`analyzer`] — word-form analysis and generation over the compiled
//!   network, including intraword noun-ellipsis readings and compound
//!   marking.
//! * [`tagset`] — the four-level tag projection scheme with composed
//!   ellipsis tags and indexed compound tags.
//! * [`corpus`] — tokenization, cohort-stream serialization, ambiguity
//!   statistics and evaluation.
//! * [`disambiguator`] — reductionist constraint rules followed by an
//!   n-gram statistical decoder.
//!
//! All compiled artifacts (rule sets, networks, tagset configurations,
//! trained models) are immutable after construction and can be shared
//! freely across threads.

pub mod analyzer;
pub mod corpus;
pub mod disambiguator;
pub mod lexicon;
pub mod tagset;
pub mod twolevel;
