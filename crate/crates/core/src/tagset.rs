//! The four-level tagset.
//!
//! Level 1 is the bare category, transformed by ellipsis composition,
//! compound indexing and derivation mapping; level 2 refines it with the
//! subcategory; level 3 appends user-chosen feature values; level 4 is the
//! canonical rendering of the whole analysis, the same string the cohort
//! format stores.
//!
//! Config file (`.tgs`):
//!
//! ```text
//! CATEGORY NOUN OPEN ;
//! SUBCAT VERB SIMPLE COMPOUND ;
//! L3DEFAULT case num ;
//! DERIV VERB + tze -> VERBAL_NOUN ;
//! ```

use std::collections::{BTreeMap, HashSet};

use thiserror::Error;

use crate::analyzer::{Analysis, Source};
use crate::twolevel::Pos;

/// How many general categories the shipped configuration defines.
pub const EXPECTED_CATEGORY_COUNT: usize = 17;

const DEFAULT_ELLIPSIS_PATTERN: &str = "{base}_WITH_{elided}_ELLIPSIS";

/// A projected tag at one of the four levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tag {
    pub level: u8,
    pub label: String,
    /// Feature keys used for a level-3 projection, in order.
    pub params_used: Vec<String>,
}

/// Level-3 parameter choice: an ordered subset of feature keys.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Level3Params {
    pub keys: Vec<String>,
}

impl Level3Params {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(keys: I) -> Level3Params {
        Level3Params {
            keys: keys.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Error)]
pub enum TagsetError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: duplicate category `{name}`")]
    DuplicateCategory { pos: Pos, name: String },
    #[error("{pos}: unknown category `{name}`")]
    UnknownCategory { pos: Pos, name: String },
    #[error("{pos}: derivation target `{name}` collides with a category id")]
    DerivTargetCollision { pos: Pos, name: String },
    #[error("analysis category `{0}` is not in the tagset")]
    UnknownAnalysisCategory(String),
    #[error("cannot tag an empty cohort")]
    EmptyCohort,
}

/// Validated tagset configuration. Immutable after load.
#[derive(Debug, Clone)]
pub struct TagsetConfig {
    categories: Vec<String>,
    open: HashSet<String>,
    subcategories: BTreeMap<String, Vec<String>>,
    level3_default_params: Vec<String>,
    derivation_map: Vec<((String, String), String)>,
    ellipsis_tag_pattern: String,
}

impl TagsetConfig {
    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn has_category(&self, id: &str) -> bool {
        self.categories.iter().any(|c| c == id)
    }

    /// Open categories admit new members and are available to the guesser.
    pub fn is_open(&self, id: &str) -> bool {
        self.open.contains(id)
    }

    pub fn subcategories(&self, cat: &str) -> &[String] {
        self.subcategories
            .get(cat)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn level3_default_params(&self) -> &[String] {
        &self.level3_default_params
    }

    pub fn derivation_map(&self) -> &[((String, String), String)] {
        &self.derivation_map
    }

    /// Conformance findings for `--strict` mode.
    pub fn strict_diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.categories.len() != EXPECTED_CATEGORY_COUNT {
            out.push(format!(
                "tagset declares {} categories (expected {})",
                self.categories.len(),
                EXPECTED_CATEGORY_COUNT
            ));
        }
        out
    }
}

/// Parse and validate a `.tgs` file.
pub fn load_tagset(text: &str) -> Result<TagsetConfig, TagsetError> {
    let mut categories: Vec<String> = Vec::new();
    let mut open = HashSet::new();
    let mut subcategories: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut level3_default_params = Vec::new();
    let mut derivs: Vec<(Pos, (String, String), String)> = Vec::new();
    let mut ellipsis_tag_pattern = DEFAULT_ELLIPSIS_PATTERN.to_string();

    for (ln, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let pos = Pos {
            line: ln + 1,
            col: 1,
        };
        let body = line.strip_suffix(';').unwrap_or(line).trim();
        let toks: Vec<&str> = body.split_whitespace().collect();
        match toks.first().copied() {
            Some("CATEGORY") => {
                let name = toks.get(1).ok_or_else(|| TagsetError::Syntax {
                    pos,
                    msg: "CATEGORY needs an id".into(),
                })?;
                if categories.iter().any(|c| c == name) {
                    return Err(TagsetError::DuplicateCategory {
                        pos,
                        name: name.to_string(),
                    });
                }
                categories.push(name.to_string());
                if toks.get(2) == Some(&"OPEN") {
                    open.insert(name.to_string());
                }
            }
            Some("SUBCAT") => {
                let cat = toks.get(1).ok_or_else(|| TagsetError::Syntax {
                    pos,
                    msg: "SUBCAT needs a category".into(),
                })?;
                if !categories.iter().any(|c| c == cat) {
                    return Err(TagsetError::UnknownCategory {
                        pos,
                        name: cat.to_string(),
                    });
                }
                subcategories
                    .entry(cat.to_string())
                    .or_default()
                    .extend(toks[2..].iter().map(|s| s.to_string()));
            }
            Some("L3DEFAULT") => {
                level3_default_params = toks[1..].iter().map(|s| s.to_string()).collect();
            }
            Some("DERIV") => {
                if toks.len() != 6 || toks[2] != "+" || toks[4] != "->" {
                    return Err(TagsetError::Syntax {
                        pos,
                        msg: "expected `DERIV <cat> + <suffix> -> <id>`".into(),
                    });
                }
                if !categories.iter().any(|c| c == toks[1]) {
                    return Err(TagsetError::UnknownCategory {
                        pos,
                        name: toks[1].to_string(),
                    });
                }
                derivs.push((
                    pos,
                    (toks[1].to_string(), toks[3].to_string()),
                    toks[5].to_string(),
                ));
            }
            Some("ELLIPSIS-PATTERN") => {
                ellipsis_tag_pattern = toks
                    .get(1)
                    .ok_or_else(|| TagsetError::Syntax {
                        pos,
                        msg: "ELLIPSIS-PATTERN needs a template".into(),
                    })?
                    .to_string();
            }
            Some(other) => {
                return Err(TagsetError::Syntax {
                    pos,
                    msg: format!("unknown declaration `{other}`"),
                })
            }
            None => {}
        }
    }

    let mut derivation_map = Vec::new();
    for (pos, key, target) in derivs {
        if categories.iter().any(|c| c == &target) {
            return Err(TagsetError::DerivTargetCollision { pos, name: target });
        }
        derivation_map.push((key, target));
    }

    Ok(TagsetConfig {
        categories,
        open,
        subcategories,
        level3_default_params,
        derivation_map,
        ellipsis_tag_pattern,
    })
}

/// Composed-category id for a derivational suffix, when mapped.
pub fn apply_derivation_tag<'a>(
    stem_category: &str,
    suffix_gloss: &str,
    cfg: &'a TagsetConfig,
) -> Option<&'a str> {
    cfg.derivation_map
        .iter()
        .find(|((c, g), _)| c == stem_category && g == suffix_gloss)
        .map(|(_, t)| t.as_str())
}

/// Composed label for an analysis with a nonempty ellipsis chain.
pub fn compose_ellipsis_tag(
    base: &str,
    chain: &[crate::analyzer::EllipsisSlot],
    cfg: &TagsetConfig,
) -> String {
    if chain.is_empty() {
        return base.to_string();
    }
    let elided = chain
        .last()
        .map(|s| s.elided_category.as_str())
        .unwrap_or("NOUN");
    let mut label = cfg
        .ellipsis_tag_pattern
        .replace("{base}", base)
        .replace("{elided}", elided);
    if chain.len() > 1 {
        label.push_str(&format!("_{}", chain.len()));
    }
    label
}

fn base_label(a: &Analysis) -> &str {
    a.derived_category.as_deref().unwrap_or_else(|| a.category())
}

/// Project an analysis to a tag at the given level.
///
/// Levels 1–3 each refine the previous one; level 4 is the canonical
/// rendering used by the cohort format. `params` applies at level 3 only
/// and falls back to the configured defaults.
pub fn project_tag(
    a: &Analysis,
    level: u8,
    params: Option<&Level3Params>,
    cfg: &TagsetConfig,
) -> Result<Tag, TagsetError> {
    let cat = a.category();
    if !cfg.has_category(cat) {
        return Err(TagsetError::UnknownAnalysisCategory(cat.to_string()));
    }
    let l1 = compose_ellipsis_tag(base_label(a), &a.ellipsis_chain, cfg);
    let indexed = |label: String| match a.compound_index {
        Some((i, _)) => format!("{label}({i})"),
        None => label,
    };
    match level {
        1 => Ok(Tag {
            level: 1,
            label: indexed(l1),
            params_used: Vec::new(),
        }),
        2 => {
            let mut label = l1;
            if let Some(sub) = a.features.get("sub") {
                label.push('+');
                label.push_str(sub);
            }
            Ok(Tag {
                level: 2,
                label: indexed(label),
                params_used: Vec::new(),
            })
        }
        3 => {
            let default = Level3Params {
                keys: cfg.level3_default_params.clone(),
            };
            let params = params.unwrap_or(&default);
            let mut label = l1;
            if let Some(sub) = a.features.get("sub") {
                label.push('+');
                label.push_str(sub);
            }
            for k in &params.keys {
                label.push('+');
                match a.features.get(k) {
                    Some(v) => label.push_str(v),
                    None => label.push_str(&format!("{k}=∅")),
                }
            }
            Ok(Tag {
                level: 3,
                label: indexed(label),
                params_used: params.keys.clone(),
            })
        }
        _ => Ok(Tag {
            level: 4,
            label: render_level4(a),
            params_used: Vec::new(),
        }),
    }
}

/// The canonical full-analysis rendering: lemma, category, sorted features,
/// ellipsis chain, compound index, derivation, segmentation and source.
pub fn render_level4(a: &Analysis) -> String {
    let mut atoms: Vec<String> = Vec::new();
    atoms.push(format!("\"{}\"", a.lemma));
    atoms.push(a.category().to_string());
    for (k, v) in &a.features {
        if k != "cat" {
            atoms.push(format!("{k}={v}"));
        }
    }
    for slot in &a.ellipsis_chain {
        let infl: Vec<String> = slot
            .inflection
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        atoms.push(format!(
            "ellipsis={}:{}",
            slot.elided_category,
            infl.join(",")
        ));
    }
    if let Some((i, n)) = a.compound_index {
        atoms.push(format!("compound={i}/{n}"));
    }
    if let Some(d) = &a.derived_category {
        atoms.push(format!("deriv={d}"));
    }
    atoms.push(format!("seg={}", a.segmentation_string()));
    atoms.push(format!(
        "src={}",
        match a.source {
            Source::Lexicon => "lexicon",
            Source::Variant => "variant",
            Source::Guesser => "guesser",
        }
    ));
    if !a.standard {
        atoms.push("nonstd".to_string());
    }
    atoms.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzer::EllipsisSlot;
    use std::collections::BTreeMap;

    fn toy_cfg() -> TagsetConfig {
        load_tagset(
            "CATEGORY NOUN OPEN ;\nCATEGORY VERB OPEN ;\nCATEGORY ADJECTIVE OPEN ;\n\
             SUBCAT VERB SIMPLE COMPOUND ;\nL3DEFAULT case num ;\nDERIV VERB + tze -> VERBAL_NOUN ;",
        )
        .unwrap()
    }

    fn slot() -> EllipsisSlot {
        EllipsisSlot {
            elided_category: "NOUN".into(),
            inflection: BTreeMap::new(),
        }
    }

    #[test]
    fn duplicate_category_rejected() {
        let err = load_tagset("CATEGORY NOUN ;\nCATEGORY NOUN ;").unwrap_err();
        assert!(matches!(err, TagsetError::DuplicateCategory { .. }));
    }

    #[test]
    fn deriv_target_collision_rejected() {
        let err = load_tagset("CATEGORY NOUN ;\nCATEGORY VERB ;\nDERIV VERB + tze -> NOUN ;")
            .unwrap_err();
        assert!(matches!(err, TagsetError::DerivTargetCollision { .. }));
    }

    #[test]
    fn ellipsis_composition() {
        let cfg = toy_cfg();
        assert_eq!(
            compose_ellipsis_tag("NOUN", &[slot()], &cfg),
            "NOUN_WITH_NOUN_ELLIPSIS"
        );
        assert_eq!(
            compose_ellipsis_tag("ADJECTIVE", &[slot(), slot()], &cfg),
            "ADJECTIVE_WITH_NOUN_ELLIPSIS_2"
        );
        assert_eq!(compose_ellipsis_tag("NOUN", &[], &cfg), "NOUN");
    }

    #[test]
    fn derivation_mapping() {
        let cfg = toy_cfg();
        assert_eq!(
            apply_derivation_tag("VERB", "tze", &cfg),
            Some("VERBAL_NOUN")
        );
        assert_eq!(apply_derivation_tag("NOUN", "tze", &cfg), None);
        assert_eq!(apply_derivation_tag("VERB", "zzz", &cfg), None);
    }
}
