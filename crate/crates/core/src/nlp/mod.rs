//! Vietnamese question preprocessing: segmentation, tagging and keyword extraction.

mod lexicon;
mod segment;

use serde::{Deserialize, Serialize};

pub use lexicon::{LexEntry, Lexicon, LexiconError, Stoplist, Tag};
pub use segment::{
    is_punctuation, segment, segment_scored, segment_with, syllabify, SegmentConfig, Token,
    DEFAULT_UNKNOWN_PENALTY,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    #[serde(flatten)]
    pub token: Token,
    pub tag: Tag,
}

impl TaggedToken {
    pub fn surface(&self) -> &str {
        &self.token.surface
    }
}

/// Tag each token:
/// 1. a lexicon word with a single tag takes it;
/// 2. a multi-syllable question phrase is QW;
/// 3. a capitalized word outside the lexicon is Np;
/// 4. other lexicon words take their most frequent (first listed) tag;
/// 5. anything else is N (M for digits, X for punctuation).
pub fn tag(tokens: &[Token], lexicon: &Lexicon) -> Vec<TaggedToken> {
    tokens
        .iter()
        .map(|t| TaggedToken { token: t.clone(), tag: tag_one(t, lexicon) })
        .collect()
}

fn tag_one(token: &Token, lexicon: &Lexicon) -> Tag {
    let surface = token.surface.as_str();
    if is_punctuation(surface) {
        return Tag::X;
    }
    match lexicon.get(surface) {
        Some(entry) if entry.tags.len() == 1 => entry.tags[0],
        Some(entry) if token.syllable_count() > 1 && entry.tags.contains(&Tag::QW) => Tag::QW,
        Some(entry) => entry.tags[0],
        None if surface.chars().next().is_some_and(char::is_uppercase) => Tag::Np,
        None if surface.chars().any(|c| c.is_ascii_digit())
            && surface.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '_')) =>
        {
            Tag::M
        }
        None => Tag::N,
    }
}

/// Drop prepositions, conjunctions, punctuation, question words and stop words.
pub fn extract_keywords(tagged: &[TaggedToken], stoplist: &Stoplist) -> Vec<TaggedToken> {
    tagged
        .iter()
        .filter(|t| !matches!(t.tag, Tag::E | Tag::C | Tag::X | Tag::QW))
        .filter(|t| !stoplist.contains(t.surface()))
        .cloned()
        .collect()
}

/// The question-word token, if any.
pub fn question_word(tagged: &[TaggedToken]) -> Option<&TaggedToken> {
    tagged.iter().find(|t| t.tag == Tag::QW)
}
