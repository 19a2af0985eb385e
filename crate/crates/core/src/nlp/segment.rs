//! Dictionary lattice segmentation.
//!
//! Arcs are lexicon words over contiguous syllables, plus a fallback arc for
//! every single syllable the lexicon lacks. The best path maximizes the sum of
//! arc log-frequencies; ties prefer fewer tokens, then a longer leftmost token.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::lexicon::{Lexicon, Tag};

pub const DEFAULT_UNKNOWN_PENALTY: f64 = -10.0;

const PUNCTUATION: &[char] = &['?', '!', ',', ';', ':', '"', '(', ')', '…', '“', '”', '\''];
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// Syllables joined by `_`, original casing.
    pub surface: String,
    /// Half-open syllable range `[start, end)`.
    pub span: (usize, usize),
}

impl Token {
    pub fn syllable_count(&self) -> usize {
        self.span.1 - self.span.0
    }
}

pub fn is_punctuation(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| PUNCTUATION.contains(&c) || c == '.')
}

/// NFC-normalize and split into syllables, detaching punctuation.
pub fn syllabify(text: &str) -> Vec<String> {
    let text: String = text.nfc().collect();
    let chunks: Vec<&str> = text.split_whitespace().collect();
    let mut out = Vec::new();
    for (ci, chunk) in chunks.iter().enumerate() {
        let last = ci + 1 == chunks.len();
        let mut body: &str = chunk;
        let mut lead = Vec::new();
        while let Some(c) = body.chars().next().filter(|c| PUNCTUATION.contains(c)) {
            lead.push(c.to_string());
            body = &body[c.len_utf8()..];
        }
        let mut trail = Vec::new();
        loop {
            let Some(c) = body.chars().next_back() else { break };
            // a dot ends the sentence only at the very end (keeps abbreviations like "TP.")
            let detach = PUNCTUATION.contains(&c) || (c == '.' && (last || body.len() == 1));
            if !detach {
                break;
            }
            trail.push(c.to_string());
            body = &body[..body.len() - c.len_utf8()];
        }
        out.extend(lead);
        if !body.is_empty() {
            out.push(body.to_string());
        }
        out.extend(trail.into_iter().rev());
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct SegmentConfig {
    pub unknown_penalty: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self { unknown_penalty: DEFAULT_UNKNOWN_PENALTY }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Arc {
    len: usize,
    score: f64,
    known: bool,
}

/// Arcs leaving position `i`.
fn arcs_from(syllables: &[&str], i: usize, lexicon: &Lexicon, cfg: &SegmentConfig) -> Vec<Arc> {
    if is_punctuation(syllables[i]) {
        return vec![Arc { len: 1, score: 0.0, known: true }];
    }
    let mut arcs = Vec::new();
    let max = lexicon.max_syllables().max(1).min(syllables.len() - i);
    for len in 1..=max {
        let span = &syllables[i..i + len];
        if len > 1 && span.iter().any(|s| is_punctuation(s)) {
            break;
        }
        match lexicon.get_syllables(span) {
            Some(entry) => arcs.push(Arc { len, score: entry.log_freq, known: true }),
            None if len == 1 => arcs.push(Arc { len, score: cfg.unknown_penalty, known: false }),
            None => {}
        }
    }
    arcs
}

#[derive(Debug, Clone, Copy)]
struct Best {
    score: f64,
    tokens: usize,
    first: Option<Arc>,
}

/// Better by score, then fewer tokens, then longer first arc.
fn better(a: (f64, usize, usize), b: (f64, usize, usize)) -> bool {
    if a.0 > b.0 + EPS {
        return true;
    }
    if a.0 < b.0 - EPS {
        return false;
    }
    (a.1, std::cmp::Reverse(a.2)) < (b.1, std::cmp::Reverse(b.2))
}

/// Best path over `syllables`, as (arcs, score).
fn best_path(syllables: &[&str], lexicon: &Lexicon, cfg: &SegmentConfig) -> (Vec<(usize, Arc)>, f64) {
    let n = syllables.len();
    // best[i] covers the suffix starting at syllable i
    let mut best: Vec<Best> = vec![Best { score: 0.0, tokens: 0, first: None }; n + 1];
    for i in (0..n).rev() {
        let mut chosen: Option<Best> = None;
        for arc in arcs_from(syllables, i, lexicon, cfg) {
            let rest = best[i + arc.len];
            let cand = Best { score: arc.score + rest.score, tokens: rest.tokens + 1, first: Some(arc) };
            let replace = match &chosen {
                None => true,
                Some(c) => better(
                    (cand.score, cand.tokens, arc.len),
                    (c.score, c.tokens, c.first.unwrap().len),
                ),
            };
            if replace {
                chosen = Some(cand);
            }
        }
        best[i] = chosen.expect("a single-syllable arc always exists");
    }
    let mut path = Vec::new();
    let mut i = 0;
    while i < n {
        let arc = best[i].first.unwrap();
        path.push((i, arc));
        i += arc.len;
    }
    (path, best[0].score)
}

/// Longest question-word phrase ending the sentence (ignoring trailing punctuation).
fn tail_question_phrase(syllables: &[&str], lexicon: &Lexicon) -> Option<(usize, usize)> {
    let mut end = syllables.len();
    while end > 0 && is_punctuation(syllables[end - 1]) {
        end -= 1;
    }
    let max = lexicon.max_syllables().min(end);
    (2..=max).rev().find_map(|len| {
        let start = end - len;
        let entry = lexicon.get_syllables(&syllables[start..end])?;
        entry.tags.contains(&Tag::QW).then_some((start, end))
    })
}

/// Segment with the lattice only; returns the tokens and the path score.
pub fn segment_scored(text: &str, lexicon: &Lexicon, cfg: &SegmentConfig) -> (Vec<Token>, f64) {
    let owned = syllabify(text);
    let syllables: Vec<&str> = owned.iter().map(String::as_str).collect();
    let (path, score) = best_path(&syllables, lexicon, cfg);
    (tokens_from_path(&syllables, &path), score)
}

/// Full segmentation: pin a sentence-final question phrase, run the lattice on
/// the rest, then merge runs of capitalized unknown syllables into proper nouns.
pub fn segment_with(text: &str, lexicon: &Lexicon, cfg: &SegmentConfig) -> Vec<Token> {
    let owned = syllabify(text);
    let syllables: Vec<&str> = owned.iter().map(String::as_str).collect();
    if syllables.is_empty() {
        return Vec::new();
    }
    let mut path = match tail_question_phrase(&syllables, lexicon) {
        Some((start, end)) => {
            let (mut head, _) = best_path(&syllables[..start], lexicon, cfg);
            head.push((start, Arc { len: end - start, score: 0.0, known: true }));
            let (tail, _) = best_path(&syllables[end..], lexicon, cfg);
            head.extend(tail.into_iter().map(|(i, a)| (i + end, a)));
            head
        }
        None => best_path(&syllables, lexicon, cfg).0,
    };
    merge_proper_nouns(&syllables, &mut path);
    tokens_from_path(&syllables, &path)
}

pub fn segment(text: &str, lexicon: &Lexicon) -> Vec<Token> {
    segment_with(text, lexicon, &SegmentConfig::default())
}

fn is_capitalized(s: &str) -> bool {
    s.chars().next().is_some_and(char::is_uppercase)
}

fn merge_proper_nouns(syllables: &[&str], path: &mut Vec<(usize, Arc)>) {
    let mut merged: Vec<(usize, Arc)> = Vec::with_capacity(path.len());
    for &(start, arc) in path.iter() {
        let proper = !arc.known && is_capitalized(syllables[start]);
        if proper {
            if let Some((pstart, parc)) = merged.last_mut() {
                if !parc.known && is_capitalized(syllables[*pstart]) {
                    parc.len += arc.len;
                    parc.score += arc.score;
                    continue;
                }
            }
        }
        merged.push((start, arc));
    }
    *path = merged;
}

fn tokens_from_path(syllables: &[&str], path: &[(usize, Arc)]) -> Vec<Token> {
    path.iter()
        .map(|&(start, arc)| Token {
            surface: syllables[start..start + arc.len].join("_"),
            span: (start, start + arc.len),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex(entries: &[(&str, &str, f64)]) -> Lexicon {
        let mut l = Lexicon::new();
        for (w, t, f) in entries {
            l.insert(w, t.split(',').map(|t| t.parse().unwrap()).collect(), *f).unwrap();
        }
        l
    }

    fn surfaces(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.surface.as_str()).collect()
    }

    #[test]
    fn syllabify_detaches_punctuation() {
        assert_eq!(syllabify("FPT là ai?"), vec!["FPT", "là", "ai", "?"]);
        assert_eq!(syllabify("UBND TP. Hà Nội."), vec!["UBND", "TP.", "Hà", "Nội", "."]);
        assert_eq!(syllabify("  \t"), Vec::<String>::new());
    }

    #[test]
    fn overlap_ambiguity_follows_frequencies() {
        let left = lex(&[("thuộc địa", "N", -3.0), ("địa bàn", "N", -5.0), ("thuộc", "V", -4.0), ("bàn", "N", -4.0), ("địa", "N", -6.0)]);
        assert_eq!(surfaces(&segment("thuộc địa bàn", &left)), vec!["thuộc_địa", "bàn"]);
        let right = lex(&[("thuộc địa", "N", -5.0), ("địa bàn", "N", -3.0), ("thuộc", "V", -4.0), ("bàn", "N", -4.0), ("địa", "N", -6.0)]);
        assert_eq!(surfaces(&segment("thuộc địa bàn", &right)), vec!["thuộc", "địa_bàn"]);
    }

    #[test]
    fn ties_prefer_fewer_tokens_then_leftmost_longest() {
        // a b c: (a b)(c) and (a)(b c) score equally; (a)(b)(c) too but with more tokens
        let l = lex(&[("a b", "N", -2.0), ("b c", "N", -2.0), ("a", "N", -1.0), ("b", "N", -1.0), ("c", "N", -1.0)]);
        assert_eq!(surfaces(&segment("a b c", &l)), vec!["a_b", "c"]);
    }

    #[test]
    fn single_known_syllable() {
        let l = lex(&[("ai", "P", -2.0)]);
        let t = segment("ai", &l);
        assert_eq!(t, vec![Token { surface: "ai".into(), span: (0, 1) }]);
        assert!(segment("", &l).is_empty());
    }

    #[test]
    fn capitalized_unknowns_merge() {
        let l = lex(&[("dân số", "N", -4.0), ("của", "E", -2.0), ("là bao nhiêu", "QW", -3.0)]);
        assert_eq!(
            surfaces(&segment("Dân số của Hà Nội là bao nhiêu?", &l)),
            vec!["Dân_số", "của", "Hà_Nội", "là_bao_nhiêu", "?"]
        );
    }

    #[test]
    fn tail_question_phrase_is_pinned() {
        // the lattice alone would prefer (là những)(ai)
        let l = lex(&[("là những", "V", -1.0), ("ai", "P", -1.0), ("là những ai", "QW", -9.0)]);
        assert_eq!(surfaces(&segment("FPT là những ai", &l)), vec!["FPT", "là_những_ai"]);
        let (plain, _) = segment_scored("FPT là những ai", &l, &SegmentConfig::default());
        assert_eq!(surfaces(&plain), vec!["FPT", "là_những", "ai"]);
    }
}
