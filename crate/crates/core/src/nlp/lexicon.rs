use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    /// common noun
    N,
    /// proper noun
    Np,
    V,
    A,
    /// preposition
    E,
    P,
    /// question word or phrase
    QW,
    /// numeral
    M,
    /// conjunction
    C,
    X,
}

impl Tag {
    pub const ALL: [Tag; 10] = [Tag::N, Tag::Np, Tag::V, Tag::A, Tag::E, Tag::P, Tag::QW, Tag::M, Tag::C, Tag::X];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::N => "N",
            Tag::Np => "Np",
            Tag::V => "V",
            Tag::A => "A",
            Tag::E => "E",
            Tag::P => "P",
            Tag::QW => "QW",
            Tag::M => "M",
            Tag::C => "C",
            Tag::X => "X",
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown tag `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexEntry {
    /// Allowed tags, most frequent first.
    pub tags: Vec<Tag>,
    pub log_freq: f64,
}

#[derive(Debug, Error, PartialEq)]
#[error("lexicon line {line}: {message}")]
pub struct LexiconError {
    pub line: usize,
    pub message: String,
}

/// Word list keyed by lowercase syllables joined with single spaces.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, LexEntry>,
    max_syllables: usize,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parse `word<TAB>tag1,tag2<TAB>logfreq` lines; `#` lines and blanks are ignored.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| LexiconError { line: i + 1, message };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 tab-separated fields, got {}", fields.len())));
            }
            let tags = fields[1]
                .split(',')
                .map(|t| t.trim().parse::<Tag>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            let log_freq: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| err(format!("bad log-frequency `{}`", fields[2])))?;
            lex.insert(fields[0], tags, log_freq).map_err(err)?;
        }
        Ok(lex)
    }

    pub fn insert(&mut self, word: &str, tags: Vec<Tag>, log_freq: f64) -> Result<(), String> {
        let key = normalize_word(word);
        if key.is_empty() {
            return Err("empty word".into());
        }
        if tags.is_empty() {
            return Err(format!("`{word}` has no tags"));
        }
        if !log_freq.is_finite() {
            return Err(format!("`{word}` has a non-finite frequency"));
        }
        self.max_syllables = self.max_syllables.max(key.split(' ').count());
        self.entries.insert(key, LexEntry { tags, log_freq });
        Ok(())
    }

    /// Look up a word given as syllables joined by spaces or underscores, any case.
    pub fn get(&self, word: &str) -> Option<&LexEntry> {
        self.entries.get(&normalize_word(word))
    }

    pub fn get_syllables(&self, syllables: &[&str]) -> Option<&LexEntry> {
        self.entries.get(&syllables.join(" ").to_lowercase())
    }

    pub fn max_syllables(&self) -> usize {
        self.max_syllables
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = (&str, &LexEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }
}

fn normalize_word(word: &str) -> String {
    word.split(|c: char| c == '_' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// One surface form per line, compared case-insensitively with underscores.
#[derive(Debug, Clone, Default)]
pub struct Stoplist(HashSet<String>);

impl Stoplist {
    pub fn parse(text: &str) -> Self {
        Stoplist(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| l.replace(' ', "_").to_lowercase())
                .collect(),
        )
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.0.contains(&surface.to_lowercase())
    }

    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        Stoplist(words.into_iter().map(|w| w.replace(' ', "_").to_lowercase()).collect())
    }
}
