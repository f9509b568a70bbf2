use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CorpusError;
use crate::data::{RoleInventory, Sentence};

pub const PAD: usize = 0;
pub const UNK: usize = 1;

const PAD_TOKEN: &str = "<pad>";
const UNK_TOKEN: &str = "<unk>";
const VOCAB_VERSION: u32 = 1;

/// Word, character and role indices for a training corpus.
///
/// Words keep their casing; lookups fall back to the lowercased form
/// before mapping to UNK.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VocabFile", into = "VocabFile")]
pub struct Vocabulary {
    words: Vec<String>,
    word_counts: Vec<u64>,
    chars: Vec<String>,
    roles: RoleInventory,
    word_index: HashMap<String, usize>,
    char_index: HashMap<char, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    version: u32,
    words: Vec<String>,
    word_counts: Vec<u64>,
    chars: Vec<String>,
    roles: RoleInventory,
}

impl TryFrom<VocabFile> for Vocabulary {
    type Error = String;

    fn try_from(f: VocabFile) -> Result<Self, String> {
        if f.version != VOCAB_VERSION {
            return Err(format!("unsupported vocabulary version {}", f.version));
        }
        if f.words.len() != f.word_counts.len() || f.words.len() < 2 || f.chars.len() < 2 {
            return Err("inconsistent vocabulary tables".into());
        }
        let word_index = f
            .words
            .iter()
            .enumerate()
            .skip(2)
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let mut char_index = HashMap::new();
        for (i, c) in f.chars.iter().enumerate().skip(2) {
            let mut it = c.chars();
            match (it.next(), it.next()) {
                (Some(ch), None) => {
                    char_index.insert(ch, i);
                }
                _ => return Err(format!("character entry `{c}` is not a single character")),
            }
        }
        Ok(Vocabulary {
            words: f.words,
            word_counts: f.word_counts,
            chars: f.chars,
            roles: f.roles,
            word_index,
            char_index,
        })
    }
}

impl From<Vocabulary> for VocabFile {
    fn from(v: Vocabulary) -> Self {
        VocabFile {
            version: VOCAB_VERSION,
            words: v.words,
            word_counts: v.word_counts,
            chars: v.chars,
            roles: v.roles,
        }
    }
}

/// Indexes words seen at least `min_freq` times, every character, and every
/// gold role (after ε, in first-seen order).
pub fn build_vocab(corpus: &[Sentence], min_freq: u64) -> Result<Vocabulary, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut order: Vec<String> = Vec::new();
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut chars: Vec<char> = Vec::new();
    let mut seen_chars = std::collections::HashSet::new();
    let mut roles: Vec<String> = Vec::new();
    for s in corpus {
        for tok in s.tokens() {
            let c = counts.entry(tok.clone()).or_insert(0);
            if *c == 0 {
                order.push(tok.clone());
            }
            *c += 1;
            for ch in tok.chars() {
                if seen_chars.insert(ch) {
                    chars.push(ch);
                }
            }
        }
        for t in s.tuples() {
            roles.push(t.role.clone());
        }
    }

    let mut words = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
    let mut word_counts = vec![0, 0];
    for w in order {
        let c = counts[&w];
        if c >= min_freq.max(1) {
            words.push(w);
            word_counts.push(c);
        }
    }
    let mut char_table = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
    char_table.extend(chars.iter().map(|c| c.to_string()));
    let file = VocabFile {
        version: VOCAB_VERSION,
        words,
        word_counts,
        chars: char_table,
        roles: RoleInventory::new(roles),
    };
    Ok(Vocabulary::try_from(file).expect("freshly built tables are consistent"))
}

impl Vocabulary {
    pub fn num_words(&self) -> usize {
        self.words.len()
    }

    pub fn num_chars(&self) -> usize {
        self.chars.len()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn roles(&self) -> &RoleInventory {
        &self.roles
    }

    pub fn count(&self, index: usize) -> u64 {
        self.word_counts[index]
    }

    /// Exact match, then lowercase, then UNK.
    pub fn word_id(&self, word: &str) -> usize {
        if let Some(&i) = self.word_index.get(word) {
            return i;
        }
        self.word_index.get(&word.to_lowercase()).copied().unwrap_or(UNK)
    }

    pub fn char_id(&self, c: char) -> usize {
        self.char_index.get(&c).copied().unwrap_or(UNK)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        serde_json::from_str(text).map_err(|e| CorpusError::MalformedRecord {
            line: e.line(),
            reason: e.to_string(),
        })
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
