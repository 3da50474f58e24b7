//! Text preprocessing: tokenization, stop-word removal and stemming.
//!
//! Documents are processed independently and deterministically; the token
//! stream for a document is always the same for the same input bytes.

mod porter;

pub use porter::stem;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One corpus unit: an id unique within the corpus plus its raw text.
#[derive(Debug, Clone)]
pub struct Document {
    pub id: String,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
        }
    }
}

/// The fully processed token sequence of one document, in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

/// Lowercase stop words to delete after tokenization.
#[derive(Debug, Clone, Default)]
pub struct StopWordList {
    words: HashSet<String>,
}

impl StopWordList {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            words: words
                .into_iter()
                .map(|w| w.as_ref().to_lowercase())
                .collect(),
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// The stop list shipped with the crate (a standard English list).
    pub fn default_english() -> Self {
        Self::parse(include_str!("../../data/stopwords_en.txt"))
    }

    /// One word per line; `#` starts a comment, blank lines are skipped.
    fn parse(text: &str) -> Self {
        Self::new(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty()),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Folds a character to its lowercase ASCII base letter when a
/// single-character mapping exists; anything else is a token boundary.
fn fold_char(c: char) -> Option<char> {
    match c {
        'a'..='z' => Some(c),
        'A'..='Z' => Some(c.to_ascii_lowercase()),
        'à' | 'á' | 'â' | 'ã' | 'ä' | 'å' | 'ā' | 'ă' | 'ą' | 'À' | 'Á' | 'Â' | 'Ã' | 'Ä' | 'Å'
        | 'Ā' | 'Ă' | 'Ą' => Some('a'),
        'ç' | 'ć' | 'ĉ' | 'ċ' | 'č' | 'Ç' | 'Ć' | 'Ĉ' | 'Ċ' | 'Č' => Some('c'),
        'ď' | 'đ' | 'ð' | 'Ď' | 'Đ' | 'Ð' => Some('d'),
        'è' | 'é' | 'ê' | 'ë' | 'ē' | 'ĕ' | 'ė' | 'ę' | 'ě' | 'È' | 'É' | 'Ê' | 'Ë' | 'Ē' | 'Ĕ'
        | 'Ė' | 'Ę' | 'Ě' => Some('e'),
        'ĝ' | 'ğ' | 'ġ' | 'ģ' | 'Ĝ' | 'Ğ' | 'Ġ' | 'Ģ' => Some('g'),
        'ĥ' | 'ħ' | 'Ĥ' | 'Ħ' => Some('h'),
        'ì' | 'í' | 'î' | 'ï' | 'ĩ' | 'ī' | 'ĭ' | 'į' | 'ı' | 'Ì' | 'Í' | 'Î' | 'Ï' | 'Ĩ' | 'Ī'
        | 'Ĭ' | 'Į' | 'İ' => Some('i'),
        'ĵ' | 'Ĵ' => Some('j'),
        'ķ' | 'Ķ' => Some('k'),
        'ĺ' | 'ļ' | 'ľ' | 'ŀ' | 'ł' | 'Ĺ' | 'Ļ' | 'Ľ' | 'Ŀ' | 'Ł' => Some('l'),
        'ñ' | 'ń' | 'ņ' | 'ň' | 'ŋ' | 'Ñ' | 'Ń' | 'Ņ' | 'Ň' | 'Ŋ' => Some('n'),
        'ò' | 'ó' | 'ô' | 'õ' | 'ö' | 'ø' | 'ō' | 'ŏ' | 'ő' | 'Ò' | 'Ó' | 'Ô' | 'Õ' | 'Ö' | 'Ø'
        | 'Ō' | 'Ŏ' | 'Ő' => Some('o'),
        'ŕ' | 'ŗ' | 'ř' | 'Ŕ' | 'Ŗ' | 'Ř' => Some('r'),
        'ś' | 'ŝ' | 'ş' | 'š' | 'ſ' | 'Ś' | 'Ŝ' | 'Ş' | 'Š' => Some('s'),
        'ţ' | 'ť' | 'ŧ' | 'Ţ' | 'Ť' | 'Ŧ' => Some('t'),
        'ù' | 'ú' | 'û' | 'ü' | 'ũ' | 'ū' | 'ŭ' | 'ů' | 'ű' | 'ų' | 'Ù' | 'Ú' | 'Û' | 'Ü' | 'Ũ'
        | 'Ū' | 'Ŭ' | 'Ů' | 'Ű' | 'Ų' => Some('u'),
        'ŵ' | 'Ŵ' => Some('w'),
        'ý' | 'ÿ' | 'ŷ' | 'Ý' | 'Ÿ' | 'Ŷ' => Some('y'),
        'ź' | 'ż' | 'ž' | 'Ź' | 'Ż' | 'Ž' => Some('z'),
        _ => None,
    }
}

/// Lowercases, folds single-character diacritics to ASCII and splits on
/// everything else. Tokens shorter than two letters are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        match fold_char(c) {
            Some(f) => current.push(f),
            None => {
                if current.len() >= 2 {
                    tokens.push(std::mem::take(&mut current));
                } else {
                    current.clear();
                }
            }
        }
    }
    if current.len() >= 2 {
        tokens.push(current);
    }
    tokens
}

/// Deletes every stop word, preserving the relative order of the rest.
pub fn remove_stop_words(tokens: Vec<String>, stops: &StopWordList) -> Vec<String> {
    tokens.into_iter().filter(|t| !stops.contains(t)).collect()
}

/// tokenize -> remove_stop_words -> stem, per document.
pub fn process_corpus(docs: &[Document], stops: &StopWordList) -> Result<Vec<TokenStream>> {
    let mut seen = HashSet::new();
    for d in docs {
        if !seen.insert(d.id.as_str()) {
            return Err(Error::DuplicateDocumentId(d.id.clone()));
        }
    }
    Ok(docs
        .iter()
        .map(|d| TokenStream {
            doc_id: d.id.clone(),
            tokens: remove_stop_words(tokenize(&d.text), stops)
                .iter()
                .map(|t| stem(t))
                .collect(),
        })
        .collect())
}

/// Loads a corpus from either a directory of `.txt` files (id = relative
/// path) or a single file of `id<TAB>text` lines.
pub fn load_corpus(path: &Path) -> Result<Vec<Document>> {
    if path.is_dir() {
        load_corpus_dir(path)
    } else {
        load_corpus_tsv(path)
    }
}

fn load_corpus_dir(root: &Path) -> Result<Vec<Document>> {
    let mut files = Vec::new();
    collect_txt_files(root, root, &mut files)?;
    files.sort();
    files
        .into_iter()
        .map(|rel| {
            let full = root.join(&rel);
            let text =
                fs::read_to_string(&full).map_err(|e| Error::io(full.display().to_string(), e))?;
            let id = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            Ok(Document { id, text })
        })
        .collect()
}

fn collect_txt_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir.display().to_string(), e))?;
        let path = entry.path();
        if path.is_dir() {
            collect_txt_files(root, &path, out)?;
        } else if path.extension().is_some_and(|e| e == "txt") {
            out.push(path.strip_prefix(root).expect("under root").to_path_buf());
        }
    }
    Ok(())
}

fn load_corpus_tsv(path: &Path) -> Result<Vec<Document>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (id, body) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: i as u64 + 1,
            msg: "expected `id<TAB>text`".into(),
        })?;
        docs.push(Document::new(id, body));
    }
    Ok(docs)
}
