//! Tokenized treebank corpora.
//!
//! Only the FORM column of CoNLL-U is consumed. A "line" of a corpus is one
//! sentence, so size caps count sentences.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Default sentence cap for target-language corpora.
pub const DEFAULT_TARGET_CAP: usize = 500;
/// Default sentence cap for source-language corpora.
pub const DEFAULT_SOURCE_CAP: usize = 2000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedCorpus {
    language_code: String,
    sentences: Vec<Vec<String>>,
    provenance: String,
}

impl TokenizedCorpus {
    /// Builds a corpus, rejecting empty sentences and empty tokens.
    pub fn new(
        language_code: impl Into<String>,
        sentences: Vec<Vec<String>>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::NoSentences);
        }
        for (i, sentence) in sentences.iter().enumerate() {
            if sentence.is_empty() {
                return Err(Error::InvalidCorpus(format!("sentence {} has no tokens", i + 1)));
            }
            if sentence.iter().any(String::is_empty) {
                return Err(Error::InvalidCorpus(format!("sentence {} has an empty token", i + 1)));
            }
        }
        Ok(TokenizedCorpus {
            language_code: language_code.into(),
            sentences,
            provenance: provenance.into(),
        })
    }

    pub fn language_code(&self) -> &str {
        &self.language_code
    }

    pub fn sentences(&self) -> &[Vec<String>] {
        &self.sentences
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flatten().map(String::as_str)
    }

    /// Minimal CoNLL-U rendering: ID and FORM, all other columns `_`.
    pub fn to_conllu(&self) -> String {
        let mut out = String::new();
        for sentence in &self.sentences {
            for (i, token) in sentence.iter().enumerate() {
                let _ = writeln!(out, "{}\t{}\t_\t_\t_\t_\t_\t_\t_\t_", i + 1, token);
            }
            out.push('\n');
        }
        out
    }
}

/// Parses CoNLL-U text into sentences of FORM tokens.
///
/// Multiword-token ranges (`3-4`) and empty nodes (`5.1`) are skipped.
pub fn parse_conllu(bytes: &[u8], language_code: &str) -> Result<TokenizedCorpus> {
    parse_conllu_with_provenance(bytes, language_code, "")
}

pub fn parse_conllu_with_provenance(
    bytes: &[u8],
    language_code: &str,
    provenance: &str,
) -> Result<TokenizedCorpus> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: line_of_offset(bytes, e.valid_up_to()),
        message: "invalid UTF-8".to_string(),
    })?;

    let mut sentences = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let mut columns = line.split('\t');
        let id = columns.next().unwrap_or_default();
        let form = columns.next().ok_or_else(|| Error::Parse {
            line: line_no,
            message: "token line has fewer than 2 tab-separated columns".to_string(),
        })?;
        if id.contains('-') || id.contains('.') {
            continue;
        }
        if form.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                message: "empty FORM column".to_string(),
            });
        }
        current.push(form.to_string());
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    TokenizedCorpus::new(language_code, sentences, provenance)
}

fn line_of_offset(bytes: &[u8], offset: usize) -> usize {
    bytes[..offset].iter().filter(|&&b| b == b'\n').count() + 1
}

/// Reads and parses a CoNLL-U file.
pub fn read_conllu(path: &Path, language_code: &str) -> Result<TokenizedCorpus> {
    let bytes = std::fs::read(path)?;
    parse_conllu_with_provenance(&bytes, language_code, &path.display().to_string())
}

/// Keeps the first `max_sentences` sentences in file order.
pub fn cap_corpus(corpus: &TokenizedCorpus, max_sentences: usize) -> TokenizedCorpus {
    assert!(max_sentences >= 1, "cap must be positive");
    TokenizedCorpus {
        language_code: corpus.language_code.clone(),
        sentences: corpus.sentences.iter().take(max_sentences).cloned().collect(),
        provenance: corpus.provenance.clone(),
    }
}

/// Distinct token strings, optionally case-folded.
pub fn vocabulary(corpus: &TokenizedCorpus, casefold: bool) -> BTreeSet<String> {
    corpus
        .tokens()
        .map(|t| if casefold { t.to_lowercase() } else { t.to_string() })
        .collect()
}

pub fn token_count(corpus: &TokenizedCorpus) -> usize {
    corpus.sentences.iter().map(Vec::len).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(sentences: &[&[&str]]) -> TokenizedCorpus {
        TokenizedCorpus::new(
            "xxx",
            sentences
                .iter()
                .map(|s| s.iter().map(|t| t.to_string()).collect())
                .collect(),
            "",
        )
        .unwrap()
    }

    #[test]
    fn parses_two_sentences() {
        let text = "# sent_id = 1\n1\tThe\tthe\tDET\n2\tcat\tcat\tNOUN\n3\tsat\tsit\tVERB\n\n\
                    # sent_id = 2\n1\tIt\tit\tPRON\n2\tran\trun\tVERB\n";
        let c = parse_conllu(text.as_bytes(), "eng").unwrap();
        let lens: Vec<_> = c.sentences().iter().map(Vec::len).collect();
        assert_eq!(lens, vec![3, 2]);
        assert_eq!(c.sentences()[0], vec!["The", "cat", "sat"]);
    }

    #[test]
    fn skips_multiword_ranges_and_empty_nodes() {
        let text = "1\tIl\til\n2\tparle\tparler\n3-4\tdu\t_\n3\tde\tde\n4\tle\tle\n4.1\tfoo\tfoo\n5\tchat\tchat\n";
        let c = parse_conllu(text.as_bytes(), "fra").unwrap();
        assert_eq!(c.sentences()[0], vec!["Il", "parle", "de", "le", "chat"]);
    }

    #[test]
    fn comment_only_file_has_no_sentences() {
        let err = parse_conllu(b"# a\n# b\n\n", "xxx").unwrap_err();
        assert_eq!(err.to_string(), "no sentences");
        assert!(matches!(parse_conllu(b"", "xxx"), Err(Error::NoSentences)));
    }

    #[test]
    fn short_token_line_reports_line_number() {
        let err = parse_conllu(b"1\ta\n2\n", "xxx").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn handles_crlf() {
        let c = parse_conllu(b"1\ta\r\n2\tb\r\n\r\n1\tc\r\n", "xxx").unwrap();
        assert_eq!(c.sentences(), &[vec!["a", "b"], vec!["c"]]);
    }

    #[test]
    fn cap_takes_prefix() {
        let sentences: Vec<Vec<String>> = (0..3000).map(|i| vec![format!("w{i}")]).collect();
        let c = TokenizedCorpus::new("xxx", sentences.clone(), "").unwrap();
        let capped = cap_corpus(&c, DEFAULT_SOURCE_CAP);
        assert_eq!(capped.len(), 2000);
        assert_eq!(capped.sentences(), &sentences[..2000]);
        assert_eq!(cap_corpus(&capped, 2000), capped);

        let small = cap_corpus(&c, 5000);
        assert_eq!(small, c);
    }

    #[test]
    fn vocabulary_and_counts() {
        let c = corpus(&[&["the", "cat"], &["the", "mat"]]);
        let v = vocabulary(&c, false);
        assert_eq!(v.len(), 3);
        assert!(v.contains("mat"));
        assert_eq!(token_count(&c), 4);

        let one = corpus(&[&["a"]]);
        assert_eq!(vocabulary(&one, false).len(), 1);
        assert_eq!(token_count(&one), 1);

        let folded = corpus(&[&["The", "the"]]);
        assert_eq!(vocabulary(&folded, true).len(), 1);
        assert_eq!(vocabulary(&folded, false).len(), 2);
    }

    #[test]
    fn rejects_empty_sentence() {
        assert!(TokenizedCorpus::new("x", vec![vec![]], "").is_err());
        assert!(TokenizedCorpus::new("x", vec![vec![String::new()]], "").is_err());
    }
}
