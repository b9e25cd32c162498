//! Tokenizers shared by retrieval, embeddings and the lexical scorer.

/// Lowercased maximal runs of alphanumeric characters.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Like [`word_tokens`] but keeps apostrophes inside words and splits a contracted
/// negation into its own `n't` token ("isn't" -> "is", "n't").
pub fn nli_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let normalized = text.replace('\u{2019}', "'");
    for raw in normalized.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '_')) {
        let word = raw.trim_matches('\'').to_lowercase();
        if word.is_empty() {
            continue;
        }
        if word.len() > 3 && word.ends_with("n't") {
            out.push(word[..word.len() - 3].to_string());
            out.push("n't".to_string());
        } else {
            out.push(word);
        }
    }
    out
}

/// 64-bit FNV-1a; stable across platforms and releases.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_tokens_lowercase_alnum() {
        assert_eq!(word_tokens("Barack Obama, born 1961!"), vec!["barack", "obama", "born", "1961"]);
        assert!(word_tokens("...").is_empty());
    }

    #[test]
    fn nli_tokens_split_negation() {
        assert_eq!(nli_tokens("X isn't tall"), vec!["x", "is", "n't", "tall"]);
        assert_eq!(nli_tokens("X is not tall."), vec!["x", "is", "not", "tall"]);
        assert_eq!(nli_tokens("member_of"), vec!["member_of"]);
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }
}
