//! Word tokenization and edit distance.

/// A token with its byte span in the source string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Lower-cased token text.
    pub text: String,
    /// Original spelling as it appears in the source.
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_joiner(c)
}

fn is_joiner(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

/// Splits `text` into lower-cased word tokens.
///
/// A token is a maximal run of letters, digits, apostrophes and hyphens with
/// leading and trailing apostrophes/hyphens removed.
pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_spans(text).into_iter().map(|t| t.text).collect()
}

pub fn tokenize_spans(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run_start: Option<usize> = None;
    for (idx, c) in text
        .char_indices()
        .chain(std::iter::once((text.len(), ' ')))
    {
        match (run_start, is_word_char(c) && idx < text.len()) {
            (None, true) => run_start = Some(idx),
            (Some(start), false) => {
                push_trimmed(text, start, idx, &mut tokens);
                run_start = None;
            }
            _ => {}
        }
    }
    tokens
}

fn push_trimmed(text: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let run = &text[start..end];
    let trimmed_front = run.trim_start_matches(is_joiner);
    let lead = run.len() - trimmed_front.len();
    let trimmed = trimmed_front.trim_end_matches(is_joiner);
    if trimmed.is_empty() {
        return;
    }
    let s = start + lead;
    out.push(Token {
        text: trimmed.to_lowercase(),
        surface: trimmed.to_string(),
        start: s,
        end: s + trimmed.len(),
    });
}

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_sentence() {
        assert_eq!(tokenize("The cat sat."), vec!["the", "cat", "sat"]);
    }

    #[test]
    fn empty_input() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  ... -- ").is_empty());
    }

    #[test]
    fn hyphen_internal_kept() {
        assert_eq!(
            tokenize("Metro-Goldwyn-Mayer, 1950"),
            vec!["metro-goldwyn-mayer", "1950"]
        );
    }

    #[test]
    fn apostrophes_and_edge_joiners() {
        assert_eq!(
            tokenize("'Don't' -stop- it's"),
            vec!["don't", "stop", "it's"]
        );
    }

    #[test]
    fn spans_point_at_surface() {
        let text = "Hello, (World)!";
        let toks = tokenize_spans(text);
        assert_eq!(toks.len(), 2);
        assert_eq!(&text[toks[1].start..toks[1].end], "World");
        assert_eq!(toks[1].surface, "World");
        assert_eq!(toks[1].text, "world");
    }

    #[test]
    fn levenshtein_known_values() {
        assert_eq!(levenshtein("signd", "signed"), 1);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("same", "same"), 0);
    }

    proptest! {
        #[test]
        fn tokens_are_stable_under_retokenizing(s in "[a-zA-Z0-9 ,.'-]{0,40}") {
            let toks = tokenize(&s);
            let joined = toks.join(" ");
            prop_assert_eq!(tokenize(&joined), toks);
        }

        #[test]
        fn levenshtein_symmetric(a in "[a-d]{0,8}", b in "[a-d]{0,8}") {
            prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
        }
    }
}
