//! Deterministic tokenizers.
//!
//! Two tokenizers live here:
//!
//! * [`moses_tokenize`] / [`moses_detokenize`]: the English rule subset of
//!   the Moses tokenizer, used by normalization and the diversity measures.
//!   The nonbreaking prefix table ships in `data/nonbreaking_prefix.en`.
//! * [`bleu_tokenize`]: the `13a` tokenization applied right before BLEU
//!   scoring.
//!
//! Both treat delexicalization placeholders (`[name]`) and clock times
//! (`16:00`) as protected tokens that are never split.

use std::collections::HashSet;
use std::fmt;
use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

/// A sequence of non-empty tokens without internal whitespace.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TokenStream(Vec<String>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidToken(pub String);

impl fmt::Display for InvalidToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid token {:?}: empty or contains whitespace", self.0)
    }
}

impl std::error::Error for InvalidToken {}

impl TokenStream {
    pub fn new(tokens: Vec<String>) -> Result<Self, InvalidToken> {
        match tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            Some(bad) => Err(InvalidToken(bad.clone())),
            None => Ok(TokenStream(tokens)),
        }
    }

    /// Splits on whitespace; always valid.
    pub fn from_whitespace(text: &str) -> Self {
        TokenStream(text.split_whitespace().map(str::to_string).collect())
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn into_vec(self) -> Vec<String> {
        self.0
    }

    /// Tokens joined with single spaces.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

impl TryFrom<Vec<String>> for TokenStream {
    type Error = InvalidToken;

    fn try_from(tokens: Vec<String>) -> Result<Self, Self::Error> {
        TokenStream::new(tokens)
    }
}

impl From<TokenStream> for Vec<String> {
    fn from(ts: TokenStream) -> Self {
        ts.0
    }
}

impl<'a> IntoIterator for &'a TokenStream {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Placeholders like `[name]` or `[attraction_postcode]`.
pub static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[[A-Za-z0-9_]+\]").unwrap());

static PROTECTED: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[[A-Za-z0-9_]+\]|\d+:\d+").unwrap());

const PROTECTED_MARK: &str = "THISISPROTECTED";

struct Prefixes {
    general: HashSet<String>,
    numeric_only: HashSet<String>,
}

static NONBREAKING: LazyLock<Prefixes> = LazyLock::new(|| {
    let mut general = HashSet::new();
    let mut numeric_only = HashSet::new();
    for line in include_str!("../data/nonbreaking_prefix.en").lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('#') {
            Some((prefix, tag)) if tag.contains("NUMERIC_ONLY") => {
                numeric_only.insert(prefix.trim().to_string());
            }
            _ => {
                general.insert(line.to_string());
            }
        }
    }
    Prefixes { general, numeric_only }
});

macro_rules! rule {
    ($name:ident, $re:expr) => {
        static $name: LazyLock<Regex> = LazyLock::new(|| Regex::new($re).unwrap());
    };
}

rule!(WHITESPACE, r"\s+");
rule!(ASCII_JUNK, r"[\x00-\x1f]");
rule!(PAD_NOT_ALNUM, r"([^\p{L}\p{N}\s\.',\-])");
rule!(MULTIDOT_START, r"\.(\.+)");
rule!(MULTIDOT_LEFT, r"DOTMULTI\.");
rule!(MULTIDOT_NONDOT, r"DOTMULTI\.([^\.])");
rule!(TRAILING_DOT_APOS, r"\.' ?$");
rule!(PROTECTED_REF, r"THISISPROTECTED(\d{3})");

fn protect(text: &str, store: &mut Vec<String>) -> String {
    PROTECTED
        .replace_all(text, |caps: &Captures| {
            store.push(caps[0].to_string());
            format!(" {PROTECTED_MARK}{:03} ", store.len() - 1)
        })
        .into_owned()
}

fn restore(text: &str, store: &[String]) -> String {
    PROTECTED_REF
        .replace_all(text, |caps: &Captures| {
            let idx: usize = caps[1].parse().unwrap();
            store[idx].clone()
        })
        .into_owned()
}

fn replace_multidots(text: &str) -> String {
    let mut text = MULTIDOT_START.replace_all(text, " DOTMULTI$1").into_owned();
    while MULTIDOT_LEFT.is_match(&text) {
        text = MULTIDOT_NONDOT.replace_all(&text, "DOTDOTMULTI $1").into_owned();
        text = MULTIDOT_LEFT.replace_all(&text, "DOTDOTMULTI").into_owned();
    }
    text
}

fn restore_multidots(text: &str) -> String {
    let mut text = text.to_string();
    while text.contains("DOTDOTMULTI") {
        text = text.replace("DOTDOTMULTI", "DOTMULTI.");
    }
    text.replace("DOTMULTI", ".")
}

/// Commas are split off unless they sit inside a number (`5,300`).
fn split_commas(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() + 8);
    for (i, &c) in chars.iter().enumerate() {
        if c != ',' {
            out.push(c);
            continue;
        }
        let prev = i.checked_sub(1).map(|j| chars[j]);
        let next = chars.get(i + 1).copied();
        let numeric = prev.is_none_or(char::is_numeric) && next.is_some_and(char::is_numeric);
        if numeric || (prev.is_none() && next.is_none()) {
            out.push(',');
        } else {
            out.push_str(" , ");
        }
    }
    out
}

const CLITICS: [&str; 7] = ["s", "re", "ve", "ll", "d", "m", "t"];

fn clitic_at(chars: &[char], start: usize) -> bool {
    let end = chars[start..]
        .iter()
        .position(|c| !c.is_alphanumeric())
        .map_or(chars.len(), |p| start + p);
    let word: String = chars[start..end].iter().collect();
    CLITICS.contains(&word.as_str())
}

/// English apostrophe rules. An apostrophe is split off on both sides unless
/// it is word-internal. Word-internal apostrophes split only before an
/// English clitic (`it 's`, `1990 's`); `o'clock` stays whole. A clitic that
/// is already split off (`'s` after whitespace) is left alone, so a second
/// pass is a no-op.
fn split_apostrophes(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() + 8);
    for (i, &c) in chars.iter().enumerate() {
        if c != '\'' {
            out.push(c);
            continue;
        }
        let prev = i.checked_sub(1).map(|j| chars[j]);
        let next = chars.get(i + 1).copied();
        // string boundaries count as whitespace
        let (space_before, space_after) = match (prev, next) {
            (None, None) => (false, false),
            (_, Some(n)) => {
                let n_alpha = n.is_alphabetic();
                let after_space = prev.is_none_or(char::is_whitespace);
                if after_space && n_alpha && clitic_at(&chars, i + 1) {
                    (false, false)
                } else if let Some(p) = prev.filter(|p| n_alpha && (p.is_alphabetic() || p.is_numeric())) {
                    let split = clitic_at(&chars, i + 1) && (p.is_alphabetic() || n == 's');
                    (split, false)
                } else {
                    (true, true)
                }
            }
            (Some(_), None) => (true, true),
        };
        if space_before {
            out.push(' ');
        }
        out.push('\'');
        if space_after {
            out.push(' ');
        }
    }
    out
}

fn handle_nonbreaking_prefixes(text: &str) -> String {
    let mut tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    let n = tokens.len();
    for i in 0..n {
        let Some(prefix) = tokens[i].strip_suffix('.') else {
            continue;
        };
        if prefix.is_empty() {
            continue;
        }
        let prefix = prefix.to_string();
        let next = tokens.get(i + 1).map(String::as_str);
        let keep = (prefix.contains('.') && prefix.chars().any(char::is_alphabetic))
            || NONBREAKING.general.contains(&prefix)
            || next.and_then(|t| t.chars().next()).is_some_and(char::is_lowercase)
            || (NONBREAKING.numeric_only.contains(&prefix)
                && next.and_then(|t| t.chars().next()).is_some_and(|c| c.is_ascii_digit()));
        if !keep {
            tokens[i] = format!("{prefix} .");
        }
    }
    tokens.join(" ")
}

/// Moses tokenization with the English rule set (no XML escaping, no
/// aggressive dash splitting).
pub fn moses_tokenize(text: &str) -> TokenStream {
    let text = WHITESPACE.replace_all(text, " ");
    let text = ASCII_JUNK.replace_all(&text, "");
    let mut store = Vec::new();
    let text = protect(&text, &mut store);
    let text = text.trim();

    let text = PAD_NOT_ALNUM.replace_all(text, " $1 ");
    let text = replace_multidots(&text);

    let text = split_commas(&text);

    let text = split_apostrophes(&text);

    let text = handle_nonbreaking_prefixes(&text);
    let text = WHITESPACE.replace_all(&text, " ");
    let text = TRAILING_DOT_APOS.replace_all(text.trim(), " . ' ");

    let text = restore(&text, &store);
    let text = restore_multidots(&text);
    TokenStream::from_whitespace(&text)
}

static OPENING: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[\p{Sc}\(\[\{¿¡]+$").unwrap());
static CLOSING: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[,\.\?!:;\\%\}\]\)]+$").unwrap());
static CONTRACTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^'\p{L}").unwrap());
static QUOTES: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"^['"„“”`]+$"#).unwrap());

/// Moses detokenization for English.
pub fn moses_detokenize(tokens: &TokenStream) -> String {
    let mut out = String::new();
    let mut prepend_space = " ";
    let mut quote_counts: std::collections::HashMap<String, usize> = Default::default();

    for (i, token) in tokens.iter().enumerate() {
        if OPENING.is_match(token) {
            out.push_str(prepend_space);
            out.push_str(token);
            prepend_space = "";
        } else if CLOSING.is_match(token)
            || (i > 0 && CONTRACTION.is_match(token) && tokens.tokens()[i - 1].ends_with(char::is_alphanumeric))
        {
            out.push_str(token);
            prepend_space = " ";
        } else if QUOTES.is_match(token) {
            let normalized = if token.chars().all(|c| matches!(c, '„' | '“' | '”')) {
                "\"".to_string()
            } else {
                token.to_string()
            };
            let count = quote_counts.entry(normalized).or_insert(0);
            if count.is_multiple_of(2) {
                let possessive = token == "'" && i > 0 && tokens.tokens()[i - 1].ends_with('s');
                // an opening quote only attaches to a following word, and
                // `' s` must not turn into the clitic `'s`
                let next = tokens.tokens().get(i + 1);
                let before_clitic = next.is_none_or(|next| {
                    !next.starts_with(char::is_alphanumeric)
                        || (token == "'" && clitic_at(&next.chars().collect::<Vec<_>>(), 0))
                });
                if possessive {
                    out.push_str(token);
                    prepend_space = " ";
                } else if before_clitic {
                    out.push_str(prepend_space);
                    out.push_str(token);
                    prepend_space = " ";
                } else {
                    out.push_str(prepend_space);
                    out.push_str(token);
                    prepend_space = "";
                    *count += 1;
                }
            } else {
                out.push_str(token);
                prepend_space = " ";
                *count += 1;
            }
        } else {
            out.push_str(prepend_space);
            out.push_str(token);
            prepend_space = " ";
        }
    }
    WHITESPACE.replace_all(&out, " ").trim().to_string()
}

rule!(BLEU_SYMBOLS, r"([\{-\~\[-` -\&\(-\+:-@/])");
rule!(BLEU_PERIOD_COMMA_1, r"([^0-9])([\.,])");
rule!(BLEU_PERIOD_COMMA_2, r"([\.,])([^0-9])");
rule!(BLEU_DASH, r"([0-9])(-)");

fn tokenize_13a_segment(segment: &str, out: &mut Vec<String>) {
    let mut s = segment.to_string();
    if s.contains('&') {
        s = s
            .replace("&quot;", "\"")
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">");
    }
    let s = BLEU_SYMBOLS.replace_all(&s, " $1 ");
    let s = BLEU_PERIOD_COMMA_1.replace_all(&s, "$1 $2 ");
    let s = BLEU_PERIOD_COMMA_2.replace_all(&s, " $1 $2");
    let s = BLEU_DASH.replace_all(&s, "$1 $2 ");
    out.extend(s.split_whitespace().map(str::to_string));
}

/// The `13a` tokenization used by standard corpus BLEU, with placeholders
/// and clock times kept whole.
pub fn bleu_tokenize(text: &str) -> TokenStream {
    let text = text.replace("<skipped>", "").replace("-\n", "").replace('\n', " ");
    let mut tokens = Vec::new();
    for word in text.split_whitespace() {
        let mut last = 0;
        for m in PROTECTED.find_iter(word) {
            tokenize_13a_segment(&word[last..m.start()], &mut tokens);
            tokens.push(m.as_str().to_string());
            last = m.end();
        }
        tokenize_13a_segment(&word[last..], &mut tokens);
    }
    TokenStream(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(ts: &TokenStream) -> Vec<&str> {
        ts.iter().collect()
    }

    #[test]
    fn moses_keeps_decimals_and_separates_final_period() {
        let ts = moses_tokenize("it was 225.3 and your reference is as5sbc8p .");
        assert_eq!(
            toks(&ts),
            ["it", "was", "225.3", "and", "your", "reference", "is", "as5sbc8p", "."]
        );
    }

    #[test]
    fn moses_empty() {
        assert!(moses_tokenize("").is_empty());
        assert!(moses_tokenize("   \t ").is_empty());
    }

    #[test]
    fn moses_protects_placeholders() {
        assert_eq!(toks(&moses_tokenize("[name], [area].")), ["[name]", ",", "[area]", "."]);
    }

    #[test]
    fn moses_protects_times() {
        assert_eq!(
            toks(&moses_tokenize("it leaves at 16:00.")),
            ["it", "leaves", "at", "16:00", "."]
        );
    }

    #[test]
    fn moses_splits_clitics_once() {
        let first = moses_tokenize("it's free");
        assert_eq!(toks(&first), ["it", "'s", "free"]);
        assert_eq!(moses_tokenize(&first.joined()), first);
    }

    #[test]
    fn moses_keeps_period_before_lowercase_word() {
        // Moses only splits a sentence-internal period when the next word
        // does not start in lowercase.
        assert_eq!(
            toks(&moses_tokenize("it is cb21db. is that all?")),
            ["it", "is", "cb21db.", "is", "that", "all", "?"]
        );
        assert_eq!(
            toks(&moses_tokenize("It is cb21db. Is that all?")),
            ["It", "is", "cb21db", ".", "Is", "that", "all", "?"]
        );
    }

    #[test]
    fn moses_multidots() {
        assert_eq!(toks(&moses_tokenize("well... ok")), ["well", "...", "ok"]);
    }

    #[test]
    fn detokenize_basics() {
        let ts = TokenStream::from_whitespace("hello , world .");
        assert_eq!(moses_detokenize(&ts), "hello, world.");
        assert_eq!(moses_detokenize(&TokenStream::default()), "");
        let ts = TokenStream::from_whitespace("it 's in the ( north ) \" here \"");
        assert_eq!(moses_detokenize(&ts), "it's in the (north) \"here\"");
    }

    #[test]
    fn detokenize_keeps_placeholders_apart() {
        let ts = moses_tokenize("[name] is at [address], postcode [postcode].");
        assert_eq!(moses_detokenize(&ts), "[name] is at [address], postcode [postcode].");
    }

    #[test]
    fn bleu_13a_examples() {
        assert_eq!(toks(&bleu_tokenize("cb21db.")), ["cb21db", "."]);
        assert_eq!(toks(&bleu_tokenize("16:00")), ["16:00"]);
        let q = bleu_tokenize("what day would you like to travel?");
        assert_eq!(q.len(), 8);
        assert_eq!(q.tokens()[7], "?");
        assert_eq!(toks(&bleu_tokenize("[name]'s")), ["[name]", "'s"]);
        assert_eq!(
            toks(&bleu_tokenize("75.10 pounds, 1,000")),
            ["75.10", "pounds", ",", "1,000"]
        );
        assert_eq!(toks(&bleu_tokenize("a&amp;b")), ["a", "&", "b"]);
    }

    #[test]
    fn token_stream_rejects_whitespace() {
        assert!(TokenStream::new(vec!["a b".into()]).is_err());
        assert!(TokenStream::new(vec![String::new()]).is_err());
        assert!(TokenStream::new(vec!["ab".into()]).is_ok());
    }

    fn ascii_text() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                8 => proptest::char::range('a', 'z'),
                2 => proptest::char::range('A', 'Z'),
                3 => proptest::char::range('0', '9'),
                4 => Just(' '),
                6 => proptest::sample::select(
                    ".,;:!?'\"`-()[]{}&$%#@/_<>=+*~^|\\".chars().collect::<Vec<_>>()
                ),
            ],
            0..40,
        )
        .prop_map(|cs| cs.into_iter().collect())
    }

    proptest! {
        #[test]
        fn moses_fixed_point(text in ascii_text()) {
            let first = moses_tokenize(&text);
            prop_assert!(first.iter().all(|t| !t.is_empty() && !t.contains(char::is_whitespace)));
            prop_assert_eq!(moses_tokenize(&first.joined()), first);
        }

        #[test]
        fn bleu_fixed_point(text in ascii_text()) {
            let first = bleu_tokenize(&text);
            prop_assert!(first.iter().all(|t| !t.is_empty() && !t.contains(char::is_whitespace)));
            prop_assert_eq!(bleu_tokenize(&first.joined()), first);
        }

        #[test]
        fn bleu_never_merges_input_tokens(text in ascii_text()) {
            // every output token lies inside a single whitespace-separated word
            let words: Vec<&str> = text.split_whitespace().collect();
            let mut w = 0;
            let mut rest = words.first().copied().unwrap_or("");
            for tok in bleu_tokenize(&text).iter() {
                let restored = tok.to_string();
                while !rest.contains(restored.as_str()) {
                    w += 1;
                    prop_assert!(w < words.len(), "token {} spans words", tok);
                    rest = words[w];
                }
                let at = rest.find(restored.as_str()).unwrap();
                rest = &rest[at + restored.len()..];
            }
        }

        #[test]
        fn detokenize_is_stable(text in ascii_text()) {
            let once = moses_detokenize(&moses_tokenize(&text));
            let twice = moses_detokenize(&moses_tokenize(&once));
            prop_assert_eq!(twice, once);
        }
    }
}
