/// A word in the source text with its byte span.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Token<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '\'' | '\u{2019}' | '-' | '%')
}

fn is_edge_punct(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '-')
}

/// Splits text into words: runs of alphanumerics plus inner apostrophes,
/// hyphens and percent signs. Leading and trailing apostrophes or hyphens
/// are dropped from each word.
pub(crate) fn tokenize(text: &str) -> impl Iterator<Item = Token<'_>> {
    let mut rest = text.char_indices().peekable();
    std::iter::from_fn(move || loop {
        let (start, _) = loop {
            let (i, c) = rest.next()?;
            if is_word_char(c) {
                break (i, c);
            }
        };
        let mut end = text.len();
        while let Some(&(i, c)) = rest.peek() {
            if !is_word_char(c) {
                end = i;
                break;
            }
            rest.next();
        }
        let raw = &text[start..end];
        let trimmed_front = raw.trim_start_matches(is_edge_punct);
        let s = start + (raw.len() - trimmed_front.len());
        let word = trimmed_front.trim_end_matches(is_edge_punct);
        if !word.is_empty() {
            return Some(Token { text: word, start: s, end: s + word.len() });
        }
    })
}

pub(crate) fn normalize(word: &str) -> String {
    word.chars().map(|c| if c == '\u{2019}' { '\'' } else { c }).collect::<String>().to_lowercase()
}
