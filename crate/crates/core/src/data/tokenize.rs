//! Tweet tokenizer: lowercases, replaces URLs with `<url>` and @-mentions
//! with `<user>`, strips `#` from hashtags, and splits on whitespace and
//! punctuation. Punctuation characters become single-character tokens.

pub const URL: &str = "<url>";
pub const USER: &str = "<user>";
pub const UNK: &str = "<unk>";

const PLACEHOLDERS: [&str; 3] = [URL, USER, UNK];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Never returns an empty list: input without any token yields `[<unk>]`.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        split_chunk(chunk, &mut tokens);
    }
    if tokens.is_empty() {
        tokens.push(UNK.to_string());
    }
    tokens
}

fn split_chunk(chunk: &str, out: &mut Vec<String>) {
    let lower = chunk.to_lowercase();
    if lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.") {
        out.push(URL.to_string());
        return;
    }
    let mut rest = lower.as_str();
    while let Some(c) = rest.chars().next() {
        if let Some(p) = PLACEHOLDERS.iter().find(|p| rest.starts_with(**p)) {
            out.push((*p).to_string());
            rest = &rest[p.len()..];
            continue;
        }
        if c == '@' || c == '#' {
            let word_len: usize = rest[1..]
                .chars()
                .take_while(|&c| is_word_char(c))
                .map(char::len_utf8)
                .sum();
            if word_len > 0 {
                if c == '@' {
                    out.push(USER.to_string());
                } else {
                    out.push(rest[1..1 + word_len].to_string());
                }
                rest = &rest[1 + word_len..];
                continue;
            }
        }
        if is_word_char(c) {
            let len: usize = rest
                .chars()
                .take_while(|&c| is_word_char(c))
                .map(char::len_utf8)
                .sum();
            out.push(rest[..len].to_string());
            rest = &rest[len..];
        } else {
            out.push(c.to_string());
            rest = &rest[c.len_utf8()..];
        }
    }
}
