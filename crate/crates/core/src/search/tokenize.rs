/// A lowercased token with its character span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Splits on whitespace and punctuation and folds case. No stemming.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current: Option<(usize, String)> = None;
    let mut idx = 0;
    for c in text.chars() {
        if is_word(c) {
            current.get_or_insert_with(|| (idx, String::new())).1.extend(c.to_lowercase());
        } else if let Some((start, text)) = current.take() {
            tokens.push(Token { text, start, end: idx });
        }
        idx += 1;
    }
    if let Some((start, text)) = current {
        tokens.push(Token { text, start, end: idx });
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_code_and_prose() {
        let words: Vec<_> = tokenize("print(total_sum[i]) # Ünïcode, OK").into_iter().map(|t| t.text).collect();
        assert_eq!(words, ["print", "total_sum", "i", "ünïcode", "ok"]);
    }

    #[test]
    fn spans_are_char_offsets() {
        let t = tokenize("é foo");
        assert_eq!(t[1], Token { text: "foo".into(), start: 2, end: 5 });
    }
}
