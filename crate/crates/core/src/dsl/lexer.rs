use super::{DslError, SourceSpan};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

// Longest first.
const SYMBOLS: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "{", "}", "(", ")", "[", "]", ";", ":", ",", "/", "#",
    "!", "=", "<", ">", "$",
];

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

/// Splits `src` into tokens. Unknown characters are reported and skipped, so the token stream
/// always ends with `Eof`.
pub(crate) fn lex(src: &str, errors: &mut Vec<DslError>) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = src.char_indices().peekable();

    while let Some(&(offset, c)) = chars.peek() {
        let span = SourceSpan { line, column: col, offset };
        let advance = |n: usize, chars: &mut std::iter::Peekable<std::str::CharIndices<'_>>, col: &mut usize| {
            for _ in 0..n {
                chars.next();
                *col += 1;
            }
        };

        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut chars, &mut col);
            continue;
        }
        if src[offset..].starts_with("//") {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                advance(1, &mut chars, &mut col);
            }
            continue;
        }
        if ident_start(c) {
            let mut text = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if !ident_continue(c) {
                    break;
                }
                text.push(c);
                advance(1, &mut chars, &mut col);
            }
            tokens.push(Token { tok: Tok::Ident(text), span });
            continue;
        }
        if c.is_ascii_digit() {
            let mut text = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if !c.is_ascii_digit() {
                    break;
                }
                text.push(c);
                advance(1, &mut chars, &mut col);
            }
            tokens.push(Token { tok: Tok::Int(text), span });
            continue;
        }
        if let Some(sym) = SYMBOLS.iter().find(|s| src[offset..].starts_with(**s)) {
            advance(sym.len(), &mut chars, &mut col);
            tokens.push(Token { tok: Tok::Sym(sym), span });
            continue;
        }
        errors.push(DslError::new("LEX", format!("unexpected character {c:?}"), span));
        advance(1, &mut chars, &mut col);
    }

    let end = SourceSpan {
        line,
        column: col,
        offset: src.len(),
    };
    tokens.push(Token { tok: Tok::Eof, span: end });
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        let mut errors = Vec::new();
        let toks = lex(src, &mut errors);
        assert!(errors.is_empty(), "{errors:?}");
        toks.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn symbols_and_identifiers() {
        assert_eq!(
            kinds("go!(g', n#3) >= 12 // trailing"),
            vec![
                Tok::Ident("go".into()),
                Tok::Sym("!"),
                Tok::Sym("("),
                Tok::Ident("g'".into()),
                Tok::Sym(","),
                Tok::Ident("n".into()),
                Tok::Sym("#"),
                Tok::Int("3".into()),
                Tok::Sym(")"),
                Tok::Sym(">="),
                Tok::Int("12".into()),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn spans_are_one_based() {
        let mut errors = Vec::new();
        let toks = lex("a\n  bc", &mut errors);
        assert_eq!(toks[0].span, SourceSpan { line: 1, column: 1, offset: 0 });
        assert_eq!(toks[1].span, SourceSpan { line: 2, column: 3, offset: 4 });
    }

    #[test]
    fn bad_characters_are_reported_and_skipped() {
        let mut errors = Vec::new();
        let toks = lex("a % b", &mut errors);
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].code, "LEX");
        assert_eq!(errors[0].span.column, 3);
        assert_eq!(toks.len(), 3);
    }

    #[test]
    fn unicode_letters_are_identifiers() {
        assert_eq!(kinds("σ"), vec![Tok::Ident("σ".into()), Tok::Eof]);
    }
}
