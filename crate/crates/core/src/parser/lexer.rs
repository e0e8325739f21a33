use super::{ParseDiagnostic, SourceSpan};

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    DotDot,
    Colon,
    Define,
    Arrow,
    At,
    Forall,
    Exists,
    Not,
    And,
    Or,
    Implies,
    Equiv,
    Eq,
    Ne,
    Le,
    Lt,
    Ge,
    Gt,
    Plus,
    Minus,
    Star,
    Slash,
    Pipe2,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Str(_) => "string".into(),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::DotDot => "..",
            Tok::Colon => ":",
            Tok::Define => ":=",
            Tok::Arrow => "->",
            Tok::At => "@",
            Tok::Forall => "!",
            Tok::Exists => "?",
            Tok::Not => "~",
            Tok::And => "&",
            Tok::Or => "|",
            Tok::Implies => "=>",
            Tok::Equiv => "<=>",
            Tok::Eq => "=",
            Tok::Ne => "~=",
            Tok::Le => "=<",
            Tok::Lt => "<",
            Tok::Ge => ">=",
            Tok::Gt => ">",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Pipe2 => "||",
            _ => "?",
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

/// Splits `text` into tokens. Unknown characters produce a diagnostic and are
/// skipped; the stream always ends with [`Tok::Eof`].
pub(crate) fn lex(text: &str, file: &str, diags: &mut Vec<ParseDiagnostic>) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        let peek = |k: usize| chars.get(i + k).copied();
        let (tok, len) = if c.is_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            (Tok::Ident(chars[i..j].iter().collect()), j - i)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            (Tok::Number(chars[i..j].iter().collect()), j - i)
        } else if c == '"' {
            let mut j = i + 1;
            let mut s = String::new();
            let mut closed = false;
            while j < chars.len() && chars[j] != '\n' {
                match chars[j] {
                    '"' => {
                        closed = true;
                        j += 1;
                        break;
                    }
                    '\\' if j + 1 < chars.len() => {
                        s.push(match chars[j + 1] {
                            'n' => '\n',
                            other => other,
                        });
                        j += 2;
                    }
                    other => {
                        s.push(other);
                        j += 1;
                    }
                }
            }
            if !closed {
                diags.push(ParseDiagnostic::error(
                    "unterminated string literal",
                    SourceSpan::new(file, line, start_col, j - i),
                ));
            }
            (Tok::Str(s), j - i)
        } else {
            match (c, peek(1), peek(2)) {
                ('<', Some('='), Some('>')) => (Tok::Equiv, 3),
                ('<', Some('='), _) => (Tok::Le, 2),
                ('<', _, _) => (Tok::Lt, 1),
                ('=', Some('<'), _) => (Tok::Le, 2),
                ('=', Some('>'), _) => (Tok::Implies, 2),
                ('=', _, _) => (Tok::Eq, 1),
                ('>', Some('='), _) => (Tok::Ge, 2),
                ('>', _, _) => (Tok::Gt, 1),
                ('~', Some('='), _) => (Tok::Ne, 2),
                ('~', _, _) => (Tok::Not, 1),
                ('!', Some('='), _) => (Tok::Ne, 2),
                ('!', _, _) => (Tok::Forall, 1),
                ('?', _, _) => (Tok::Exists, 1),
                ('-', Some('>'), _) => (Tok::Arrow, 2),
                ('-', _, _) => (Tok::Minus, 1),
                (':', Some('='), _) => (Tok::Define, 2),
                (':', _, _) => (Tok::Colon, 1),
                ('.', Some('.'), _) => (Tok::DotDot, 2),
                ('.', _, _) => (Tok::Dot, 1),
                ('|', Some('|'), _) => (Tok::Pipe2, 2),
                ('|', _, _) => (Tok::Or, 1),
                ('&', _, _) => (Tok::And, 1),
                ('{', _, _) => (Tok::LBrace, 1),
                ('}', _, _) => (Tok::RBrace, 1),
                ('(', _, _) => (Tok::LParen, 1),
                (')', _, _) => (Tok::RParen, 1),
                ('[', _, _) => (Tok::LBracket, 1),
                (']', _, _) => (Tok::RBracket, 1),
                (',', _, _) => (Tok::Comma, 1),
                ('@', _, _) => (Tok::At, 1),
                ('+', _, _) => (Tok::Plus, 1),
                ('*', _, _) => (Tok::Star, 1),
                ('/', _, _) => (Tok::Slash, 1),
                ('∀', _, _) => (Tok::Forall, 1),
                ('∃', _, _) => (Tok::Exists, 1),
                ('¬', _, _) => (Tok::Not, 1),
                ('∧', _, _) => (Tok::And, 1),
                ('∨', _, _) => (Tok::Or, 1),
                ('⇒', _, _) => (Tok::Implies, 1),
                ('⇔', _, _) => (Tok::Equiv, 1),
                ('≤', _, _) => (Tok::Le, 1),
                ('≥', _, _) => (Tok::Ge, 1),
                ('≠', _, _) => (Tok::Ne, 1),
                ('−', _, _) => (Tok::Minus, 1),
                _ => {
                    diags.push(ParseDiagnostic::error(
                        format!("unexpected character `{c}`"),
                        SourceSpan::new(file, line, col, 1),
                    ));
                    i += 1;
                    col += 1;
                    continue;
                }
            }
        };
        tokens.push(Token { tok, line, column: start_col, length: len.max(1) });
        i += len;
        col += len;
    }
    tokens.push(Token { tok: Tok::Eof, line, column: col, length: 1 });
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<Tok> {
        let mut d = Vec::new();
        let t = lex(text, "t", &mut d);
        assert!(d.is_empty(), "{d:?}");
        t.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn numbers_and_ranges() {
        assert_eq!(
            toks("[20..100] 0.25."),
            vec![
                Tok::LBracket,
                Tok::Number("20".into()),
                Tok::DotDot,
                Tok::Number("100".into()),
                Tok::RBracket,
                Tok::Number("0.25".into()),
                Tok::Dot,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn operators() {
        assert_eq!(
            toks("<=> <= =< => ~= ~ != ! -> // comment\n||"),
            vec![
                Tok::Equiv,
                Tok::Le,
                Tok::Le,
                Tok::Implies,
                Tok::Ne,
                Tok::Not,
                Tok::Ne,
                Tok::Forall,
                Tok::Arrow,
                Tok::Pipe2,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn bad_character_reported_with_position() {
        let mut d = Vec::new();
        lex("a\n  $b", "f.kb", &mut d);
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].span.line, d[0].span.column), (2, 3));
    }
}
