use super::diag::{DiagKind, Diagnostic, Span};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Unsigned integer or decimal literal, kept as written.
    Number(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Pipe,
    Amp,
    Bang,
    Arrow,
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Newline => "end of line".to_string(),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Pipe => "|",
            Tok::Amp => "&",
            Tok::Bang => "!",
            Tok::Arrow => "<-",
            _ => "?",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// `arrows` enables the `<-` token used by intervention prefixes. Newlines
/// inside `()`, `{}` and `[]` are dropped.
pub fn lex(src: &str, arrows: bool) -> Result<Vec<Token>, Diagnostic> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut depth: usize = 0;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = |tok: Tok| (tok, 1usize);
        let (tok, len) = match c {
            b' ' | b'\t' | b'\r' => {
                i += 1;
                continue;
            }
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            b'\n' => {
                i += 1;
                if depth == 0 {
                    out.push(Token { tok: Tok::Newline, span: Span::new(start, start + 1) });
                }
                continue;
            }
            b'{' | b'(' | b'[' => {
                depth += 1;
                single(match c {
                    b'{' => Tok::LBrace,
                    b'(' => Tok::LParen,
                    _ => Tok::LBracket,
                })
            }
            b'}' | b')' | b']' => {
                depth = depth.saturating_sub(1);
                single(match c {
                    b'}' => Tok::RBrace,
                    b')' => Tok::RParen,
                    _ => Tok::RBracket,
                })
            }
            b',' => single(Tok::Comma),
            b':' => single(Tok::Colon),
            b'=' => single(Tok::Eq),
            b'+' => single(Tok::Plus),
            b'-' => single(Tok::Minus),
            b'*' => single(Tok::Star),
            b'/' => single(Tok::Slash),
            b'|' => single(Tok::Pipe),
            b'&' => single(Tok::Amp),
            b'!' if bytes.get(i + 1) == Some(&b'=') => (Tok::Ne, 2),
            b'!' => single(Tok::Bang),
            b'<' if bytes.get(i + 1) == Some(&b'=') => (Tok::Le, 2),
            b'<' if arrows && bytes.get(i + 1) == Some(&b'-') => (Tok::Arrow, 2),
            b'<' => single(Tok::Lt),
            b'>' if bytes.get(i + 1) == Some(&b'=') => (Tok::Ge, 2),
            b'>' => single(Tok::Gt),
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                let mut dots = 0;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    if bytes[j] == b'.' {
                        dots += 1;
                    }
                    j += 1;
                }
                let text = &src[i..j];
                if dots > 1 || text == "." {
                    return Err(Diagnostic::error(
                        DiagKind::Syntax,
                        format!("malformed number `{text}`"),
                        Span::new(i, j),
                        src,
                    ));
                }
                (Tok::Number(text.to_string()), j - i)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i;
                while j < bytes.len()
                    && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_' || bytes[j] == b'\'')
                {
                    j += 1;
                }
                (Tok::Ident(src[i..j].to_string()), j - i)
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(Diagnostic::error(
                    DiagKind::Syntax,
                    format!("unexpected character `{ch}`"),
                    Span::new(i, i + ch.len_utf8()),
                    src,
                ));
            }
        };
        out.push(Token { tok, span: Span::new(start, start + len) });
        i += len;
    }
    out.push(Token { tok: Tok::Eof, span: Span::new(src.len(), src.len()) });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str, arrows: bool) -> Vec<Tok> {
        lex(src, arrows).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn lexes_operators_and_numbers() {
        assert_eq!(
            toks("X2 >= 0.5 != !a", false),
            vec![
                Tok::Ident("X2".into()),
                Tok::Ge,
                Tok::Number("0.5".into()),
                Tok::Ne,
                Tok::Bang,
                Tok::Ident("a".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn arrow_only_in_formula_mode() {
        assert_eq!(toks("X<-1", true)[1], Tok::Arrow);
        assert_eq!(toks("X<-1", false)[1], Tok::Lt);
    }

    #[test]
    fn newlines_inside_brackets_are_dropped() {
        let t = toks("a (\n b\n)\nc", false);
        assert_eq!(t.iter().filter(|t| **t == Tok::Newline).count(), 1);
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(toks("# hi\nx", false), vec![Tok::Newline, Tok::Ident("x".into()), Tok::Eof]);
    }

    #[test]
    fn bad_character_is_positioned() {
        let d = lex("a\n  $", false).unwrap_err();
        assert_eq!((d.line, d.column), (2, 3));
    }
}
