#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(u64),
    ColonColon,
    Punct(char),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::ColonColon => "`::`".to_string(),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::Eof => "end of file".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug)]
pub(crate) struct LexError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

const PUNCT: &[char] = &[
    ';', '@', '.', ',', '(', ')', '{', '}', '<', '>', '=', '-', ':',
];

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
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
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<u64>().map_err(|_| LexError {
                line: start_line,
                column: start_col,
                message: format!("integer literal `{text}` out of range"),
            })?;
            Tok::Int(n)
        } else if c == ':' && chars.get(i + 1) == Some(&':') {
            i += 2;
            col += 2;
            Tok::ColonColon
        } else if PUNCT.contains(&c) {
            i += 1;
            col += 1;
            Tok::Punct(c)
        } else {
            return Err(LexError {
                line,
                column: col,
                message: format!("unexpected character `{c}`"),
            });
        };
        out.push(Token {
            tok,
            line: start_line,
            column: start_col,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_versions_and_nested_vectors() {
        let toks: Vec<Tok> = lex("import a.b@1.0; vec<vec<int32_t>> x; // trailing\n")
            .unwrap()
            .into_iter()
            .map(|t| t.tok)
            .collect();
        assert_eq!(toks[0], Tok::Ident("import".into()));
        assert_eq!(toks[4], Tok::Punct('@'));
        assert_eq!(toks[5], Tok::Int(1));
        assert_eq!(toks[7], Tok::Int(0));
        assert_eq!(toks.iter().filter(|t| **t == Tok::Punct('>')).count(), 2);
        assert_eq!(*toks.last().unwrap(), Tok::Eof);
    }

    #[test]
    fn tracks_positions() {
        let toks = lex("a\n  ::b").unwrap();
        assert_eq!((toks[1].line, toks[1].column), (2, 3));
        let err = lex("a $").unwrap_err();
        assert_eq!((err.line, err.column), (1, 3));
    }
}
