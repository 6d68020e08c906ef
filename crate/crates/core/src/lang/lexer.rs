use num_rational::BigRational;

use super::LangError;
use crate::symbolic::parse_rational;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    Num(BigRational),
    Newline,
    Colon,
    Comma,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Plus,
    Minus,
    Star,
    Slash,
    Pow,
    Assign,
    EqEq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    /// `⋆` (loop-forever marker).
    Forever,
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LangError> {
    let mut out = Vec::new();
    for (li, line) in src.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        let mut emitted = false;
        while i < chars.len() {
            let c = chars[i];
            let pos = Pos { line: li + 1, col: i + 1 };
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let two: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let (tok, len) = if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                let text: String = chars[start..j].iter().collect();
                let q = parse_rational(&text).ok_or_else(|| LangError::Syntax {
                    line: pos.line,
                    col: pos.col,
                    message: format!("malformed number `{text}`"),
                })?;
                (Tok::Num(q), j - start)
            } else if c.is_alphabetic() || c == '_' {
                let start = i;
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                (Tok::Ident(chars[start..j].iter().collect()), j - start)
            } else {
                match two.as_str() {
                    "**" => (Tok::Pow, 2),
                    "==" => (Tok::EqEq, 2),
                    "!=" => (Tok::Ne, 2),
                    "<=" => (Tok::Le, 2),
                    ">=" => (Tok::Ge, 2),
                    _ => {
                        let t = match c {
                            ':' => Tok::Colon,
                            ',' => Tok::Comma,
                            '(' => Tok::LParen,
                            ')' => Tok::RParen,
                            '{' => Tok::LBrace,
                            '}' => Tok::RBrace,
                            '+' => Tok::Plus,
                            '-' | '−' => Tok::Minus,
                            '*' | '·' => Tok::Star,
                            '/' => Tok::Slash,
                            '^' => Tok::Pow,
                            '=' => Tok::Assign,
                            '≠' => Tok::Ne,
                            '<' => Tok::Lt,
                            '>' => Tok::Gt,
                            '≤' => Tok::Le,
                            '≥' => Tok::Ge,
                            '⋆' | '★' => Tok::Forever,
                            _ => {
                                return Err(LangError::Syntax {
                                    line: pos.line,
                                    col: pos.col,
                                    message: format!("unexpected character `{c}`"),
                                })
                            }
                        };
                        (t, 1)
                    }
                }
            };
            out.push(Token { tok, pos });
            emitted = true;
            i += len;
        }
        if emitted {
            out.push(Token {
                tok: Tok::Newline,
                pos: Pos {
                    line: li + 1,
                    col: chars.len() + 1,
                },
            });
        }
    }
    let last = out.last().map(|t| t.pos).unwrap_or(Pos { line: 1, col: 1 });
    out.push(Token { tok: Tok::Eof, pos: last });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_comments() {
        let toks = tokenize("x = 1/2 # half\n  y = x**2 {p} 0").unwrap();
        let kinds: Vec<Tok> = toks.into_iter().map(|t| t.tok).collect();
        assert_eq!(kinds[0], Tok::Ident("x".into()));
        assert_eq!(kinds[1], Tok::Assign);
        assert!(matches!(kinds[2], Tok::Num(_)));
        assert_eq!(kinds[3], Tok::Slash);
        assert_eq!(kinds[5], Tok::Newline);
        assert!(kinds.contains(&Tok::Pow));
        assert!(kinds.contains(&Tok::LBrace));
        assert_eq!(kinds.last(), Some(&Tok::Eof));
    }

    #[test]
    fn bad_character_reports_position() {
        let err = tokenize("x = 1\ny = $").unwrap_err();
        assert_eq!(err, LangError::Syntax { line: 2, col: 5, message: "unexpected character `$`".into() });
    }
}
