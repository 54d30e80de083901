use super::error::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Star,
    Colon,
    Comma,
    Arrow,
    Turnstile,
    Biturnstile,
    Bar,
    Amp,
    Equals,
    Bang,
    Dot,
    Plus,
    Minus,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Star => "`*`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Turnstile => "`|-`".into(),
            Tok::Biturnstile => "`-||-`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Eof => "end of input".into(),
        }
    }

    /// The symbol name of an infix operator token.
    pub fn infix_symbol(&self) -> Option<&'static str> {
        match self {
            Tok::Dot => Some("."),
            Tok::Plus => Some("+"),
            Tok::Minus => Some("-"),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let starts = |i: usize, pat: &str| pat.chars().enumerate().all(|(k, c)| chars.get(i + k) == Some(&c));

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
        if c == '#' || starts(i, "//") {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tok, len) = if is_ident_char(c) {
            let mut j = i;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            (Tok::Ident(chars[i..j].iter().collect()), j - i)
        } else if starts(i, "-||-") {
            (Tok::Biturnstile, 4)
        } else if starts(i, "|-") {
            (Tok::Turnstile, 2)
        } else if starts(i, "->") {
            (Tok::Arrow, 2)
        } else {
            let tok = match c {
                '*' => Tok::Star,
                ':' => Tok::Colon,
                ',' => Tok::Comma,
                '|' => Tok::Bar,
                '&' => Tok::Amp,
                '=' => Tok::Equals,
                '!' => Tok::Bang,
                '.' => Tok::Dot,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                other => {
                    return Err(ParseError::syntax(line, col, format!("unexpected character `{other}`")));
                }
            };
            (tok, 1)
        };
        out.push(Token { tok, line, column: col });
        i += len;
        col += len;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}
