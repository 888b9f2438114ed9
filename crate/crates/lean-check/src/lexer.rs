//! Comment- and string-aware masking of Lean source.
//!
//! `mask_non_code` blanks out `--` line comments, nested `/- -/` block
//! comments, and `"..."` string literals (with backslash escapes), leaving
//! every other character in place. Token scans run over the masked text so
//! positions line up with the original source.
//!
//! Single quotes are not string delimiters here: a prime is an identifier
//! character in Lean (`nat_gcd_helper_1'`), and misreading char literals is
//! harmless for the predicates built on this mask.

pub fn mask_non_code(source: &str) -> String {
    #[derive(PartialEq)]
    enum State {
        Code,
        LineComment,
        BlockComment(u32),
        Str,
        StrEscape,
    }

    let mut out = String::with_capacity(source.len());
    let mut state = State::Code;
    let mut chars = source.chars().peekable();

    while let Some(c) = chars.next() {
        match state {
            State::Code => match c {
                '-' if chars.peek() == Some(&'-') => {
                    chars.next();
                    out.push_str("  ");
                    state = State::LineComment;
                }
                '/' if chars.peek() == Some(&'-') => {
                    chars.next();
                    out.push_str("  ");
                    state = State::BlockComment(1);
                }
                '"' => {
                    out.push(' ');
                    state = State::Str;
                }
                _ => out.push(c),
            },
            State::LineComment => {
                if c == '\n' {
                    out.push('\n');
                    state = State::Code;
                } else {
                    out.push(' ');
                }
            }
            State::BlockComment(depth) => match c {
                '/' if chars.peek() == Some(&'-') => {
                    chars.next();
                    out.push_str("  ");
                    state = State::BlockComment(depth + 1);
                }
                '-' if chars.peek() == Some(&'/') => {
                    chars.next();
                    out.push_str("  ");
                    state = if depth == 1 { State::Code } else { State::BlockComment(depth - 1) };
                }
                '\n' => out.push('\n'),
                _ => out.push(' '),
            },
            State::Str => match c {
                '\\' => {
                    out.push(' ');
                    state = State::StrEscape;
                }
                '"' => {
                    out.push(' ');
                    state = State::Code;
                }
                '\n' => out.push('\n'),
                _ => out.push(' '),
            },
            State::StrEscape => {
                out.push(if c == '\n' { '\n' } else { ' ' });
                state = State::Str;
            }
        }
    }
    out
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

/// Maximal identifier tokens of the masked source, dots included when they
/// join identifier characters on both sides (`Nat.gcd_comm` is one token).
pub fn identifier_tokens(masked: &str) -> impl Iterator<Item = &str> {
    let mut tokens = Vec::new();
    let mut start: Option<usize> = None;

    let mut iter = masked.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        let extends = if is_ident_char(c) {
            true
        } else if c == '.' && start.is_some() {
            // A dot continues the token only when an identifier char follows.
            matches!(iter.peek(), Some((_, next)) if is_ident_char(*next))
        } else {
            false
        };

        if extends {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            tokens.push(&masked[s..i]);
        }
    }
    if let Some(s) = start {
        tokens.push(&masked[s..]);
    }
    tokens.into_iter()
}
