/// Splits an identifier into lowercase subtokens at underscores and other
/// separators, lower-to-upper transitions, the last capital of an acronym run
/// followed by a lowercase letter, and letter/digit transitions.
///
/// Input without any alphanumeric character (operators, punctuation) is
/// returned unchanged as a single token.
pub fn tokenize_camel(text: &str) -> Vec<String> {
    if !text.chars().any(char::is_alphanumeric) {
        return if text.is_empty() { vec![] } else { vec![text.to_string()] };
    }
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_alphanumeric() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            continue;
        }
        if let Some(&prev) = i.checked_sub(1).map(|j| &chars[j]) {
            let next = chars.get(i + 1).copied();
            let boundary = prev.is_alphanumeric()
                && ((prev.is_lowercase() && c.is_uppercase())
                    || (prev.is_alphabetic() && c.is_numeric())
                    || (prev.is_numeric() && c.is_alphabetic())
                    || (prev.is_uppercase()
                        && c.is_uppercase()
                        && next.is_some_and(char::is_lowercase)));
            if boundary && !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        }
        cur.extend(c.to_lowercase());
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Identifier-shaped tokens (letters, digits, underscores, not starting with
/// a digit) are the ones split into subtokens; literals and operators are not.
pub fn is_identifier_like(token: &str) -> bool {
    let mut cs = token.chars();
    matches!(cs.next(), Some(c) if c.is_alphabetic() || c == '_')
        && token.chars().all(|c| c.is_alphanumeric() || c == '_')
}

/// Subtokens of a source token when `split` is on and the token is
/// identifier-like; otherwise the token itself.
pub fn subtokens(token: &str, split: bool) -> Vec<String> {
    if split && is_identifier_like(token) {
        let parts = tokenize_camel(token);
        if parts.is_empty() {
            vec![token.to_string()]
        } else {
            parts
        }
    } else {
        vec![token.to_string()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[derive(Clone, Copy, PartialEq)]
    enum Class {
        Upper,
        Lower,
        Digit,
        Sep,
    }

    fn class(c: char) -> Class {
        if c.is_uppercase() {
            Class::Upper
        } else if c.is_alphabetic() {
            Class::Lower
        } else if c.is_numeric() {
            Class::Digit
        } else {
            Class::Sep
        }
    }

    /// Reference splitter: classify every character, then decide for each
    /// adjacent pair whether a cut falls between them.
    fn oracle(text: &str) -> Vec<String> {
        let chars: Vec<char> = text.chars().collect();
        if chars.iter().all(|&c| class(c) == Class::Sep) {
            return if text.is_empty() { vec![] } else { vec![text.to_string()] };
        }
        let cls: Vec<Class> = chars.iter().map(|&c| class(c)).collect();
        let mut cut = vec![false; chars.len() + 1];
        for i in 1..chars.len() {
            let (a, b) = (cls[i - 1], cls[i]);
            let c = cls.get(i + 1).copied();
            cut[i] = match (a, b) {
                (Class::Lower, Class::Upper) => true,
                (Class::Upper | Class::Lower, Class::Digit) => true,
                (Class::Digit, Class::Upper | Class::Lower) => true,
                (Class::Upper, Class::Upper) => c == Some(Class::Lower),
                _ => false,
            };
        }
        let mut out = Vec::new();
        let mut cur = String::new();
        for (i, &ch) in chars.iter().enumerate() {
            if (cls[i] == Class::Sep || cut[i]) && !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            if cls[i] != Class::Sep {
                cur.extend(ch.to_lowercase());
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    }

    #[test]
    fn camel_examples() {
        assert_eq!(tokenize_camel("fastPathOrderedEmit"), vec!["fast", "path", "ordered", "emit"]);
        assert_eq!(tokenize_camel("x"), vec!["x"]);
        assert_eq!(tokenize_camel("HTTPServer2"), oracle("HTTPServer2"));
        assert_eq!(tokenize_camel("HTTPServer2"), vec!["http", "server", "2"]);
        assert_eq!(tokenize_camel("snake_case_name"), vec!["snake", "case", "name"]);
        assert_eq!(tokenize_camel("+="), vec!["+="]);
    }

    #[test]
    fn identifier_shape() {
        assert!(is_identifier_like("getX"));
        assert!(is_identifier_like("_tmp1"));
        assert!(!is_identifier_like("1e5"));
        assert!(!is_identifier_like("\"str\""));
        assert_eq!(subtokens("\"a b\"", true), vec!["\"a b\""]);
        assert_eq!(subtokens("maxValue", false), vec!["maxValue"]);
    }

    proptest! {
        #[test]
        fn matches_oracle(s in "[A-Za-z0-9_]{0,16}") {
            prop_assert_eq!(tokenize_camel(&s), oracle(&s));
        }

        #[test]
        fn idempotent_on_output(s in "[A-Za-z0-9_]{1,16}") {
            for part in tokenize_camel(&s) {
                prop_assert_eq!(tokenize_camel(&part), vec![part.clone()]);
            }
        }
    }
}
