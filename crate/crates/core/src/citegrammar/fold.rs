//! Surname folding: LaTeX accent escapes, Unicode compatibility
//! decomposition, combining-mark removal and apostrophe unification.

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Accent commands written with a symbol, e.g. `\'a`, `\"o`.
const SYMBOL_ACCENTS: &[char] = &['\'', '`', '^', '"', '~', '=', '.'];
/// Accent commands written with a letter; only recognised when followed by a brace or space.
const LETTER_ACCENTS: &[char] = &['u', 'v', 'H', 'c', 'k', 'r', 'd', 'b', 't'];

/// Apostrophe look-alikes that occur in surnames ("O’Connor", "D`Souza").
pub(crate) fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{2018}' | '\u{02BC}' | '\u{00B4}' | '\u{2032}' | '`')
}

/// Strip LaTeX accent markup, keeping the base letters.
///
/// Returns `None` for a backslash that does not start a recognised accent
/// or letter command.
pub(crate) fn decode_latex(s: &str) -> Option<String> {
    if !s.contains(['\\', '{', '}']) {
        return Some(s.to_owned());
    }
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    let mut open_braces = 0usize;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\\' => {
                let next = *chars.get(i + 1)?;
                if SYMBOL_ACCENTS.contains(&next) {
                    i += 2;
                } else if LETTER_ACCENTS.contains(&next)
                    && matches!(chars.get(i + 2), Some('{') | Some(' '))
                {
                    i += 2;
                    if chars[i] == ' ' {
                        i += 1;
                    }
                } else {
                    // Letter commands: \o \O \l \L \ss \ae \AE \oe \OE \aa \AA \i
                    let rest: String = chars[i + 1..].iter().take(2).collect();
                    let (replacement, len) = match rest.as_str() {
                        r if r.starts_with("ss") => ("ss", 2),
                        r if r.starts_with("ae") => ("ae", 2),
                        r if r.starts_with("AE") => ("AE", 2),
                        r if r.starts_with("oe") => ("oe", 2),
                        r if r.starts_with("OE") => ("OE", 2),
                        r if r.starts_with("aa") => ("a", 2),
                        r if r.starts_with("AA") => ("A", 2),
                        r if r.starts_with('o') => ("o", 1),
                        r if r.starts_with('O') => ("O", 1),
                        r if r.starts_with('l') => ("l", 1),
                        r if r.starts_with('L') => ("L", 1),
                        r if r.starts_with('i') => ("i", 1),
                        _ => return None,
                    };
                    out.push_str(replacement);
                    i += 1 + len;
                    if chars.get(i) == Some(&' ') {
                        i += 1;
                    }
                }
                continue;
            }
            '{' => open_braces += 1,
            '}' => {
                if open_braces == 0 {
                    return None;
                }
                open_braces -= 1;
            }
            _ => out.push(c),
        }
        i += 1;
    }
    (open_braces == 0).then_some(out)
}

fn fold_special(c: char, out: &mut String) {
    match c {
        'ø' | 'Ø' => out.push('o'),
        'ł' | 'Ł' => out.push('l'),
        'đ' | 'Đ' | 'ð' | 'Ð' => out.push('d'),
        'ß' => out.push_str("ss"),
        'æ' | 'Æ' => out.push_str("ae"),
        'œ' | 'Œ' => out.push_str("oe"),
        'ı' => out.push('i'),
        'þ' | 'Þ' => out.push_str("th"),
        c if is_apostrophe(c) => out.push('\''),
        c => out.extend(c.to_lowercase()),
    }
}

/// Lowercased, diacritic-free comparison form of one surname.
pub fn fold_surname(s: &str) -> String {
    let decoded = decode_latex(s).unwrap_or_else(|| s.to_owned());
    let mut out = String::with_capacity(decoded.len());
    for c in decoded.nfkd().filter(|c| !is_combining_mark(*c)) {
        fold_special(c, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_diacritics() {
        assert_eq!(fold_surname("Petrović"), "petrovic");
        assert_eq!(fold_surname("Müller"), "muller");
        assert_eq!(fold_surname("Søgaard"), "sogaard");
        assert_eq!(fold_surname("Łukasz"), "lukasz");
    }

    #[test]
    fn latex_escapes() {
        assert_eq!(fold_surname("Valenzuela-esc\\'arcega"), "valenzuela-escarcega");
        assert_eq!(fold_surname("Petrovi\\'{c}"), "petrovic");
        assert_eq!(fold_surname("Ha\\v{s}ek"), "hasek");
        assert_eq!(fold_surname("S\\o gaard"), "sogaard");
        assert_eq!(decode_latex("bad\\q"), None);
        assert_eq!(decode_latex("unbalanced}"), None);
    }

    #[test]
    fn apostrophes_unified() {
        assert_eq!(fold_surname("O’Connor"), fold_surname("O'Connor"));
    }

    #[test]
    fn idempotent() {
        for s in ["Petrović", "Valenzuela-esc\\'arcega", "O’Connor", "Straße"] {
            let once = fold_surname(s);
            assert_eq!(fold_surname(&once), once);
        }
    }
}
