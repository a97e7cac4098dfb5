use std::sync::OnceLock;

use regex::Regex;

use super::LocalContext;

/// Marker left in benchmark text where a non-target citation stood.
pub const OTHER_CITATION_MARKER: &str = "OTHERCIT";

fn marker_run() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\s*OTHERCIT(?:\s*OTHERCIT)*\s*").expect("static pattern"))
}

fn closes_phrase(c: char) -> bool {
    matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | ')' | ']')
}

/// Remove every non-target citation marker from `text`.
///
/// Whitespace around a removed marker collapses to one space. No space is
/// kept before closing punctuation or at the start of the text; at the end of
/// the text one space survives if the marker was separated by whitespace.
pub fn strip_markers(text: &str) -> String {
    if !text.contains(OTHER_CITATION_MARKER) {
        return text.to_owned();
    }
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for m in marker_run().find_iter(text) {
        out.push_str(&text[last..m.start()]);
        let had_space = m.as_str().starts_with(char::is_whitespace) || m.as_str().ends_with(char::is_whitespace);
        let rest = &text[m.end()..];
        let joiner = match rest.chars().next() {
            _ if out.is_empty() => "",
            None if had_space => " ",
            None => "",
            Some(c) if closes_phrase(c) => "",
            Some(_) => " ",
        };
        out.push_str(joiner);
        last = m.end();
    }
    out.push_str(&text[last..]);
    out
}

pub fn count_markers(text: &str) -> usize {
    text.matches(OTHER_CITATION_MARKER).count()
}

/// Strip non-target markers from both sides of a context; the ground truth
/// is left untouched.
pub fn strip_nontarget_citations(mut ctx: LocalContext) -> LocalContext {
    ctx.left_text = strip_markers(&ctx.left_text);
    ctx.right_text = strip_markers(&ctx.right_text);
    ctx
}
