//! Best-effort main-content extraction from HTML pages.
//!
//! A small readability-style pass: locate the main article container when
//! one exists, drop navigation/sidebar/ad boilerplate, keep headings and
//! `<pre>` code blocks (verbatim) in document order, and decode entities.
//! Plain text passes through unchanged; anything unparseable degrades to a
//! stripped-tags fallback rather than an error.

use std::sync::OnceLock;

use regex::Regex;

/// Tags whose entire subtree is boilerplate.
const SUPPRESS_TAGS: &[&str] = &[
    "script", "style", "noscript", "template", "svg", "nav", "header", "footer", "aside",
    "form", "button", "iframe", "select", "option", "label", "input", "textarea", "title",
];

/// class/id tokens that mark a subtree as boilerplate.
const BOILERPLATE_TOKENS: &[&str] = &[
    "nav", "navbar", "menu", "sidebar", "footer", "header", "comment", "comments", "ad",
    "ads", "advert", "advertisement", "banner", "share", "social", "related", "breadcrumb",
    "breadcrumbs", "cookie", "promo", "widget", "subscribe", "masthead", "byline",
    "pagination", "pager", "popup",
];

/// class/id tokens that mark a subtree as the main article body.
const MAIN_TOKENS: &[&str] = &["content", "maincontent", "main", "article", "post", "entry", "story"];

const VOID_TAGS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param",
    "source", "track", "wbr",
];

/// Elements that end with a blank line in the text rendering.
const PARA_TAGS: &[&str] = &[
    "p", "h1", "h2", "h3", "h4", "h5", "h6", "pre", "blockquote", "table", "ul", "ol",
    "dl", "figure",
];

/// Elements that end with a single line break.
const LINE_TAGS: &[&str] = &[
    "div", "section", "article", "main", "li", "tr", "dt", "dd", "figcaption", "thead",
    "tbody", "caption",
];

fn tag_set_contains(set: &[&str], name: &str) -> bool {
    set.contains(&name)
}

fn html_tag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)</?[a-z][a-z0-9:-]*[\s>/]|<!--|<!doctype").unwrap())
}

/// Decode the common named entities plus numeric character references.
/// Unknown entities are left untouched.
fn decode_entities(text: &str) -> String {
    if !text.contains('&') {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'&' {
            if let Some(semi) = text[i..].find(';').map(|p| i + p) {
                let body = &text[i + 1..semi];
                if semi - i <= 12 {
                    let decoded = match body {
                        "amp" => Some('&'),
                        "lt" => Some('<'),
                        "gt" => Some('>'),
                        "quot" => Some('"'),
                        "apos" => Some('\''),
                        "nbsp" => Some(' '),
                        _ => body
                            .strip_prefix('#')
                            .and_then(|num| {
                                if let Some(hex) = num.strip_prefix('x').or_else(|| num.strip_prefix('X')) {
                                    u32::from_str_radix(hex, 16).ok()
                                } else {
                                    num.parse::<u32>().ok()
                                }
                            })
                            .and_then(char::from_u32),
                    };
                    if let Some(c) = decoded {
                        out.push(c);
                        i = semi + 1;
                        continue;
                    }
                }
            }
        }
        let c = text[i..].chars().next().unwrap();
        out.push(c);
        i += c.len_utf8();
    }
    out
}

#[derive(Debug)]
enum Event<'a> {
    Start {
        name: String,
        attrs: Vec<(String, String)>,
        self_closing: bool,
    },
    End {
        name: String,
    },
    Text(&'a str),
}

fn parse_attrs(raw: &str) -> Vec<(String, String)> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        Regex::new(r#"([a-zA-Z_:][-a-zA-Z0-9_:.]*)\s*(?:=\s*("[^"]*"|'[^']*'|[^\s>]+))?"#).unwrap()
    });
    re.captures_iter(raw)
        .map(|cap| {
            let name = cap[1].to_ascii_lowercase();
            let value = cap
                .get(2)
                .map(|m| m.as_str().trim_matches(|c| c == '"' || c == '\'').to_string())
                .unwrap_or_default();
            (name, value)
        })
        .collect()
}

/// Find the end of a tag, honoring quoted attribute values.
fn tag_end(input: &str, start: usize) -> Option<usize> {
    let bytes = input.as_bytes();
    let mut quote: Option<u8> = None;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        match quote {
            Some(q) => {
                if b == q {
                    quote = None;
                }
            }
            None => match b {
                b'"' | b'\'' => quote = Some(b),
                b'>' => return Some(start + offset),
                _ => {}
            },
        }
    }
    None
}

fn tokenize(input: &str) -> Vec<Event<'_>> {
    let mut events = Vec::new();
    let bytes = input.as_bytes();
    let mut i = 0;
    let mut text_start = 0;

    macro_rules! flush_text {
        ($end:expr) => {
            if text_start < $end {
                events.push(Event::Text(&input[text_start..$end]));
            }
        };
    }

    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        let rest = &input[i..];
        if rest.starts_with("<!--") {
            flush_text!(i);
            i = rest.find("-->").map(|p| i + p + 3).unwrap_or(input.len());
            text_start = i;
            continue;
        }
        if rest.starts_with("<!") || rest.starts_with("<?") {
            flush_text!(i);
            i = tag_end(input, i).map(|p| p + 1).unwrap_or(input.len());
            text_start = i;
            continue;
        }
        if rest.starts_with("</") {
            let name_start = i + 2;
            let name_end = input[name_start..]
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-' || c == ':'))
                .map(|p| name_start + p)
                .unwrap_or(input.len());
            if name_end == name_start {
                i += 1;
                continue;
            }
            flush_text!(i);
            let name = input[name_start..name_end].to_ascii_lowercase();
            i = tag_end(input, name_end).map(|p| p + 1).unwrap_or(input.len());
            text_start = i;
            events.push(Event::End { name });
            continue;
        }
        let after = bytes.get(i + 1).copied().unwrap_or(0);
        if !after.is_ascii_alphabetic() {
            i += 1;
            continue;
        }
        let name_start = i + 1;
        let name_end = input[name_start..]
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-' || c == ':'))
            .map(|p| name_start + p)
            .unwrap_or(input.len());
        let Some(close) = tag_end(input, name_end) else {
            i += 1;
            continue;
        };
        flush_text!(i);
        let name = input[name_start..name_end].to_ascii_lowercase();
        let attr_raw = &input[name_end..close];
        let self_closing = attr_raw.trim_end().ends_with('/');
        let attrs = parse_attrs(attr_raw.trim_end().trim_end_matches('/'));
        i = close + 1;
        text_start = i;

        // Raw-text elements: consume everything up to the matching close tag
        // without emitting it (scripts and styles are never content).
        if matches!(name.as_str(), "script" | "style" | "textarea" | "title") && !self_closing {
            let close_pat = format!("</{name}");
            let lower = input[i..].to_ascii_lowercase();
            if let Some(p) = lower.find(&close_pat) {
                let after_close = i + p;
                i = tag_end(input, after_close).map(|p| p + 1).unwrap_or(input.len());
            } else {
                i = input.len();
            }
            text_start = i;
            // Still record the element so suppression nesting stays balanced.
            events.push(Event::Start { name: name.clone(), attrs, self_closing: false });
            events.push(Event::End { name });
            continue;
        }

        events.push(Event::Start { name, attrs, self_closing });
    }
    flush_text!(input.len());
    events
}

fn attr_tokens(attrs: &[(String, String)]) -> Vec<String> {
    attrs
        .iter()
        .filter(|(name, _)| name == "class" || name == "id" || name == "role")
        .flat_map(|(_, value)| {
            value
                .split(|c: char| !c.is_ascii_alphanumeric())
                .filter(|t| !t.is_empty())
                .map(str::to_ascii_lowercase)
                .collect::<Vec<_>>()
        })
        .collect()
}

fn is_boilerplate(name: &str, attrs: &[(String, String)]) -> bool {
    if tag_set_contains(SUPPRESS_TAGS, name) {
        return true;
    }
    attr_tokens(attrs)
        .iter()
        .any(|t| BOILERPLATE_TOKENS.contains(&t.as_str()))
}

fn is_main_candidate(name: &str, attrs: &[(String, String)]) -> bool {
    if name == "article" || name == "main" {
        return true;
    }
    attr_tokens(attrs)
        .iter()
        .any(|t| MAIN_TOKENS.contains(&t.as_str()))
}

/// Whitespace-normalizing text accumulator with a verbatim escape hatch for
/// preformatted blocks.
#[derive(Default)]
struct TextSink {
    out: String,
    pending_space: bool,
    trailing_newlines: usize,
}

impl TextSink {
    fn push_text(&mut self, text: &str) {
        for c in text.chars() {
            if c.is_whitespace() {
                self.pending_space = true;
            } else {
                if self.pending_space && !self.out.is_empty() && self.trailing_newlines == 0 {
                    self.out.push(' ');
                }
                self.pending_space = false;
                self.out.push(c);
                self.trailing_newlines = 0;
            }
        }
    }

    fn push_verbatim(&mut self, text: &str) {
        if text.is_empty() {
            return;
        }
        self.out.push_str(text);
        self.trailing_newlines = self.out.chars().rev().take_while(|c| *c == '\n').count();
        self.pending_space = false;
    }

    /// Ensure at least `n` trailing newlines (capped at 2) once any content
    /// exists.
    fn break_lines(&mut self, n: usize) {
        if self.out.is_empty() {
            return;
        }
        let want = n.min(2);
        while self.trailing_newlines < want {
            self.out.push('\n');
            self.trailing_newlines += 1;
        }
        self.pending_space = false;
    }

    fn soft_space(&mut self) {
        self.pending_space = true;
    }

    fn finish(self) -> String {
        self.out.trim_matches('\n').trim_end().to_string()
    }
}

struct OpenElement {
    name: String,
    suppressed: bool,
    main: bool,
    pre: bool,
}

/// Extract readable main content from an HTML document.
///
/// Plain text (no recognizable tags) is returned unchanged. For HTML, the
/// first choice is the text of main/article containers with boilerplate
/// subtrees removed; if no such container exists the whole page minus
/// boilerplate is used, and as a last resort all tags are stripped.
pub fn extract_main_content(input: &str) -> String {
    if !html_tag_re().is_match(input) {
        return input.to_string();
    }

    let events = tokenize(input);
    let mut stack: Vec<OpenElement> = Vec::new();
    let mut main_sink = TextSink::default();
    let mut all_sink = TextSink::default();
    let mut fallback_sink = TextSink::default();
    let mut saw_main_container = false;

    let state = |stack: &[OpenElement]| {
        let suppressed = stack.iter().any(|e| e.suppressed);
        let in_main = stack.iter().any(|e| e.main);
        let in_pre = stack.iter().any(|e| e.pre);
        (suppressed, in_main, in_pre)
    };

    for event in &events {
        match event {
            Event::Start { name, attrs, self_closing } => {
                let (suppressed_before, in_main_before, _) = state(&stack);
                if tag_set_contains(VOID_TAGS, name) || *self_closing {
                    let breaks = if name == "br" {
                        1
                    } else if name == "hr" {
                        2
                    } else {
                        continue;
                    };
                    fallback_sink.break_lines(breaks);
                    if !suppressed_before {
                        all_sink.break_lines(breaks);
                        if in_main_before {
                            main_sink.break_lines(breaks);
                        }
                    }
                    continue;
                }

                let suppressed = suppressed_before || is_boilerplate(name, attrs);
                let main = is_main_candidate(name, attrs) && !suppressed;
                if main {
                    saw_main_container = true;
                }
                let breaks = if tag_set_contains(PARA_TAGS, name) {
                    2
                } else if tag_set_contains(LINE_TAGS, name) {
                    1
                } else {
                    0
                };
                if breaks > 0 {
                    fallback_sink.break_lines(breaks);
                    if !suppressed {
                        all_sink.break_lines(breaks);
                        if in_main_before || main {
                            main_sink.break_lines(breaks);
                        }
                    }
                } else if matches!(name.as_str(), "td" | "th") {
                    fallback_sink.soft_space();
                    all_sink.soft_space();
                    main_sink.soft_space();
                }
                stack.push(OpenElement {
                    name: name.clone(),
                    suppressed,
                    main,
                    pre: name == "pre",
                });
            }
            Event::End { name } => {
                if let Some(pos) = stack.iter().rposition(|e| &e.name == name) {
                    stack.truncate(pos);
                }
                let breaks = if tag_set_contains(PARA_TAGS, name) {
                    2
                } else if tag_set_contains(LINE_TAGS, name) {
                    1
                } else {
                    0
                };
                if breaks > 0 {
                    let (suppressed, in_main, _) = state(&stack);
                    fallback_sink.break_lines(breaks);
                    if !suppressed {
                        all_sink.break_lines(breaks);
                        if in_main {
                            main_sink.break_lines(breaks);
                        }
                    }
                }
            }
            Event::Text(raw) => {
                let (suppressed, in_main, in_pre) = state(&stack);
                let decoded = decode_entities(raw);
                if in_pre {
                    fallback_sink.push_verbatim(&decoded);
                    if !suppressed {
                        all_sink.push_verbatim(&decoded);
                        if in_main {
                            main_sink.push_verbatim(&decoded);
                        }
                    }
                } else {
                    fallback_sink.push_text(&decoded);
                    if !suppressed {
                        all_sink.push_text(&decoded);
                        if in_main {
                            main_sink.push_text(&decoded);
                        }
                    }
                }
            }
        }
    }

    let main_text = main_sink.finish();
    if saw_main_container && !main_text.is_empty() {
        return main_text;
    }
    let all_text = all_sink.finish();
    if !all_text.is_empty() {
        return all_text;
    }
    fallback_sink.finish()
}
