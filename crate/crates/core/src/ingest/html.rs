//! Best-effort conversion of abstract HTML into Markdown that keeps only
//! text and hyperlinks.
//!
//! Links become `[anchor](href)` with the href left untouched. Emphasis and
//! other inline markup are dropped, `script`/`style` content is removed,
//! whitespace runs collapse to one space and block elements separate
//! paragraphs with a blank line.

const SKIPPED: &[&str] = &["script", "style", "noscript", "template", "head"];
const BLOCKS: &[&str] = &[
    "p",
    "div",
    "br",
    "li",
    "ul",
    "ol",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "table",
    "tr",
    "section",
    "blockquote",
    "dl",
    "dt",
    "dd",
    "hr",
    "pre",
];

pub fn html_to_markdown(html: &str) -> String {
    let mut out = Writer::default();
    let mut skip_depth: Option<(String, usize)> = None;
    let mut link: Option<(String, String)> = None;
    let mut link_depth = 0usize;
    let mut rest = html;

    while !rest.is_empty() {
        let Some(lt) = rest.find('<') else {
            emit_text(rest, &skip_depth, &mut link, &mut out);
            break;
        };
        emit_text(&rest[..lt], &skip_depth, &mut link, &mut out);
        rest = &rest[lt..];

        if let Some(after) = rest.strip_prefix("<!--") {
            rest = after.find("-->").map_or("", |end| &after[end + 3..]);
            continue;
        }
        let Some(tag) = parse_tag(rest) else {
            // A stray `<` is text.
            emit_text("<", &skip_depth, &mut link, &mut out);
            rest = &rest[1..];
            continue;
        };
        rest = &rest[tag.len..];

        if let Some((name, depth)) = &mut skip_depth {
            if tag.name == *name {
                if tag.closing {
                    *depth -= 1;
                    if *depth == 0 {
                        skip_depth = None;
                    }
                } else if !tag.self_closing {
                    *depth += 1;
                }
            }
            continue;
        }
        if SKIPPED.contains(&tag.name.as_str()) {
            if !tag.closing && !tag.self_closing {
                skip_depth = Some((tag.name, 1));
            }
            continue;
        }

        if tag.name == "a" {
            if tag.closing {
                if link_depth > 0 {
                    link_depth -= 1;
                    if link_depth == 0 {
                        if let Some((href, anchor)) = link.take() {
                            out.link(&href, &anchor);
                        }
                    }
                }
            } else if !tag.self_closing {
                link_depth += 1;
                if link_depth == 1 {
                    match tag.href {
                        Some(href) => link = Some((href, String::new())),
                        None => link = None,
                    }
                }
            }
            continue;
        }

        if BLOCKS.contains(&tag.name.as_str()) {
            if let Some((_, anchor)) = &mut link {
                anchor.push(' ');
            } else {
                out.paragraph_break();
            }
        }
    }
    if let Some((href, anchor)) = link.take() {
        out.link(&href, &anchor);
    }
    out.finish()
}

fn emit_text(raw: &str, skip: &Option<(String, usize)>, link: &mut Option<(String, String)>, out: &mut Writer) {
    if skip.is_some() || raw.is_empty() {
        return;
    }
    let text = decode_entities(raw);
    match link {
        Some((_, anchor)) => anchor.push_str(&text),
        None => out.text(&text),
    }
}

struct Tag {
    name: String,
    closing: bool,
    self_closing: bool,
    href: Option<String>,
    len: usize,
}

fn parse_tag(input: &str) -> Option<Tag> {
    let bytes = input.as_bytes();
    let mut i = 1;
    let closing = bytes.get(i) == Some(&b'/');
    if closing {
        i += 1;
    }
    if bytes.get(i) == Some(&b'!') || bytes.get(i) == Some(&b'?') {
        let end = input.find('>')?;
        return Some(Tag { name: "!".into(), closing: false, self_closing: true, href: None, len: end + 1 });
    }
    let name_start = i;
    while bytes.get(i).is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'-' || *b == b':') {
        i += 1;
    }
    if i == name_start {
        return None;
    }
    let name = input[name_start..i].to_ascii_lowercase();

    let mut href = None;
    let mut quote: Option<u8> = None;
    let attrs_start = i;
    while let Some(&b) = bytes.get(i) {
        match quote {
            Some(q) if b == q => quote = None,
            Some(_) => {}
            None if b == b'"' || b == b'\'' => quote = Some(b),
            None if b == b'>' => break,
            None => {}
        }
        i += 1;
    }
    if i >= bytes.len() {
        return None;
    }
    let attrs = &input[attrs_start..i];
    let self_closing = attrs.trim_end().ends_with('/');
    if name == "a" && !closing {
        href = attribute(attrs, "href").map(|h| decode_entities(&h));
    }
    Some(Tag { name, closing, self_closing, href, len: i + 1 })
}

fn attribute(attrs: &str, wanted: &str) -> Option<String> {
    let mut rest = attrs.trim_start();
    while !rest.is_empty() {
        let name_end = rest.find(|c: char| c == '=' || c.is_whitespace() || c == '/').unwrap_or(rest.len());
        let name = &rest[..name_end];
        rest = rest[name_end..].trim_start();
        let value = if let Some(after) = rest.strip_prefix('=') {
            let after = after.trim_start();
            let (value, remaining) = match after.chars().next() {
                Some(q @ ('"' | '\'')) => {
                    let body = &after[1..];
                    let end = body.find(q).unwrap_or(body.len());
                    (&body[..end], body.get(end + 1..).unwrap_or(""))
                }
                _ => {
                    let end = after.find(char::is_whitespace).unwrap_or(after.len());
                    (&after[..end], &after[end..])
                }
            };
            rest = remaining.trim_start();
            Some(value)
        } else {
            if name.is_empty() {
                rest = rest.get(1..).unwrap_or("").trim_start();
            }
            None
        };
        if name.eq_ignore_ascii_case(wanted) {
            return value.map(str::to_string);
        }
    }
    None
}

/// Decode the named entities that occur in abstracts plus numeric ones.
/// `&nbsp;` becomes a plain space.
pub(crate) fn decode_entities(text: &str) -> String {
    if !text.contains('&') {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest[1..].find(';').filter(|&end| end <= 10).and_then(|end| {
            let entity = &rest[1..end + 1];
            let c = match entity {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                "ndash" => Some('–'),
                "mdash" => Some('—'),
                _ => entity.strip_prefix('#').and_then(|num| {
                    let code = match num.strip_prefix(['x', 'X']) {
                        Some(hex) => u32::from_str_radix(hex, 16).ok(),
                        None => num.parse().ok(),
                    };
                    code.and_then(char::from_u32).map(|c| if c == '\u{a0}' { ' ' } else { c })
                }),
            };
            c.map(|c| (c, end + 2))
        });
        match decoded {
            Some((c, consumed)) => {
                out.push(c);
                rest = &rest[consumed..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

#[derive(Default)]
struct Writer {
    paragraphs: Vec<String>,
    current: String,
}

impl Writer {
    fn text(&mut self, text: &str) {
        for c in text.chars() {
            if c.is_whitespace() {
                if !self.current.is_empty() && !self.current.ends_with(' ') {
                    self.current.push(' ');
                }
            } else {
                self.current.push(c);
            }
        }
    }

    fn link(&mut self, href: &str, anchor: &str) {
        let collapsed = collapse(anchor);
        if collapsed.is_empty() {
            self.text(anchor);
            return;
        }
        if anchor.starts_with(char::is_whitespace) {
            self.text(" ");
        }
        self.current.push('[');
        self.current.push_str(&collapsed);
        self.current.push_str("](");
        self.current.push_str(href);
        self.current.push(')');
        if anchor.ends_with(char::is_whitespace) {
            self.text(" ");
        }
    }

    fn paragraph_break(&mut self) {
        let para = self.current.trim().to_string();
        if !para.is_empty() {
            self.paragraphs.push(para);
        }
        self.current.clear();
    }

    fn finish(mut self) -> String {
        self.paragraph_break();
        self.paragraphs.join("\n\n")
    }
}

fn collapse(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
