//! Line/indentation parser for the scenario document format.
//!
//! The format is a restricted key-value/list notation: mappings are
//! `key: value` lines, nested blocks are indented with spaces, sequence items
//! start with `- `, and `#` begins a comment. The parser produces an untyped
//! node tree; the schema layer in [`super::schema`] interprets it.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl SyntaxError {
    fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        SyntaxError { line, col, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Scalar { value: String, line: usize },
    Sequence { items: Vec<Node>, line: usize },
    Mapping { entries: Vec<(String, Node)>, line: usize },
}

impl Node {
    pub fn line(&self) -> usize {
        match self {
            Node::Scalar { line, .. } | Node::Sequence { line, .. } | Node::Mapping { line, .. } => {
                *line
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Node::Scalar { .. } => "scalar",
            Node::Sequence { .. } => "list",
            Node::Mapping { .. } => "mapping",
        }
    }
}

#[derive(Debug, Clone)]
struct Line {
    indent: usize,
    text: String,
    number: usize,
}

/// Parses a whole document into its top-level mapping.
pub fn parse(input: &str) -> Result<Node, SyntaxError> {
    let lines = logical_lines(input)?;
    if lines.is_empty() {
        return Ok(Node::Mapping { entries: Vec::new(), line: 1 });
    }
    let mut pos = 0;
    let node = parse_block(&lines, &mut pos, 0)?;
    if pos < lines.len() {
        let stray = &lines[pos];
        return Err(SyntaxError::new(
            stray.number,
            stray.indent + 1,
            "unexpected indentation".to_string(),
        ));
    }
    Ok(node)
}

fn logical_lines(input: &str) -> Result<Vec<Line>, SyntaxError> {
    let mut out = Vec::new();
    for (idx, raw) in input.lines().enumerate() {
        let number = idx + 1;
        if raw.contains('\t') {
            let col = raw.find('\t').unwrap() + 1;
            return Err(SyntaxError::new(number, col, "tab characters are not allowed; indent with spaces"));
        }
        let without_comment = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let trimmed = without_comment.trim_end();
        if trimmed.trim().is_empty() {
            continue;
        }
        let indent = trimmed.len() - trimmed.trim_start().len();
        out.push(Line { indent, text: trimmed.trim_start().to_string(), number });
    }
    Ok(out)
}

fn parse_block(lines: &[Line], pos: &mut usize, indent: usize) -> Result<Node, SyntaxError> {
    let first = &lines[*pos];
    if first.text == "-" || first.text.starts_with("- ") {
        parse_sequence(lines, pos, indent)
    } else {
        parse_mapping(lines, pos, indent)
    }
}

fn parse_sequence(lines: &[Line], pos: &mut usize, indent: usize) -> Result<Node, SyntaxError> {
    let start_line = lines[*pos].number;
    let mut items = Vec::new();
    while *pos < lines.len() {
        let line = &lines[*pos];
        if line.indent != indent {
            if line.indent > indent {
                return Err(SyntaxError::new(line.number, line.indent + 1, "unexpected indentation"));
            }
            break;
        }
        if line.text != "-" && !line.text.starts_with("- ") {
            break;
        }
        let inline = line.text.trim_start_matches('-').trim_start().to_string();
        let number = line.number;
        *pos += 1;
        if inline.is_empty() {
            // Block item: content on the following deeper-indented lines.
            if *pos >= lines.len() || lines[*pos].indent <= indent {
                return Err(SyntaxError::new(number, indent + 1, "empty list item"));
            }
            let child_indent = lines[*pos].indent;
            items.push(parse_block(lines, pos, child_indent)?);
        } else if let Some((key, rest)) = split_key(&inline) {
            // Inline mapping start: `- key: value`; continuation keys are
            // indented to the column right of the dash.
            let child_indent = indent + 2;
            let mut entries = vec![(key.to_string(), scalar_or_block(lines, pos, rest, number, child_indent)?)];
            collect_mapping_entries(lines, pos, child_indent, &mut entries)?;
            items.push(Node::Mapping { entries, line: number });
        } else {
            items.push(Node::Scalar { value: inline, line: number });
        }
    }
    Ok(Node::Sequence { items, line: start_line })
}

fn parse_mapping(lines: &[Line], pos: &mut usize, indent: usize) -> Result<Node, SyntaxError> {
    let start_line = lines[*pos].number;
    let mut entries = Vec::new();
    collect_mapping_entries(lines, pos, indent, &mut entries)?;
    if entries.is_empty() {
        let line = &lines[*pos];
        return Err(SyntaxError::new(line.number, line.indent + 1, "expected `key: value`"));
    }
    Ok(Node::Mapping { entries, line: start_line })
}

fn collect_mapping_entries(
    lines: &[Line],
    pos: &mut usize,
    indent: usize,
    entries: &mut Vec<(String, Node)>,
) -> Result<(), SyntaxError> {
    while *pos < lines.len() {
        let line = &lines[*pos];
        if line.indent != indent {
            if line.indent > indent {
                return Err(SyntaxError::new(line.number, line.indent + 1, "unexpected indentation"));
            }
            break;
        }
        if line.text.starts_with("- ") || line.text == "-" {
            break;
        }
        let Some((key, rest)) = split_key(&line.text) else {
            return Err(SyntaxError::new(line.number, line.indent + 1, "expected `key: value`"));
        };
        if entries.iter().any(|(k, _)| k == key) {
            return Err(SyntaxError::new(line.number, line.indent + 1, format!("duplicate key `{key}`")));
        }
        let key = key.to_string();
        let number = line.number;
        *pos += 1;
        let value = scalar_or_block(lines, pos, rest, number, indent)?;
        entries.push((key, value));
    }
    Ok(())
}

/// Value after `key:`: either an inline scalar or a nested block on the
/// following lines.
fn scalar_or_block(
    lines: &[Line],
    pos: &mut usize,
    inline: &str,
    line_number: usize,
    parent_indent: usize,
) -> Result<Node, SyntaxError> {
    if !inline.is_empty() {
        return Ok(Node::Scalar { value: inline.to_string(), line: line_number });
    }
    if *pos < lines.len() && lines[*pos].indent > parent_indent {
        let child_indent = lines[*pos].indent;
        return parse_block(lines, pos, child_indent);
    }
    Err(SyntaxError::new(line_number, parent_indent + 1, "missing value"))
}

fn split_key(text: &str) -> Option<(&str, &str)> {
    let colon = text.find(':')?;
    let key = &text[..colon];
    if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return None;
    }
    let rest = text[colon + 1..].trim();
    Some((key, rest))
}

/// Splits an inline list like `[A1, B1, L1]` into its elements.
pub fn split_inline_list(value: &str, line: usize) -> Result<Vec<String>, SyntaxError> {
    let inner = value
        .strip_prefix('[')
        .and_then(|v| v.strip_suffix(']'))
        .ok_or_else(|| SyntaxError::new(line, 1, format!("expected `[a, b, ...]`, got {value:?}")))?;
    let inner = inner.trim();
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    Ok(inner.split(',').map(|item| item.trim().to_string()).collect())
}
