use std::sync::LazyLock;

use regex::Regex;

use super::ParsedError;

pub const STDERR_TAIL_CHARS: usize = 2000;

const TRACEBACK_HEADER: &str = "Traceback (most recent call last):";

static FRAME: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"^\s+File "([^"]+)", line (\d+)"#).unwrap());
static EXCEPTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)(?::(?: (.*))?)?$").unwrap());

/// Structured view of an interpreter traceback.
///
/// Only the last traceback block is read, so chained exceptions report the
/// final one. Tracebacks without a header (syntax errors raised while
/// compiling the script) are recognized by their `File "...", line N` frame.
pub fn parse_error_trace(stderr: &str) -> Option<ParsedError> {
    let lines: Vec<&str> = stderr.lines().collect();
    let block = match lines.iter().rposition(|l| l.trim_end() == TRACEBACK_HEADER) {
        Some(h) => &lines[h + 1..],
        None => {
            let first_frame = lines.iter().position(|l| FRAME.is_match(l))?;
            &lines[first_frame..]
        }
    };

    let mut last_frame = None;
    let mut last_frame_line = None;
    for (i, line) in block.iter().enumerate() {
        if let Some(c) = FRAME.captures(line) {
            last_frame = Some((c[1].to_string(), c[2].parse().ok()?));
            last_frame_line = Some(i);
        }
    }

    let search_from = last_frame_line.map_or(0, |i| i + 1);
    let (offset, caps) = block[search_from..].iter().enumerate().find_map(|(i, line)| {
        if line.starts_with(char::is_whitespace) {
            return None;
        }
        EXCEPTION.captures(line).map(|c| (i, c))
    })?;
    let error_type = caps[1].to_string();
    let mut message = caps.get(2).map_or(String::new(), |m| m.as_str().to_string());
    for extra in &block[search_from + offset + 1..] {
        if extra.trim().is_empty() {
            break;
        }
        message.push('\n');
        message.push_str(extra);
    }
    Some(ParsedError {
        error_type,
        message: message.trim_end().to_string(),
        last_frame,
    })
}

/// Last [`STDERR_TAIL_CHARS`] characters of `stderr`.
pub fn stderr_tail(stderr: &str) -> &str {
    let count = stderr.chars().count();
    if count <= STDERR_TAIL_CHARS {
        return stderr;
    }
    let (idx, _) = stderr.char_indices().nth(count - STDERR_TAIL_CHARS).expect("index within string");
    &stderr[idx..]
}
