//! Text form of worked examples.
//!
//! ````text
//! Q: <question on one line>
//! Step 1: <step>
//! Step 2: <step>
//! ```python
//! <code>
//! ```
//! ````
//!
//! Structured exemplars label every step, `Step 1 [sequence]: ...`, with one of
//! `sequence`, `branch` or `loop`. The code fence is at least three backticks
//! and always longer than any backtick run inside the code.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::PromptError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExemplarStyle {
    Cot,
    Scot,
}

impl ExemplarStyle {
    pub fn as_str(self) -> &'static str {
        match self {
            ExemplarStyle::Cot => "cot",
            ExemplarStyle::Scot => "scot",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    Sequence,
    Branch,
    Loop,
}

impl StructureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StructureKind::Sequence => "sequence",
            StructureKind::Branch => "branch",
            StructureKind::Loop => "loop",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "sequence" => Some(StructureKind::Sequence),
            "branch" => Some(StructureKind::Branch),
            "loop" => Some(StructureKind::Loop),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningStep {
    /// Present exactly for structured exemplars.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureKind>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CotExemplar {
    pub question: String,
    pub reasoning_steps: Vec<ReasoningStep>,
    pub answer_code: String,
    pub style: ExemplarStyle,
}

static STEP: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^Step (\d+)(?: \[([a-z]+)\])?:\s*(.*)$").unwrap());

fn flatten(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Backtick fence long enough that no run inside `code` can close it.
pub fn fence_for(code: &str) -> String {
    let longest = code
        .split(|c| c != '`')
        .map(str::len)
        .max()
        .unwrap_or(0);
    "`".repeat(longest.max(2) + 1)
}

fn parse_failure(msg: impl Into<String>) -> PromptError {
    PromptError::ParseFailure(msg.into())
}

impl CotExemplar {
    pub fn cot(question: &str, steps: &[&str], code: &str) -> Result<Self, PromptError> {
        Self::build(question, steps.iter().map(|s| (None, *s)).collect(), code, ExemplarStyle::Cot)
    }

    pub fn scot(question: &str, steps: &[(StructureKind, &str)], code: &str) -> Result<Self, PromptError> {
        Self::build(question, steps.iter().map(|(k, s)| (Some(*k), *s)).collect(), code, ExemplarStyle::Scot)
    }

    fn build(
        question: &str,
        steps: Vec<(Option<StructureKind>, &str)>,
        code: &str,
        style: ExemplarStyle,
    ) -> Result<Self, PromptError> {
        let e = CotExemplar {
            question: flatten(question),
            reasoning_steps: steps
                .into_iter()
                .map(|(structure, text)| ReasoningStep {
                    structure,
                    text: flatten(text),
                })
                .collect(),
            answer_code: code.trim_end_matches('\n').to_string(),
            style,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if flatten(&self.question).is_empty() {
            return Err(parse_failure("exemplar question is empty"));
        }
        if self.reasoning_steps.is_empty() {
            return Err(parse_failure("exemplar has no reasoning steps"));
        }
        for (i, step) in self.reasoning_steps.iter().enumerate() {
            if flatten(&step.text).is_empty() {
                return Err(parse_failure(format!("step {} is empty", i + 1)));
            }
            if step.structure.is_some() != (self.style == ExemplarStyle::Scot) {
                return Err(parse_failure(format!(
                    "step {} labeling does not fit a {} exemplar",
                    i + 1,
                    self.style.as_str()
                )));
            }
        }
        if self.answer_code.trim().is_empty() {
            return Err(parse_failure("exemplar code is empty"));
        }
        Ok(())
    }

    pub fn format(&self) -> String {
        let mut out = format!("Q: {}\n", flatten(&self.question));
        for (i, step) in self.reasoning_steps.iter().enumerate() {
            match step.structure {
                Some(kind) => out.push_str(&format!("Step {} [{}]: {}\n", i + 1, kind.as_str(), flatten(&step.text))),
                None => out.push_str(&format!("Step {}: {}\n", i + 1, flatten(&step.text))),
            }
        }
        let code = self.answer_code.trim_end_matches('\n');
        let fence = fence_for(code);
        out.push_str(&format!("{fence}python\n{code}\n{fence}\n"));
        out
    }

    /// Strict parse of one exemplar; anything outside the grammar, other than
    /// surrounding blank lines, is a `parse_failure`.
    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let lines: Vec<&str> = text.split('\n').collect();
        let mut i = 0;
        while i < lines.len() && lines[i].trim().is_empty() {
            i += 1;
        }
        let question = lines
            .get(i)
            .and_then(|l| l.trim_end().strip_prefix("Q:"))
            .ok_or_else(|| parse_failure("expected a `Q:` line"))?;
        i += 1;

        let mut steps = Vec::new();
        while let Some(c) = lines.get(i).and_then(|l| STEP.captures(l.trim_end())) {
            let k: usize = c[1].parse().map_err(|_| parse_failure("bad step number"))?;
            if k != steps.len() + 1 {
                return Err(parse_failure(format!("expected step {}, found step {k}", steps.len() + 1)));
            }
            let structure = match c.get(2) {
                None => None,
                Some(m) => Some(
                    StructureKind::parse(m.as_str())
                        .ok_or_else(|| parse_failure(format!("unknown structure kind `{}`", m.as_str())))?,
                ),
            };
            steps.push(ReasoningStep {
                structure,
                text: c[3].to_string(),
            });
            i += 1;
        }
        if steps.is_empty() {
            return Err(parse_failure("expected at least one `Step 1:` line"));
        }
        let labeled = steps.iter().filter(|s| s.structure.is_some()).count();
        let style = match labeled {
            0 => ExemplarStyle::Cot,
            n if n == steps.len() => ExemplarStyle::Scot,
            _ => return Err(parse_failure("steps mix labeled and unlabeled forms")),
        };

        let open = lines.get(i).copied().unwrap_or("");
        let fence_len = open.chars().take_while(|&c| c == '`').count();
        if fence_len < 3 {
            return Err(parse_failure("expected a fenced code block after the steps"));
        }
        i += 1;
        let body_start = i;
        let close = lines[body_start..]
            .iter()
            .position(|l| {
                let t = l.trim_end();
                t.len() >= fence_len && t.chars().all(|c| c == '`')
            })
            .ok_or_else(|| parse_failure("unterminated code block"))?;
        let code = lines[body_start..body_start + close].join("\n");
        if lines[body_start + close + 1..].iter().any(|l| !l.trim().is_empty()) {
            return Err(parse_failure("unexpected text after the code block"));
        }

        let e = CotExemplar {
            question: flatten(question),
            reasoning_steps: steps,
            answer_code: code.trim_end_matches('\n').to_string(),
            style,
        };
        e.validate()?;
        Ok(e)
    }
}

/// Splits a document holding several exemplars separated by blank lines.
pub fn parse_exemplars(text: &str) -> Result<Vec<CotExemplar>, PromptError> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut fence: Option<usize> = None;
    for line in text.split('\n') {
        let ticks = line.chars().take_while(|&c| c == '`').count();
        match fence {
            None if ticks >= 3 => fence = Some(ticks),
            Some(n) if ticks >= n && line.trim_end().chars().all(|c| c == '`') => {
                current.push_str(line);
                current.push('\n');
                out.push(CotExemplar::parse(&current)?);
                current.clear();
                fence = None;
                continue;
            }
            _ => {}
        }
        current.push_str(line);
        current.push('\n');
    }
    if !current.trim().is_empty() {
        return Err(parse_failure("trailing text without a code block"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell() -> CotExemplar {
        CotExemplar::cot(
            "Prepare a Bell state.",
            &["Create a two-qubit circuit.", "Apply H then CX."],
            "from qiskit import QuantumCircuit\nqc = QuantumCircuit(2)\nqc.h(0)\nqc.cx(0, 1)\n",
        )
        .unwrap()
    }

    #[test]
    fn format_shape() {
        let text = bell().format();
        assert!(text.starts_with("Q: Prepare a Bell state.\nStep 1: Create a two-qubit circuit.\nStep 2: Apply H then CX.\n```python\n"));
        assert!(text.ends_with("qc.cx(0, 1)\n```\n"));
    }

    #[test]
    fn round_trip() {
        let e = bell();
        assert_eq!(CotExemplar::parse(&e.format()).unwrap(), e);
        let s = CotExemplar::scot(
            "Count to three.",
            &[(StructureKind::Sequence, "Start at 1."), (StructureKind::Loop, "Print each value.")],
            "for i in range(1, 4):\n    print(i)",
        )
        .unwrap();
        let text = s.format();
        assert!(text.contains("Step 2 [loop]: Print each value."));
        assert_eq!(CotExemplar::parse(&text).unwrap(), s);
    }

    #[test]
    fn fence_grows_around_backticks() {
        let e = CotExemplar::cot("q", &["s"], "s = '```'\nt = '````'").unwrap();
        let text = e.format();
        assert!(text.contains("`````python\n"));
        assert_eq!(CotExemplar::parse(&text).unwrap(), e);
    }

    #[test]
    fn rejects_prose_and_mixed_labels() {
        assert!(CotExemplar::parse("Here is how you do it: just write the code.").is_err());
        let mixed = "Q: q\nStep 1 [loop]: a\nStep 2: b\n```python\nx\n```\n";
        assert!(CotExemplar::parse(mixed).is_err());
        let unknown = "Q: q\nStep 1 [switch]: a\n```python\nx\n```\n";
        assert!(CotExemplar::parse(unknown).is_err());
        let gap = "Q: q\nStep 1: a\nStep 3: b\n```python\nx\n```\n";
        assert!(CotExemplar::parse(gap).is_err());
        let chatter = "Q: q\nStep 1: a\n```python\nx\n```\nHope this helps!\n";
        assert!(CotExemplar::parse(chatter).is_err());
        let open = "Q: q\nStep 1: a\n```python\nx\n";
        assert!(CotExemplar::parse(open).is_err());
    }

    #[test]
    fn multi_document() {
        let doc = format!("{}\n{}", bell().format(), bell().format());
        assert_eq!(parse_exemplars(&doc).unwrap().len(), 2);
    }
}
