//! Prompt construction: plain, chain-of-thought (plain and structured),
//! repair prompts for later passes, and model-assisted exemplar generation.

mod exemplar;
mod seeds;

use std::collections::BTreeMap;
use std::path::Path;

use crate::backend::{Backend, BackendError, CompletionRequest, SamplingParams};
use crate::sandbox::ParsedError;
use crate::task::GenerationTask;

pub use exemplar::{fence_for, parse_exemplars, CotExemplar, ExemplarStyle, ReasoningStep, StructureKind};
pub use seeds::seed_exemplars;

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("no exemplars given")]
    NoExemplars,
    #[error("exemplar {index} is {found}, expected {expected}")]
    StyleMismatch {
        index: usize,
        expected: &'static str,
        found: &'static str,
    },
    #[error("exemplar parse failure: {0}")]
    ParseFailure(String),
    #[error("template `{template}` leaves placeholder {{{placeholder}}} unbound")]
    UnboundPlaceholder { template: String, placeholder: String },
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("exemplar store: {0}")]
    Io(#[from] std::io::Error),
}

impl PromptError {
    pub fn kind(&self) -> &'static str {
        match self {
            PromptError::EmptyInput(_) => "empty_input",
            PromptError::NoExemplars => "no_exemplars",
            PromptError::StyleMismatch { .. } => "style_mismatch",
            PromptError::ParseFailure(_) => "parse_failure",
            PromptError::UnboundPlaceholder { .. } => "unbound_placeholder",
            PromptError::Backend(e) => e.kind(),
            PromptError::Io(_) => "io_error",
        }
    }
}

pub const PLACEHOLDERS: [&str; 5] = ["task_prompt", "code", "error_trace", "context_chunks", "exemplars"];

/// Text with `{task_prompt}`, `{code}`, `{error_trace}`, `{context_chunks}`
/// and `{exemplars}` slots. Other brace groups are left alone, so templates
/// may contain code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub body: String,
}

impl PromptTemplate {
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> Self {
        PromptTemplate {
            name: name.into(),
            body: body.into(),
        }
    }

    pub fn placeholders(&self) -> Vec<&'static str> {
        PLACEHOLDERS
            .iter()
            .copied()
            .filter(|p| self.body.contains(&format!("{{{p}}}")))
            .collect()
    }

    /// Substitutes every slot in one left-to-right pass; bound values are
    /// inserted as-is and never rescanned.
    pub fn render(&self, values: &BTreeMap<&str, &str>) -> Result<String, PromptError> {
        let mut out = String::with_capacity(self.body.len() + values.values().map(|v| v.len()).sum::<usize>());
        let mut rest = self.body.as_str();
        'scan: while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            for name in PLACEHOLDERS {
                if after.starts_with(name) && after[name.len()..].starts_with('}') {
                    let value = values.get(name).ok_or_else(|| PromptError::UnboundPlaceholder {
                        template: self.name.clone(),
                        placeholder: name.to_string(),
                    })?;
                    out.push_str(value);
                    rest = &after[name.len() + 1..];
                    continue 'scan;
                }
            }
            out.push('{');
            rest = after;
        }
        out.push_str(rest);
        Ok(out)
    }
}

pub fn repair_template() -> PromptTemplate {
    PromptTemplate::new(
        "repair",
        "The program below was written for the following task but failed when it was run.\n\
         \n\
         ### Task\n\
         {task_prompt}\n\
         \n\
         ### Program\n\
         {code}\n\
         \n\
         ### Error\n\
         {error_trace}\n\
         \n\
         Fix the program so that it completes the task without this error. \
         Reply with the complete corrected program in a single fenced code block.\n",
    )
}

fn fenced(lang: &str, body: &str) -> String {
    let fence = fence_for(body);
    format!("{fence}{lang}\n{body}\n{fence}")
}

fn error_block(error: &ParsedError) -> String {
    let mut text = format!("{}: {}", error.error_type, error.message);
    if let Some((file, line)) = &error.last_frame {
        text.push_str(&format!("\n(raised at {file}, line {line})"));
    }
    fenced("text", &text)
}

/// Repair prompt holding the task, the failed program and its error, in that
/// order. Program and error sit in fences longer than any backtick run they
/// contain, so both appear verbatim.
pub fn build_repair_prompt(task_prompt: &str, code: &str, error: &ParsedError) -> Result<String, PromptError> {
    if task_prompt.trim().is_empty() {
        return Err(PromptError::EmptyInput("task_prompt"));
    }
    if code.trim().is_empty() {
        return Err(PromptError::EmptyInput("code"));
    }
    if error.message.trim().is_empty() {
        return Err(PromptError::EmptyInput("error message"));
    }
    let code_block = fenced("python", code);
    let error_trace = error_block(error);
    let values = BTreeMap::from([
        ("task_prompt", task_prompt),
        ("code", code_block.as_str()),
        ("error_trace", error_trace.as_str()),
    ]);
    repair_template().render(&values)
}

pub fn build_plain_prompt(task: &GenerationTask) -> String {
    format!(
        "{}\n\nReply with the complete Python program in a single fenced code block.\n",
        task.prompt.trim_end()
    )
}

fn check_style(exemplars: &[CotExemplar], style: ExemplarStyle) -> Result<(), PromptError> {
    if exemplars.is_empty() {
        return Err(PromptError::NoExemplars);
    }
    for (index, e) in exemplars.iter().enumerate() {
        if e.style != style {
            return Err(PromptError::StyleMismatch {
                index,
                expected: style.as_str(),
                found: e.style.as_str(),
            });
        }
    }
    Ok(())
}

fn step_instruction(style: ExemplarStyle) -> &'static str {
    match style {
        ExemplarStyle::Cot => {
            "Let's think step by step. Answer with numbered `Step k:` lines, \
             then the complete program in a fenced code block."
        }
        ExemplarStyle::Scot => {
            "Let's think step by step, labeling each step with the program structure it uses \
             (sequence, branch or loop) as `Step k [structure]:`, \
             then give the complete program in a fenced code block."
        }
    }
}

fn exemplar_block(exemplars: &[CotExemplar]) -> String {
    exemplars.iter().map(CotExemplar::format).collect::<Vec<_>>().join("\n")
}

/// Worked examples in the given order, then the task as a new `Q:` and an
/// instruction asking for steps and code in the same format.
pub fn build_cot_prompt(task: &GenerationTask, exemplars: &[CotExemplar], style: ExemplarStyle) -> Result<String, PromptError> {
    check_style(exemplars, style)?;
    Ok(format!(
        "{}\nQ: {}\n{}\n",
        exemplar_block(exemplars),
        task.prompt.split_whitespace().collect::<Vec<_>>().join(" "),
        step_instruction(style)
    ))
}

/// Asks the backend for a new exemplar for `task` in the style of `seeds` and
/// parses the reply strictly. The reply may restate the `Q:` line or continue
/// straight from the steps.
pub fn generate_cot_exemplar(
    task: &GenerationTask,
    seeds: &[CotExemplar],
    backend: &dyn Backend,
    params: &SamplingParams,
) -> Result<CotExemplar, PromptError> {
    let style = seeds.first().ok_or(PromptError::NoExemplars)?.style;
    check_style(seeds, style)?;
    let question = task.prompt.split_whitespace().collect::<Vec<_>>().join(" ");
    let prompt = format!(
        "Write a worked example for the last question in exactly the format of the examples: \
         the `Q:` line, numbered steps{}, and a fenced code block. Output nothing else.\n\n{}\nQ: {}\n",
        if style == ExemplarStyle::Scot { " labeled [sequence], [branch] or [loop]" } else { "" },
        exemplar_block(seeds),
        question
    );
    let request = CompletionRequest::new(prompt, params.with_n(1)).tagged(task.id.clone());
    let response = backend.complete(&request)?;
    let completion = response
        .completions
        .into_iter()
        .next()
        .ok_or_else(|| PromptError::ParseFailure("backend returned no completion".into()))?;
    let text = if completion.trim_start().starts_with("Q:") {
        completion
    } else {
        format!("Q: {question}\n{completion}")
    };
    let parsed = CotExemplar::parse(&text)?;
    if parsed.style != style {
        return Err(PromptError::ParseFailure(format!(
            "generated a {} exemplar for {} seeds",
            parsed.style.as_str(),
            style.as_str()
        )));
    }
    Ok(parsed)
}

/// Reads every `*.txt` file in `dir`, in file-name order, one exemplar each.
pub fn load_exemplar_dir(dir: &Path) -> Result<Vec<CotExemplar>, PromptError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            CotExemplar::parse(&std::fs::read_to_string(p)?)
                .map_err(|e| PromptError::ParseFailure(format!("{}: {e}", p.display())))
        })
        .collect()
}

pub fn write_exemplar_dir(dir: &Path, exemplars: &[CotExemplar]) -> Result<(), PromptError> {
    std::fs::create_dir_all(dir)?;
    for (i, e) in exemplars.iter().enumerate() {
        std::fs::write(dir.join(format!("{:02}.txt", i + 1)), e.format())?;
    }
    Ok(())
}
