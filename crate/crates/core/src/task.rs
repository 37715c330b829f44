use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Basic,
    Intermediate,
    Advanced,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Basic, Category::Intermediate, Category::Advanced];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Basic => "basic",
            Category::Intermediate => "intermediate",
            Category::Advanced => "advanced",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckerKind {
    /// Stdout equals the payload, ignoring trailing whitespace.
    ExactStdout,
    /// Stdout contains the payload.
    ContainsStdout,
    /// The payload is appended to the program, and the combined program must
    /// run cleanly.
    AssertionScript,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckerSpec {
    pub kind: CheckerKind,
    pub payload: String,
}

impl CheckerSpec {
    pub fn exact_stdout(payload: impl Into<String>) -> Self {
        CheckerSpec {
            kind: CheckerKind::ExactStdout,
            payload: payload.into(),
        }
    }

    pub fn contains_stdout(payload: impl Into<String>) -> Self {
        CheckerSpec {
            kind: CheckerKind::ContainsStdout,
            payload: payload.into(),
        }
    }

    pub fn assertion_script(payload: impl Into<String>) -> Self {
        CheckerSpec {
            kind: CheckerKind::AssertionScript,
            payload: payload.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationTask {
    pub id: String,
    pub prompt: String,
    pub category: Category,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checker: Option<CheckerSpec>,
}

impl GenerationTask {
    pub fn new(id: impl Into<String>, prompt: impl Into<String>, category: Category) -> Self {
        GenerationTask {
            id: id.into(),
            prompt: prompt.into(),
            category,
            checker: None,
        }
    }

    pub fn with_checker(mut self, checker: CheckerSpec) -> Self {
        self.checker = Some(checker);
        self
    }
}
