//! Prompt templates for the agent operations.
//!
//! A template set is five system/user prompt pairs, one per operation, with
//! `{placeholder}` slots filled in a single substitution pass (values are
//! never re-scanned, so document text containing braces is safe). The
//! built-in set is compiled in; alternate sets load from a directory of
//! `<op>.system.txt` / `<op>.user.txt` files.

use std::collections::HashMap;
use std::path::Path;

/// The five templated operations and the placeholders each may use.
const OPS: [(&str, &[&str]); 5] = [
    ("recruit", &["document"]),
    ("extract", &["document", "role"]),
    ("topics", &["document", "role"]),
    ("rerank_topic", &["document", "role", "candidates", "topics"]),
    ("rerank_knowledge", &["document", "role", "candidates", "knowledge"]),
];

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("template set {set:?} is missing {file}: {reason}")]
    MissingFile {
        set: String,
        file: String,
        reason: String,
    },
    #[error("template {template:?} uses unknown placeholder {{{placeholder}}}")]
    UnknownPlaceholder {
        template: String,
        placeholder: String,
    },
    #[error("no template for operation {op:?}")]
    UnknownOp { op: String },
    #[error("template {template:?} rendered without a value for {{{placeholder}}}")]
    MissingValue {
        template: String,
        placeholder: String,
    },
}

#[derive(Debug, Clone)]
struct Template {
    system: String,
    user: String,
}

#[derive(Debug, Clone)]
pub struct TemplateSet {
    name: String,
    templates: HashMap<&'static str, Template>,
}

impl TemplateSet {
    /// The compiled-in prompt set.
    pub fn builtin() -> TemplateSet {
        macro_rules! tpl {
            ($name:literal) => {
                Template {
                    system: include_str!(concat!(
                        "../../templates/default/",
                        $name,
                        ".system.txt"
                    ))
                    .trim_end()
                    .to_string(),
                    user: include_str!(concat!("../../templates/default/", $name, ".user.txt"))
                        .trim_end()
                        .to_string(),
                }
            };
        }
        let templates = HashMap::from([
            ("recruit", tpl!("recruit")),
            ("extract", tpl!("extract")),
            ("topics", tpl!("topics")),
            ("rerank_topic", tpl!("rerank_topic")),
            ("rerank_knowledge", tpl!("rerank_knowledge")),
        ]);
        let set = TemplateSet {
            name: "builtin".to_string(),
            templates,
        };
        set.validate().expect("built-in templates are valid");
        set
    }

    /// Loads `<op>.system.txt` / `<op>.user.txt` for all five operations
    /// from a directory. The directory name becomes the set name.
    pub fn load_dir(dir: &Path) -> Result<TemplateSet, TemplateError> {
        let name = dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("custom")
            .to_string();
        let mut templates = HashMap::new();
        for (op, _) in OPS {
            let read = |kind: &str| -> Result<String, TemplateError> {
                let file = format!("{op}.{kind}.txt");
                std::fs::read_to_string(dir.join(&file))
                    .map(|s| s.trim_end().to_string())
                    .map_err(|e| TemplateError::MissingFile {
                        set: name.clone(),
                        file,
                        reason: e.to_string(),
                    })
            };
            templates.insert(
                op,
                Template {
                    system: read("system")?,
                    user: read("user")?,
                },
            );
        }
        let set = TemplateSet { name, templates };
        set.validate()?;
        Ok(set)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Checks every placeholder in every template against its operation's
    /// allowed set, so typos fail at load time rather than mid-run.
    fn validate(&self) -> Result<(), TemplateError> {
        for (op, allowed) in OPS {
            let template = &self.templates[op];
            for (part, text) in [("system", &template.system), ("user", &template.user)] {
                for placeholder in placeholders(text) {
                    if !allowed.contains(&placeholder) {
                        return Err(TemplateError::UnknownPlaceholder {
                            template: format!("{op}.{part}"),
                            placeholder: placeholder.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Renders an operation's (system, user) pair. Every placeholder that
    /// appears in the template must have a value.
    pub fn render(
        &self,
        op: &str,
        values: &[(&str, &str)],
    ) -> Result<(String, String), TemplateError> {
        let template = self.templates.get(op).ok_or_else(|| TemplateError::UnknownOp {
            op: op.to_string(),
        })?;
        let fill = |text: &str, part: &str| -> Result<String, TemplateError> {
            substitute(text, values).map_err(|placeholder| TemplateError::MissingValue {
                template: format!("{op}.{part}"),
                placeholder,
            })
        };
        Ok((
            fill(&template.system, "system")?,
            fill(&template.user, "user")?,
        ))
    }
}

/// Placeholder names appearing in `text` — `{name}` where name is lowercase
/// ASCII/underscore. Anything else between braces (JSON examples, code) is
/// left alone.
fn placeholders(text: &str) -> Vec<&str> {
    let mut found = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let start = i + 1;
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_lowercase() || bytes[end] == b'_') {
                end += 1;
            }
            if end > start && end < bytes.len() && bytes[end] == b'}' {
                found.push(&text[start..end]);
                i = end + 1;
                continue;
            }
        }
        i += 1;
    }
    found
}

/// Single-pass substitution. Returns the name of the first placeholder
/// without a value on failure.
fn substitute(text: &str, values: &[(&str, &str)]) -> Result<String, String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let (before, after_open) = rest.split_at(open);
        out.push_str(before);
        let candidate = &after_open[1..];
        let name_len = candidate
            .bytes()
            .take_while(|b| b.is_ascii_lowercase() || *b == b'_')
            .count();
        if name_len > 0 && candidate.as_bytes().get(name_len) == Some(&b'}') {
            let name = &candidate[..name_len];
            match values.iter().find(|(k, _)| *k == name) {
                Some((_, value)) => out.push_str(value),
                None => return Err(name.to_string()),
            }
            rest = &candidate[name_len + 1..];
        } else {
            out.push('{');
            rest = candidate;
        }
    }
    out.push_str(rest);
    Ok(out)
}
