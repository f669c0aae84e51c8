use std::sync::OnceLock;

use jsonschema::error::ValidationErrorKind;
use jsonschema::Validator;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result, Violation};
use crate::reflect::ReflectTemplate;
use crate::scatter::{into_result, ScatterTemplate};

pub const SCHEMA_VERSION: u32 = 1;

/// The published template schema.
pub const TEMPLATE_SCHEMA: &str = include_str!("../../schema/template.schema.json");

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub author: Option<String>,
    /// Photo the template was matched against, relative to the catalog.
    #[serde(default)]
    pub reference_image: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "body", rename_all = "snake_case")]
pub enum TemplateBody {
    Scatter(ScatterTemplate),
    Reflect(ReflectTemplate),
}

impl TemplateBody {
    pub fn kind(&self) -> &'static str {
        match self {
            TemplateBody::Scatter(_) => "scatter",
            TemplateBody::Reflect(_) => "reflect",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateDoc {
    pub id: String,
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: TemplateBody,
    #[serde(default)]
    pub metadata: Metadata,
}

impl TemplateDoc {
    pub fn new(id: impl Into<String>, body: TemplateBody, metadata: Metadata) -> Self {
        Self {
            id: id.into(),
            schema_version: SCHEMA_VERSION,
            body,
            metadata,
        }
    }

    /// Value-level checks. Paths are rooted at the document, e.g.
    /// `body.glare.radius`.
    pub fn check(&self, out: &mut Vec<Violation>) {
        if !valid_id(&self.id) {
            out.push(Violation::new("id", "must be 1-128 of [A-Za-z0-9_.-], not starting with a separator"));
        }
        if self.schema_version != SCHEMA_VERSION {
            out.push(Violation::new(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        match &self.body {
            TemplateBody::Scatter(t) => t.check("body", out),
            TemplateBody::Reflect(t) => t.check("body", out),
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("template serializes");
        s.push('\n');
        s
    }
}

pub(crate) fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
        && id.chars().next().is_some_and(|c| c.is_ascii_alphanumeric())
}

fn schema() -> &'static Validator {
    static SCHEMA: OnceLock<Validator> = OnceLock::new();
    SCHEMA.get_or_init(|| {
        let doc: Value = serde_json::from_str(TEMPLATE_SCHEMA).expect("bundled schema is JSON");
        jsonschema::validator_for(&doc).expect("bundled schema compiles")
    })
}

/// `/body/irises/0/k` → `body.irises[0].k`.
fn dotted(pointer: &str) -> String {
    let mut out = String::new();
    for seg in pointer.split('/').skip(1) {
        let seg = seg.replace("~1", "/").replace("~0", "~");
        if !seg.is_empty() && seg.bytes().all(|b| b.is_ascii_digit()) {
            out.push('[');
            out.push_str(&seg);
            out.push(']');
        } else {
            if !out.is_empty() {
                out.push('.');
            }
            out.push_str(&seg);
        }
    }
    out
}

fn join(base: &str, field: &str) -> String {
    if base.is_empty() {
        field.to_string()
    } else {
        format!("{base}.{field}")
    }
}

/// Structural violations against the published schema.
pub fn schema_violations(doc: &Value) -> Vec<Violation> {
    let mut out = Vec::new();
    for err in schema().iter_errors(doc) {
        let base = dotted(err.instance_path().as_str());
        match err.kind() {
            ValidationErrorKind::Required { property } => {
                let name = property.as_str().map_or_else(|| property.to_string(), str::to_string);
                out.push(Violation::new(join(&base, &name), "required field is missing"));
            }
            ValidationErrorKind::AdditionalProperties { unexpected } => {
                for u in unexpected {
                    out.push(Violation::new(join(&base, u), "unknown field"));
                }
            }
            _ => out.push(Violation::new(base, err.to_string())),
        }
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    out.dedup();
    out
}

/// Parses template JSON.
///
/// Errors are layered: [`Error::Parse`] for malformed JSON (with line and
/// column), [`Error::Schema`] for structural problems and
/// [`Error::Validation`] for out-of-range values.
pub fn parse_template(text: &str) -> Result<TemplateDoc> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    parse_template_value(value)
}

pub fn parse_template_value(value: Value) -> Result<TemplateDoc> {
    let structural = schema_violations(&value);
    if !structural.is_empty() {
        return Err(Error::Schema(structural));
    }
    let doc: TemplateDoc =
        serde_json::from_value(value).map_err(|e| Error::Schema(vec![Violation::new("", e.to_string())]))?;
    validate_template(&doc)?;
    Ok(doc)
}

/// Every value-level violation, or `Ok` if there are none.
pub fn validate_template(doc: &TemplateDoc) -> Result<()> {
    into_result(|out| doc.check(out))
}
