//! Versioned prompt templates. Logs reference them by SHA-256 of the text.

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: &'static str,
    pub version: u32,
    pub text: &'static str,
}

pub const RUBRIC_TO_ITEM: PromptTemplate =
    PromptTemplate { name: "rubric_to_item", version: 1, text: include_str!("../prompts/rubric_to_item.v1.txt") };

pub const SKETCH_TO_SRG: PromptTemplate =
    PromptTemplate { name: "sketch_to_srg", version: 1, text: include_str!("../prompts/sketch_to_srg.v1.txt") };

impl PromptTemplate {
    pub fn id(&self) -> String {
        format!("{}.v{}", self.name, self.version)
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }

    /// Substitutes `{{key}}` placeholders. Unknown placeholders are left in
    /// place.
    pub fn render(&self, vars: &[(&str, &str)]) -> String {
        let mut out = self.text.to_string();
        for (k, v) in vars {
            out = out.replace(&format!("{{{{{k}}}}}"), v);
        }
        out
    }
}
