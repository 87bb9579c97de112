//! Response schemas sent with structured-output requests and checked on
//! every reply.

use std::sync::OnceLock;

use jsonschema::Validator;
use serde_json::Value;

pub struct ResponseSchema {
    pub name: &'static str,
    pub document: Value,
    validator: Validator,
}

impl ResponseSchema {
    fn compile(name: &'static str, text: &str) -> ResponseSchema {
        let document: Value = serde_json::from_str(text).expect("shipped schemas are valid JSON");
        let validator = jsonschema::validator_for(&document).expect("shipped schemas compile");
        ResponseSchema { name, document, validator }
    }

    /// All violations joined into one message, or `Ok` when the value
    /// conforms.
    pub fn check(&self, v: &Value) -> Result<(), String> {
        let errors: Vec<String> =
            self.validator.iter_errors(v).map(|e| format!("{}: {}", e.instance_path(), e)).collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors.join("; "))
        }
    }
}

pub fn srg_schema() -> &'static ResponseSchema {
    static S: OnceLock<ResponseSchema> = OnceLock::new();
    S.get_or_init(|| ResponseSchema::compile("srg", include_str!("../schemas/srg.schema.json")))
}

pub fn rubric_schema() -> &'static ResponseSchema {
    static S: OnceLock<ResponseSchema> = OnceLock::new();
    S.get_or_init(|| ResponseSchema::compile("rubric", include_str!("../schemas/rubric.schema.json")))
}
