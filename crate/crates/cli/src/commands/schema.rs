use crate::cli::SchemaAction;
use anyhow::{bail, Context, Result};
use metaharvest_core::schema::{builtin_schema, builtin_schema_json, BUILTIN_SCHEMA_IDS};

pub fn run(action: SchemaAction) -> Result<()> {
    match action {
        SchemaAction::List => {
            for id in BUILTIN_SCHEMA_IDS {
                let schema = builtin_schema(id).expect("built-in schemas are valid");
                println!(
                    "{id}: {} fields in {} groups",
                    schema.fields.len(),
                    schema.groups().len()
                );
            }
            Ok(())
        }
        SchemaAction::Export { id, out } => {
            let Some(json) = builtin_schema_json(&id) else {
                bail!(
                    "unknown schema '{id}' (expected one of: {})",
                    BUILTIN_SCHEMA_IDS.join(", ")
                );
            };
            match out {
                Some(path) => {
                    std::fs::write(&path, json)
                        .with_context(|| format!("failed to write {}", path.display()))?;
                    eprintln!("wrote {}", path.display());
                }
                None => print!("{json}"),
            }
            Ok(())
        }
    }
}
