//! Gateway assembly and config precedence: flags beat environment variables
//! beat manifest values.

use crate::cli::{EvalLlmChoice, LlmChoice};
use anyhow::{bail, Context, Result};
use metaharvest_core::corpus::LlmOverrides;
use metaharvest_core::gateway::http::{HttpChatModel, HttpEmbeddingModel};
use metaharvest_core::gateway::{Gateway, GatewayConfig, LiveSettings};
use metaharvest_core::mock::mock_gateway;
use metaharvest_core::store::Store;
use std::sync::Arc;
use std::time::Duration;

pub struct ModelFlags {
    pub chat_model: Option<String>,
    pub embed_model: Option<String>,
}

impl ModelFlags {
    pub fn none() -> Self {
        ModelFlags {
            chat_model: None,
            embed_model: None,
        }
    }
}

/// Builds the gateway selected by `--llm`. Live configuration is validated
/// up front, before any fetch or store write.
pub fn build_gateway(
    choice: LlmChoice,
    store: Option<Arc<Store>>,
    flags: ModelFlags,
    overrides: Option<&LlmOverrides>,
) -> Result<Gateway> {
    match choice {
        LlmChoice::Mock => {
            tracing::info!("using deterministic offline mock models");
            Ok(mock_gateway(store))
        }
        LlmChoice::Live => {
            let settings = LiveSettings::from_env().context("live gateway is not configured")?;
            let chat_model = flags
                .chat_model
                .or_else(|| overrides.and_then(|o| o.chat_model.clone()))
                .unwrap_or_else(|| settings.chat_model.clone());
            let embed_model = flags
                .embed_model
                .or_else(|| overrides.and_then(|o| o.embed_model.clone()))
                .unwrap_or_else(|| settings.embed_model.clone());
            let config = GatewayConfig {
                chat_model,
                embed_model,
                temperature: overrides.and_then(|o| o.temperature).unwrap_or(0.0),
                requests_per_minute: overrides.and_then(|o| o.requests_per_minute),
                ..GatewayConfig::default()
            };
            let timeout = Duration::from_secs(120);
            Ok(Gateway::new(
                Box::new(HttpChatModel::new(&settings, timeout)),
                Box::new(HttpEmbeddingModel::new(&settings, timeout)),
                config,
                store,
            ))
        }
    }
}

pub fn build_eval_gateway(
    choice: EvalLlmChoice,
    store: Option<Arc<Store>>,
) -> Result<Option<Gateway>> {
    match choice {
        EvalLlmChoice::None => Ok(None),
        EvalLlmChoice::Mock => Ok(Some(build_gateway(
            LlmChoice::Mock,
            store,
            ModelFlags::none(),
            None,
        )?)),
        EvalLlmChoice::Live => Ok(Some(build_gateway(
            LlmChoice::Live,
            store,
            ModelFlags::none(),
            None,
        )?)),
    }
}

/// Resolves a schema from an explicit flag or the manifest default.
pub fn resolve_schema_arg(
    flag: Option<&str>,
    manifest_schema: Option<&str>,
) -> Result<metaharvest_core::schema::MetadataSchema> {
    let id = match (flag, manifest_schema) {
        (Some(id), _) => id,
        (None, Some(id)) => id,
        (None, None) => bail!("no schema given: pass --schema or set schema_id in the manifest"),
    };
    metaharvest_core::schema::resolve_schema(id)
        .with_context(|| format!("failed to load schema '{id}'"))
}
