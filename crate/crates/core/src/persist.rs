//! Model files: a JSON envelope `{format, version, model, pnml}`. Petri-net
//! models carry their net as embedded PNML text.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::methods::FittedModel;
use crate::petrinet::{parse_pnml, write_pnml, NetError};

pub const MODEL_FORMAT: &str = "seqpredict-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a model file (format `{0}`)")]
    Format(String),
    #[error("unsupported model version {0}")]
    Version(u32),
    #[error("embedded net: {0}")]
    Net(#[from] NetError),
    #[error("Petri-net model without an embedded net")]
    MissingNet,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    model: FittedModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pnml: Option<String>,
}

pub fn model_to_string(model: &FittedModel) -> Result<String, PersistError> {
    let pnml = match model {
        FittedModel::Petri(p) => Some(write_pnml(p.net())),
        _ => None,
    };
    let envelope = Envelope { format: MODEL_FORMAT.into(), version: MODEL_VERSION, model: model.clone(), pnml };
    Ok(serde_json::to_string_pretty(&envelope)?)
}

pub fn model_from_str(text: &str) -> Result<FittedModel, PersistError> {
    let envelope: Envelope = serde_json::from_str(text)?;
    if envelope.format != MODEL_FORMAT {
        return Err(PersistError::Format(envelope.format));
    }
    if envelope.version != MODEL_VERSION {
        return Err(PersistError::Version(envelope.version));
    }
    let mut model = envelope.model;
    match &mut model {
        FittedModel::Automaton(pa) => pa.reindex(),
        FittedModel::Petri(p) => {
            let pnml = envelope.pnml.ok_or(PersistError::MissingNet)?;
            p.set_net(parse_pnml(&pnml)?);
        }
        _ => {}
    }
    Ok(model)
}

pub fn save_model(model: &FittedModel, path: &Path) -> Result<(), PersistError> {
    std::fs::write(path, model_to_string(model)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<FittedModel, PersistError> {
    model_from_str(&std::fs::read_to_string(path)?)
}
