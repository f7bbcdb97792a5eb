//! Trained models on disk, in the core crate's versioned text formats.

use std::fs;
use std::path::{Path, PathBuf};

use rlsched_core::agents::{AgentError, QTable, ValueNetwork};

use crate::harness::TrainedModel;

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Format {
        path: PathBuf,
        #[source]
        source: AgentError,
    },
}

impl TrainedModel {
    pub fn to_text(&self) -> String {
        match self {
            TrainedModel::Dqn(net) => net.to_text(),
            TrainedModel::QTable(table) => table.to_text(),
        }
    }

    /// Recognizes either format by its header line.
    pub fn from_text(text: &str) -> Result<Self, AgentError> {
        if text.starts_with("rlsched-qtable") {
            QTable::from_text(text).map(TrainedModel::QTable)
        } else {
            ValueNetwork::from_text(text).map(TrainedModel::Dqn)
        }
    }
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<(), ModelFileError> {
    fs::write(path, model.to_text()).map_err(|source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<TrainedModel, ModelFileError> {
    let text = fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    TrainedModel::from_text(&text).map_err(|source| ModelFileError::Format {
        path: path.to_path_buf(),
        source,
    })
}
