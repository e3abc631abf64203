//! JSON model store: fitted networks and algebra elements, tagged by type.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::AlgebraElement;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::spaces::SpacePoint;
use crate::Evaluate;

pub const SCHEMA: &str = "funcspan.model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Model {
    Network(Network),
    AlgebraElement(AlgebraElement),
}

impl Evaluate for Model {
    fn evaluate(&self, x: &SpacePoint) -> Result<f64> {
        match self {
            Model::Network(n) => n.eval(x),
            Model::AlgebraElement(a) => a.eval(x),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    schema: String,
    model: Model,
}

impl Model {
    pub fn to_json(&self) -> String {
        let env = Envelope {
            schema: SCHEMA.to_string(),
            model: self.clone(),
        };
        serde_json::to_string_pretty(&env).expect("models serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let env: Envelope =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("model json: {e}")))?;
        if env.schema != SCHEMA {
            return Err(Error::invalid(format!(
                "unsupported model schema {:?}, expected {SCHEMA:?}",
                env.schema
            )));
        }
        Ok(env.model)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.to_json() + "\n")
    }

    pub fn load(path: &Path) -> std::io::Result<Result<Self>> {
        Ok(Self::from_json(&fs::read_to_string(path)?))
    }
}
