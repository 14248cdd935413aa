//! JSON file formats for instances, witnesses, colorings and protocol
//! assignments.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{
    build_torus_instance, make_marked_group, GeneratorSpec, GroupError, TorusInstance,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// `{"torsion":[..],"rank":d,"periods":[..],"generators":[{"t":[..],"v":[..],"mult":k}]}`
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    #[serde(default)]
    pub torsion: Vec<i64>,
    pub rank: usize,
    #[serde(default)]
    pub periods: Vec<u64>,
    pub generators: Vec<GeneratorSpec>,
}

impl InstanceSpec {
    pub fn build(&self) -> Result<TorusInstance, GroupError> {
        let group = make_marked_group(&self.torsion, self.rank, &self.generators)?;
        build_torus_instance(group, &self.periods)
    }

    /// The canonical spec of an instance: merged generators in pair order.
    pub fn of(instance: &TorusInstance) -> Self {
        let g = instance.group();
        InstanceSpec {
            torsion: g.invariants().iter().map(|&n| n as i64).collect(),
            rank: g.rank(),
            periods: instance.periods().to_vec(),
            generators: g.generator_specs(),
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let text = to_json(value);
    fs::write(path, text).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

/// Compact JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("serializable");
    s.push('\n');
    s
}

pub fn read_instance(path: &Path) -> Result<TorusInstance, IoError> {
    Ok(read_json::<InstanceSpec>(path)?.build()?)
}
