//! Benchmark corpora: program records, clone pairs, query/code pairs,
//! deterministic splits and corpus statistics.

mod load;
mod ojclone;
mod split;
mod stats;
pub mod synthetic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use load::{
    cap_pairs, load_dataset, read_jsonl, read_programs_jsonl, select_subset, write_jsonl, Dataset,
    DatasetKind, Pairs, BCB_SUBSET_SIZE,
};
pub use ojclone::{build_ojclone, OjClone};
pub use split::{split, DatasetSplit};
pub use stats::{corpus_stats, CorpusStats};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    C,
    Java,
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lang::C => "c",
            Lang::Java => "java",
        })
    }
}

impl FromStr for Lang {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "c" => Ok(Lang::C),
            "java" => Ok(Lang::Java),
            other => Err(Error::arg(format!("unknown language `{other}`"))),
        }
    }
}

/// One code unit: a whole file (POJ-104) or a single method (BigCloneBench,
/// CodeSearchNet).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceProgram {
    pub id: String,
    pub lang: Lang,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc: Option<String>,
}

impl SourceProgram {
    pub fn new(id: impl Into<String>, lang: Lang, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::arg("program text is empty"));
        }
        Ok(SourceProgram {
            id: id.into(),
            lang,
            text,
            label: None,
            doc: None,
        })
    }

    pub fn with_label(mut self, label: u32) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_doc(mut self, doc: impl Into<String>) -> Self {
        self.doc = Some(doc.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClonePair {
    pub id_a: String,
    pub id_b: String,
    pub is_clone: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryCodePair {
    pub query: String,
    pub code_id: String,
}
