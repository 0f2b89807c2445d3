//! JSON input files.
//!
//! Sequence files take one of three shapes:
//!
//! ```json
//! {"p": ["1/2", "1/3"]}
//! {"iid": {"q": "100/101", "n": 1000}}
//! {"secretary": {"n": 100}}
//! ```
//!
//! Bound schedules are lists of `{"L": 1200, "r": "1/1000"}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{iid_sequence, secretary_sequence, ScheduleEntry};
use crate::error::Result;
use crate::numerics::rat_parse;
use crate::strategy::OddsSequence;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum SequenceSpec {
    P(Vec<String>),
    Iid { q: String, n: usize },
    Secretary { n: usize },
}

impl SequenceSpec {
    pub fn to_sequence(&self) -> Result<OddsSequence> {
        match self {
            SequenceSpec::P(values) => {
                let p = values.iter().map(|v| rat_parse(v)).collect::<Result<Vec<_>>>()?;
                OddsSequence::new(p)
            }
            SequenceSpec::Iid { q, n } => iid_sequence(&rat_parse(q)?, *n),
            SequenceSpec::Secretary { n } => secretary_sequence(*n),
        }
    }
}

pub fn parse_sequence(text: &str) -> Result<OddsSequence> {
    serde_json::from_str::<SequenceSpec>(text)?.to_sequence()
}

pub fn load_sequence(path: &Path) -> Result<OddsSequence> {
    parse_sequence(&std::fs::read_to_string(path)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleItem {
    #[serde(rename = "L")]
    length: usize,
    r: String,
}

pub fn parse_schedule(text: &str) -> Result<Vec<ScheduleEntry>> {
    serde_json::from_str::<Vec<ScheduleItem>>(text)?
        .into_iter()
        .map(|item| {
            Ok(ScheduleEntry {
                length: item.length,
                odds: rat_parse(&item.r)?,
            })
        })
        .collect()
}

pub fn load_schedule(path: &Path) -> Result<Vec<ScheduleEntry>> {
    parse_schedule(&std::fs::read_to_string(path)?)
}
