//! Tabulated charge files.
//!
//! ```json
//! {
//!   "version": 1,
//!   "rank": 1,
//!   "bound": 1,
//!   "group": "torus:1",
//!   "entries": [
//!     { "lambda": [-1], "value": "-2-i" },
//!     { "lambda": [0], "value": "0" },
//!     { "lambda": [1], "value": "2+i" }
//!   ]
//! }
//! ```

use std::collections::BTreeMap;

use serde::Deserialize;
use zstab::algebra::{Cocharacter, RootDatumLite};
use zstab::charge::TabulatedCharge;
use zstab::num::CValue;
use zstab::{Error, Result};

pub const TABLE_VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    lambda: Cocharacter,
    value: CValue,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    version: u32,
    rank: usize,
    bound: i64,
    #[serde(default)]
    group: Option<String>,
    entries: Vec<Entry>,
}

pub fn parse(text: &str) -> Result<TabulatedCharge> {
    let file: TableFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.version != TABLE_VERSION {
        return Err(Error::Parse(format!("unsupported table version {}", file.version)));
    }
    let datum = file.group.as_deref().map(RootDatumLite::parse).transpose()?;
    let mut table = BTreeMap::new();
    for e in file.entries {
        let key = e.lambda.to_string();
        if table.insert(e.lambda, e.value).is_some() {
            return Err(Error::Precondition(format!("duplicate entry for {key}")));
        }
    }
    TabulatedCharge::new(file.rank, file.bound, table, datum)
}
