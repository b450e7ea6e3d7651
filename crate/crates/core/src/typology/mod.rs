//! Dataset-independent language features: typology vectors, genealogy and geography.

pub mod distance;
pub mod forest;
pub mod impute;
pub mod matrix;

use std::collections::BTreeMap;
use std::io::Read;

use serde::Deserialize;

pub use distance::{and_vector, cosine_distance, genetic_distance, geographic_distance, GeoPoint, Lineage};
pub use impute::{impute_knn, impute_missforest, ImputationReport, MissForestParams};
pub use matrix::{
    crop_matrix, load_matrix, load_matrix_with, CellPolicy, CropReport, TypologyMatrix, TypologyStore,
    TypologyVector,
};

use crate::error::{Error, Result};

/// Default crop threshold for both features and languages.
pub const DEFAULT_CROP_THRESHOLD: f64 = 0.25;

#[derive(Deserialize)]
struct LineageRecord {
    language_code: String,
    path: String,
}

#[derive(Deserialize)]
struct GeoRecord {
    language_code: String,
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
struct FamilyRecord {
    language_code: String,
    family: String,
}

fn insert_unique<V>(map: &mut BTreeMap<String, V>, key: String, value: V) -> Result<()> {
    if map.contains_key(&key) {
        return Err(Error::DuplicateLanguage(key));
    }
    map.insert(key, value);
    Ok(())
}

/// Reads `language_code,path` rows with `>`-separated descent paths.
pub fn load_lineages<R: Read>(input: R) -> Result<BTreeMap<String, Lineage>> {
    let mut out = BTreeMap::new();
    for record in csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input).deserialize() {
        let r: LineageRecord = record?;
        let lineage = Lineage::parse(&r.language_code, &r.path)?;
        insert_unique(&mut out, r.language_code, lineage)?;
    }
    Ok(out)
}

/// Reads `language_code,lat,lon` rows.
pub fn load_geography<R: Read>(input: R) -> Result<BTreeMap<String, GeoPoint>> {
    let mut out = BTreeMap::new();
    for record in csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input).deserialize() {
        let r: GeoRecord = record?;
        let point = GeoPoint::new(&r.language_code, r.lat, r.lon)?;
        insert_unique(&mut out, r.language_code, point)?;
    }
    Ok(out)
}

/// Reads `language_code,family` rows.
pub fn load_families<R: Read>(input: R) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for record in csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input).deserialize() {
        let r: FamilyRecord = record?;
        insert_unique(&mut out, r.language_code, r.family)?;
    }
    Ok(out)
}
