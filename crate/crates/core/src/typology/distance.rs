use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::matrix::TypologyVector;
use crate::error::{Error, Result};

/// Descent path from the root family down to the language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub language_code: String,
    pub path: Vec<String>,
}

impl Lineage {
    pub fn new(language_code: impl Into<String>, path: Vec<String>) -> Result<Self> {
        let language_code = language_code.into();
        if path.is_empty() || path.iter().any(|n| n.is_empty()) {
            return Err(Error::InvalidInput(format!("empty lineage path for {language_code:?}")));
        }
        Ok(Lineage { language_code, path })
    }

    /// Parses a `>`-separated path such as `Indo-European>Germanic>West`.
    pub fn parse(language_code: &str, path: &str) -> Result<Self> {
        Lineage::new(language_code, path.split('>').map(|s| s.trim().to_string()).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
}

impl GeoPoint {
    pub fn new(language: &str, latitude: f64, longitude: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
            return Err(Error::InvalidCoordinate {
                language: language.to_string(),
                lat: latitude,
                lon: longitude,
            });
        }
        Ok(GeoPoint { latitude, longitude })
    }
}

fn check_lengths(a: &TypologyVector, b: &TypologyVector) -> Result<()> {
    if a.values.len() != b.values.len() {
        return Err(Error::LengthMismatch { left: a.values.len(), right: b.values.len() });
    }
    Ok(())
}

/// `1 - cos(a, b)`, clamped to `[0, 1]`.
pub fn cosine_distance(a: &TypologyVector, b: &TypologyVector) -> Result<f64> {
    check_lengths(a, b)?;
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    let sq_a: f64 = a.values.iter().map(|x| x * x).sum();
    let sq_b: f64 = b.values.iter().map(|x| x * x).sum();
    if sq_a == 0.0 {
        return Err(Error::UndefinedCosine(a.language_code.clone()));
    }
    if sq_b == 0.0 {
        return Err(Error::UndefinedCosine(b.language_code.clone()));
    }
    // sqrt of the product keeps a == b exact for binary vectors
    Ok((1.0 - dot / (sq_a * sq_b).sqrt()).clamp(0.0, 1.0))
}

/// Component-wise AND of two binary vectors.
pub fn and_vector(a: &TypologyVector, b: &TypologyVector) -> Result<TypologyVector> {
    check_lengths(a, b)?;
    for v in [a, b] {
        if !v.is_binary() {
            return Err(Error::InvalidInput(format!(
                "vector for {:?} is not binary",
                v.language_code
            )));
        }
    }
    Ok(TypologyVector {
        language_code: format!("{}&{}", a.language_code, b.language_code),
        values: a
            .values
            .iter()
            .zip(&b.values)
            .map(|(&x, &y)| if x == 1.0 && y == 1.0 { 1.0 } else { 0.0 })
            .collect(),
    })
}

/// One minus the shared path prefix as a fraction of the longer path.
pub fn genetic_distance(x: &Lineage, y: &Lineage) -> f64 {
    let shared = x.path.iter().zip(&y.path).take_while(|(a, b)| a == b).count();
    let longest = x.path.len().max(y.path.len());
    1.0 - shared as f64 / longest as f64
}

/// Great-circle central angle divided by pi (the antipodal angle).
pub fn geographic_distance(x: &GeoPoint, y: &GeoPoint) -> f64 {
    let (lat1, lat2) = (x.latitude.to_radians(), y.latitude.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (y.longitude - x.longitude).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    let angle = 2.0 * h.clamp(0.0, 1.0).sqrt().asin();
    (angle / PI).clamp(0.0, 1.0)
}
