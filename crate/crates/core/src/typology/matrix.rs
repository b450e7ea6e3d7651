use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-language typological features with missing cells.
///
/// Cells are stored row-major. Binary matrices hold `Some(0.0)` / `Some(1.0)`;
/// pre-imputed real-valued matrices may hold any value in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypologyMatrix {
    feature_ids: Vec<String>,
    language_codes: Vec<String>,
    cells: Vec<Option<f64>>,
}

impl TypologyMatrix {
    pub fn new(
        feature_ids: Vec<String>,
        language_codes: Vec<String>,
        cells: Vec<Option<f64>>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &feature_ids {
            if !seen.insert(f.as_str()) {
                return Err(Error::DuplicateFeature(f.clone()));
            }
        }
        let mut seen = HashSet::new();
        for l in &language_codes {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLanguage(l.clone()));
            }
        }
        if cells.len() != feature_ids.len() * language_codes.len() {
            return Err(Error::Invariant(format!(
                "matrix has {} cells, expected {} x {}",
                cells.len(),
                language_codes.len(),
                feature_ids.len()
            )));
        }
        Ok(TypologyMatrix { feature_ids, language_codes, cells })
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn language_codes(&self) -> &[String] {
        &self.language_codes
    }

    pub fn n_features(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn n_languages(&self) -> usize {
        self.language_codes.len()
    }

    pub fn get(&self, language: usize, feature: usize) -> Option<f64> {
        self.cells[language * self.feature_ids.len() + feature]
    }

    pub fn set(&mut self, language: usize, feature: usize, value: Option<f64>) {
        let n = self.feature_ids.len();
        self.cells[language * n + feature] = value;
    }

    pub fn row(&self, language: usize) -> &[Option<f64>] {
        let n = self.feature_ids.len();
        &self.cells[language * n..(language + 1) * n]
    }

    pub fn language_index(&self, code: &str) -> Option<usize> {
        self.language_codes.iter().position(|l| l == code)
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    pub fn missing_fraction(&self) -> f64 {
        if self.cells.is_empty() {
            0.0
        } else {
            self.missing_count() as f64 / self.cells.len() as f64
        }
    }

    pub fn feature_missing_count(&self, feature: usize) -> usize {
        (0..self.n_languages()).filter(|&l| self.get(l, feature).is_none()).count()
    }

    pub fn language_missing_count(&self, language: usize) -> usize {
        self.row(language).iter().filter(|c| c.is_none()).count()
    }

    /// Restricts to the given languages and features, in the given orders.
    pub fn select(&self, languages: &[usize], features: &[usize]) -> TypologyMatrix {
        let mut cells = Vec::with_capacity(languages.len() * features.len());
        for &l in languages {
            for &f in features {
                cells.push(self.get(l, f));
            }
        }
        TypologyMatrix {
            feature_ids: features.iter().map(|&f| self.feature_ids[f].clone()).collect(),
            language_codes: languages.iter().map(|&l| self.language_codes[l].clone()).collect(),
            cells,
        }
    }

    /// Fully defined vectors keyed by language code; fails on any missing cell.
    pub fn to_store(&self) -> Result<TypologyStore> {
        let mut vectors = BTreeMap::new();
        for (l, code) in self.language_codes.iter().enumerate() {
            let mut values = Vec::with_capacity(self.n_features());
            for (f, cell) in self.row(l).iter().enumerate() {
                match cell {
                    Some(v) => values.push(*v),
                    None => {
                        return Err(Error::InvalidInput(format!(
                            "language {code:?} has missing value for {:?}; impute first",
                            self.feature_ids[f]
                        )))
                    }
                }
            }
            vectors.insert(code.clone(), TypologyVector { language_code: code.clone(), values });
        }
        Ok(TypologyStore { feature_ids: self.feature_ids.clone(), vectors })
    }

    /// Writes the matrix as delimited text; missing cells become `?`.
    pub fn write_delimited<W: std::io::Write>(&self, out: W, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
        let mut header = vec!["language_code".to_string()];
        header.extend(self.feature_ids.iter().cloned());
        w.write_record(&header)?;
        for (l, code) in self.language_codes.iter().enumerate() {
            let mut record = vec![code.clone()];
            record.extend(self.row(l).iter().map(|c| match c {
                Some(v) => format!("{v}"),
                None => "?".to_string(),
            }));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypologyVector {
    pub language_code: String,
    pub values: Vec<f64>,
}

impl TypologyVector {
    pub fn new(language_code: impl Into<String>, values: Vec<f64>) -> Self {
        TypologyVector { language_code: language_code.into(), values }
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Rounds each component to 0 or 1, with 0.5 going to 1.
    pub fn thresholded(&self) -> TypologyVector {
        TypologyVector {
            language_code: self.language_code.clone(),
            values: self.values.iter().map(|&v| if v >= 0.5 { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// Fully defined vectors for one feature block.
#[derive(Debug, Clone, PartialEq)]
pub struct TypologyStore {
    pub feature_ids: Vec<String>,
    pub vectors: BTreeMap<String, TypologyVector>,
}

impl TypologyStore {
    pub fn get(&self, code: &str) -> Option<&TypologyVector> {
        self.vectors.get(code)
    }

    pub fn len(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature_ids.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellPolicy {
    /// Only `0`, `1`, `?` or empty are accepted.
    Binary,
    /// Any real in `[0, 1]` (pre-imputed vectors), plus missing markers.
    Unit,
    /// Any finite real. Enough for cropping multistate exports.
    Numeric,
}

fn sniff_delimiter(text: &str) -> u8 {
    let header = text.lines().next().unwrap_or_default();
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

/// Loads a binary typology matrix from CSV or TSV.
///
/// The first column holds language codes; the header names the features.
pub fn load_matrix<R: Read>(input: R) -> Result<TypologyMatrix> {
    load_matrix_with(input, CellPolicy::Binary)
}

pub fn load_matrix_with<R: Read>(mut input: R, policy: CellPolicy) -> Result<TypologyMatrix> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(sniff_delimiter(&text))
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());

    let header = reader.headers()?.clone();
    if header.is_empty() {
        return Err(Error::InvalidInput("typology matrix has no header".into()));
    }
    let feature_ids: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let expected = feature_ids.len() + 1;

    let mut language_codes = Vec::new();
    let mut cells = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != expected {
            return Err(Error::RaggedRow { row: row + 1, found: record.len(), expected });
        }
        let code = record[0].trim().to_string();
        for (f, raw) in record.iter().skip(1).enumerate() {
            cells.push(parse_cell(raw.trim(), policy).ok_or_else(|| Error::NonBinaryCell {
                language: code.clone(),
                feature: feature_ids[f].clone(),
                value: raw.to_string(),
            })?);
        }
        language_codes.push(code);
    }
    TypologyMatrix::new(feature_ids, language_codes, cells)
}

fn parse_cell(raw: &str, policy: CellPolicy) -> Option<Option<f64>> {
    match raw {
        "" | "?" => Some(None),
        "0" => Some(Some(0.0)),
        "1" => Some(Some(1.0)),
        other => match policy {
            CellPolicy::Binary => None,
            CellPolicy::Unit => match other.parse::<f64>() {
                Ok(v) if (0.0..=1.0).contains(&v) => Some(Some(v)),
                _ => None,
            },
            CellPolicy::Numeric => other.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropReport {
    pub feature_threshold: f64,
    pub language_threshold: f64,
    pub input_missing_fraction: f64,
    pub residual_missing_fraction: f64,
    pub dropped_features: Vec<String>,
    pub dropped_languages: Vec<String>,
}

/// Drops features, then languages, whose missing fraction exceeds the thresholds.
///
/// Features are judged over all input languages; languages over the retained
/// features only.
pub fn crop_matrix(
    m: &TypologyMatrix,
    feature_threshold: f64,
    language_threshold: f64,
) -> Result<(TypologyMatrix, CropReport)> {
    if m.n_languages() == 0 {
        return Err(Error::InvalidInput("cannot crop a matrix with no languages".into()));
    }
    if m.n_features() == 0 {
        return Err(Error::InvalidInput("cannot crop a matrix with no features".into()));
    }
    let n_lang = m.n_languages() as f64;
    let (kept_features, dropped_features): (Vec<usize>, Vec<usize>) = (0..m.n_features())
        .partition(|&f| m.feature_missing_count(f) as f64 / n_lang <= feature_threshold);
    if kept_features.is_empty() {
        return Err(Error::CropEmptied("features"));
    }

    let all_languages: Vec<usize> = (0..m.n_languages()).collect();
    let feature_cropped = m.select(&all_languages, &kept_features);
    let n_feat = kept_features.len() as f64;
    let (kept_languages, dropped_languages): (Vec<usize>, Vec<usize>) = all_languages
        .iter()
        .partition(|&&l| feature_cropped.language_missing_count(l) as f64 / n_feat <= language_threshold);
    if kept_languages.is_empty() {
        return Err(Error::CropEmptied("languages"));
    }

    let all_kept: Vec<usize> = (0..kept_features.len()).collect();
    let cropped = feature_cropped.select(&kept_languages, &all_kept);
    let report = CropReport {
        feature_threshold,
        language_threshold,
        input_missing_fraction: m.missing_fraction(),
        residual_missing_fraction: cropped.missing_fraction(),
        dropped_features: dropped_features.iter().map(|&f| m.feature_ids[f].clone()).collect(),
        dropped_languages: dropped_languages.iter().map(|&l| m.language_codes[l].clone()).collect(),
    };
    Ok((cropped, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_csv_with_missing() {
        let text = "lang,F1,F2,F3,F4\naaa,1,0,?,1\nbbb,0,0,1,1\nccc,1,1,1,0\n";
        let m = load_matrix(text.as_bytes()).unwrap();
        assert_eq!(m.n_languages(), 3);
        assert_eq!(m.n_features(), 4);
        assert_eq!(m.missing_count(), 1);
        assert_eq!(m.get(0, 2), None);
        assert_eq!(m.get(2, 1), Some(1.0));
    }

    #[test]
    fn numeric_policy_accepts_multistate() {
        let text = "lang,A,B\nx,3,?\ny,0.5,1\n";
        assert!(load_matrix(text.as_bytes()).is_err());
        let m = load_matrix_with(text.as_bytes(), CellPolicy::Numeric).unwrap();
        assert_eq!(m.get(0, 0), Some(3.0));
        assert!(load_matrix_with("lang,A\nx,inf\n".as_bytes(), CellPolicy::Numeric).is_err());
    }

    #[test]
    fn loads_tsv_and_empty_cells() {
        let text = "lang\tA\tB\nx\t\t1\n";
        let m = load_matrix(text.as_bytes()).unwrap();
        assert_eq!(m.get(0, 0), None);
        assert_eq!(m.get(0, 1), Some(1.0));
    }

    #[test]
    fn header_only_is_empty_matrix() {
        let m = load_matrix("lang,A,B\n".as_bytes()).unwrap();
        assert_eq!(m.n_languages(), 0);
        assert!(crop_matrix(&m, 0.25, 0.25).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let err = load_matrix("lang,A\nx,2\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("non-binary cell"), "{err}");
        assert!(matches!(
            load_matrix("lang,A,B\nx,1\n".as_bytes()),
            Err(Error::RaggedRow { .. })
        ));
        assert!(matches!(
            load_matrix("lang,A\nx,1\nx,0\n".as_bytes()),
            Err(Error::DuplicateLanguage(_))
        ));
        let unit = load_matrix_with("lang,A\nx,0.7\n".as_bytes(), CellPolicy::Unit).unwrap();
        assert_eq!(unit.get(0, 0), Some(0.7));
    }

    fn matrix(rows: &[&[Option<f64>]]) -> TypologyMatrix {
        let nf = rows[0].len();
        TypologyMatrix::new(
            (0..nf).map(|f| format!("F{f}")).collect(),
            (0..rows.len()).map(|l| format!("L{l}")).collect(),
            rows.iter().flat_map(|r| r.iter().copied()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn crop_drops_feature_above_threshold() {
        // F0 missing in 3/10 languages (30%): dropped. F1 missing in 2/10 (20%): kept.
        // L5 and L6 then miss 1/4 retained features, exactly at the threshold.
        let mut rows = vec![vec![Some(1.0), Some(0.0), Some(1.0), Some(1.0), Some(0.0)]; 10];
        for row in rows.iter_mut().take(3) {
            row[0] = None;
        }
        rows[5][1] = None;
        rows[6][1] = None;
        let refs: Vec<&[Option<f64>]> = rows.iter().map(|r| r.as_slice()).collect();
        let (cropped, report) = crop_matrix(&matrix(&refs), 0.25, 0.25).unwrap();
        assert_eq!(report.dropped_features, vec!["F0"]);
        assert!(report.dropped_languages.is_empty());
        assert_eq!(cropped.feature_ids(), &["F1", "F2", "F3", "F4"]);
        assert!((report.residual_missing_fraction - 2.0 / 40.0).abs() < 1e-15);
    }

    #[test]
    fn crop_then_languages_over_retained_features() {
        // L0 misses F0 and F1. F0 is 1/5 = 20% missing (kept); L0 then misses
        // 2/4 = 50% of retained features and is dropped.
        let rows: Vec<Vec<Option<f64>>> = vec![
            vec![None, None, Some(1.0), Some(1.0)],
            vec![Some(1.0); 4],
            vec![Some(0.0); 4],
            vec![Some(1.0); 4],
            vec![Some(0.0); 4],
        ];
        let refs: Vec<&[Option<f64>]> = rows.iter().map(|r| r.as_slice()).collect();
        let (cropped, report) = crop_matrix(&matrix(&refs), 0.25, 0.25).unwrap();
        assert!(report.dropped_features.is_empty());
        assert_eq!(report.dropped_languages, vec!["L0"]);
        assert_eq!(cropped.missing_count(), 0);
    }

    #[test]
    fn exactly_threshold_is_kept() {
        // 1 of 4 languages missing = 25%: not strictly greater, kept.
        let rows: Vec<Vec<Option<f64>>> = vec![
            vec![None, Some(1.0), Some(1.0), Some(1.0)],
            vec![Some(1.0); 4],
            vec![Some(0.0); 4],
            vec![Some(1.0); 4],
        ];
        let refs: Vec<&[Option<f64>]> = rows.iter().map(|r| r.as_slice()).collect();
        let (cropped, _) = crop_matrix(&matrix(&refs), 0.25, 0.25).unwrap();
        assert_eq!(cropped.n_features(), 4);
        assert_eq!(cropped.n_languages(), 4);
    }

    #[test]
    fn fully_observed_is_unchanged() {
        let rows: Vec<Vec<Option<f64>>> = vec![vec![Some(1.0), Some(0.0)], vec![Some(0.0), Some(0.0)]];
        let refs: Vec<&[Option<f64>]> = rows.iter().map(|r| r.as_slice()).collect();
        let m = matrix(&refs);
        let (cropped, report) = crop_matrix(&m, 0.25, 0.25).unwrap();
        assert_eq!(cropped, m);
        assert_eq!(report.residual_missing_fraction, 0.0);
    }

    #[test]
    fn crop_everything_is_error() {
        let rows: Vec<Vec<Option<f64>>> = vec![vec![None, None], vec![None, Some(1.0)]];
        let refs: Vec<&[Option<f64>]> = rows.iter().map(|r| r.as_slice()).collect();
        assert!(matches!(crop_matrix(&matrix(&refs), 0.25, 0.25), Err(Error::CropEmptied("features"))));
    }
}
