//! Per-pair feature vectors and their TSV representation.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::dataset_features::{block_from_stats, CorpusStats, DatasetFeatureOptions, DATASET_FEATURE_NAMES};
use crate::error::{Error, Result};
use crate::typology::{
    and_vector, cosine_distance, genetic_distance, geographic_distance, GeoPoint, Lineage, TypologyStore,
    TypologyVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntacticSource {
    Uriel,
    Grambank,
}

impl fmt::Display for SyntacticSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SyntacticSource::Uriel => "URIEL",
            SyntacticSource::Grambank => "Grambank",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// One cosine distance per typology block.
    Distance,
    /// Element-wise AND of the two languages' binary vectors.
    Full,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Representation::Distance => "distance",
            Representation::Full => "full",
        })
    }
}

/// Which features enter the ranker. Genetic and geographic are always present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub syntactic_source: SyntacticSource,
    pub representation: Representation,
    pub include_dataset: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            syntactic_source: SyntacticSource::Uriel,
            representation: Representation::Distance,
            include_dataset: true,
        }
    }
}

impl FeatureConfig {
    /// Setting letter: a = dataset + distance, b = distance only,
    /// c = dataset + full, d = full only.
    pub fn setting(&self) -> char {
        match (self.include_dataset, self.representation) {
            (true, Representation::Distance) => 'a',
            (false, Representation::Distance) => 'b',
            (true, Representation::Full) => 'c',
            (false, Representation::Full) => 'd',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFeatureVector {
    pub target_code: String,
    pub source_code: String,
    pub feature_names: Vec<String>,
    pub values: Vec<f64>,
}

/// Everything needed to featurize a (source, target) pair.
#[derive(Debug, Clone, Default)]
pub struct FeatureStores {
    pub lineages: BTreeMap<String, Lineage>,
    pub geography: BTreeMap<String, GeoPoint>,
    pub syntactic_uriel: Option<TypologyStore>,
    pub syntactic_grambank: Option<TypologyStore>,
    pub phonological: Option<TypologyStore>,
    pub inventory: Option<TypologyStore>,
    /// Capped source-language corpora.
    pub source_corpora: BTreeMap<String, CorpusStats>,
    /// Capped target-language corpora.
    pub target_corpora: BTreeMap<String, CorpusStats>,
    pub dataset_options: DatasetFeatureOptions,
}

fn missing(store: &str, language: &str) -> Error {
    Error::MissingLanguage { store: store.to_string(), language: language.to_string() }
}

impl FeatureStores {
    fn typology_blocks(&self, config: &FeatureConfig) -> Result<[(&'static str, &TypologyStore); 3]> {
        let (syn_name, syn) = match config.syntactic_source {
            SyntacticSource::Uriel => ("syntactic_uriel", &self.syntactic_uriel),
            SyntacticSource::Grambank => ("syntactic_grambank", &self.syntactic_grambank),
        };
        let not_loaded = |name: &str| Error::InvalidInput(format!("{name} store not loaded"));
        Ok([
            (syn_name, syn.as_ref().ok_or_else(|| not_loaded(syn_name))?),
            ("phonological", self.phonological.as_ref().ok_or_else(|| not_loaded("phonological"))?),
            ("inventory", self.inventory.as_ref().ok_or_else(|| not_loaded("inventory"))?),
        ])
    }

    /// Ordered feature names: genetic, geographic, typology block(s), dataset block.
    pub fn feature_names(&self, config: &FeatureConfig) -> Result<Vec<String>> {
        let mut names = vec!["genetic".to_string(), "geographic".to_string()];
        match config.representation {
            Representation::Distance => {
                names.extend(["syntactic", "phonological", "inventory"].map(String::from));
            }
            Representation::Full => {
                for (_, store) in self.typology_blocks(config)? {
                    names.extend(store.feature_ids.iter().cloned());
                }
            }
        }
        if config.include_dataset {
            names.extend(DATASET_FEATURE_NAMES.map(String::from));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::DuplicateFeature(n.clone()));
            }
        }
        Ok(names)
    }

    pub fn assemble(&self, source: &str, target: &str, config: &FeatureConfig) -> Result<PairFeatureVector> {
        let feature_names = self.feature_names(config)?;
        self.assemble_with_names(source, target, config, feature_names)
    }

    fn assemble_with_names(
        &self,
        source: &str,
        target: &str,
        config: &FeatureConfig,
        feature_names: Vec<String>,
    ) -> Result<PairFeatureVector> {
        let lineage = |code: &str| self.lineages.get(code).ok_or_else(|| missing("lineage", code));
        let geo = |code: &str| self.geography.get(code).ok_or_else(|| missing("geography", code));

        let mut values = Vec::with_capacity(feature_names.len());
        values.push(genetic_distance(lineage(source)?, lineage(target)?));
        values.push(geographic_distance(geo(source)?, geo(target)?));

        for (name, store) in self.typology_blocks(config)? {
            let target_vec = store.get(target).ok_or_else(|| missing(name, target))?;
            let source_vec = store.get(source).ok_or_else(|| missing(name, source))?;
            match config.representation {
                Representation::Distance => values.push(cosine_distance(target_vec, source_vec)?),
                Representation::Full => {
                    let v = and_vector(&binarized(target_vec, name), &binarized(source_vec, name))?;
                    values.extend(v.values);
                }
            }
        }

        if config.include_dataset {
            let s = self.source_corpora.get(source).ok_or_else(|| missing("source corpus", source))?;
            let t = self.target_corpora.get(target).ok_or_else(|| missing("target corpus", target))?;
            values.extend(block_from_stats(s, t, &self.dataset_options).values());
        }

        if values.len() != feature_names.len() {
            return Err(Error::Invariant(format!(
                "assembled {} values for {} feature names",
                values.len(),
                feature_names.len()
            )));
        }
        Ok(PairFeatureVector {
            target_code: target.to_string(),
            source_code: source.to_string(),
            feature_names,
            values,
        })
    }

    /// Feature rows for every target x source pair, ordered by target then source.
    pub fn assemble_all(
        &self,
        targets: &[String],
        sources: &[String],
        config: &FeatureConfig,
        include_self_pairs: bool,
    ) -> Result<PairFeatureTable> {
        let feature_names = self.feature_names(config)?;
        let mut targets = targets.to_vec();
        let mut sources = sources.to_vec();
        targets.sort();
        targets.dedup();
        sources.sort();
        sources.dedup();
        let mut rows = Vec::new();
        for t in &targets {
            for s in &sources {
                if s == t && !include_self_pairs {
                    continue;
                }
                rows.push(self.assemble_with_names(s, t, config, feature_names.clone())?);
            }
        }
        Ok(PairFeatureTable { feature_names, rows })
    }
}

fn binarized(v: &TypologyVector, block: &str) -> TypologyVector {
    if v.is_binary() {
        v.clone()
    } else {
        warn!("{block} vector for {} is fractional; thresholding at 0.5", v.language_code);
        v.thresholded()
    }
}

/// Pair features for many (target, source) rows sharing one feature list.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFeatureTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<PairFeatureVector>,
}

impl PairFeatureTable {
    /// TSV with header `target`, `source`, then feature names.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = String::from("target\tsource");
        for n in &self.feature_names {
            header.push('\t');
            header.push_str(n);
        }
        writeln!(out, "{header}")?;
        for row in &self.rows {
            let mut line = format!("{}\t{}", row.target_code, row.source_code);
            for v in &row.values {
                line.push('\t');
                line.push_str(&format!("{v}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: Read>(input: R) -> Result<PairFeatureTable> {
        let mut reader = csv::ReaderBuilder::new().delimiter(b'\t').has_headers(true).from_reader(input);
        let header = reader.headers()?.clone();
        if header.len() < 2 || &header[0] != "target" || &header[1] != "source" {
            return Err(Error::InvalidInput("pair-features header must start with target, source".into()));
        }
        let feature_names: Vec<String> = header.iter().skip(2).map(String::from).collect();
        let mut rows = Vec::new();
        let mut seen = HashSet::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let target = record[0].to_string();
            let source = record[1].to_string();
            if !seen.insert((target.clone(), source.clone())) {
                return Err(Error::InvalidInput(format!("duplicate pair row {source}/{target}")));
            }
            let values = record
                .iter()
                .skip(2)
                .map(|v| {
                    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Parse {
                        line: i + 2,
                        message: format!("bad feature value {v:?}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(PairFeatureVector {
                target_code: target,
                source_code: source,
                feature_names: feature_names.clone(),
                values,
            });
        }
        Ok(PairFeatureTable { feature_names, rows })
    }

    pub fn get(&self, target: &str, source: &str) -> Option<&PairFeatureVector> {
        self.rows.iter().find(|r| r.target_code == target && r.source_code == source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenizedCorpus;

    fn store(prefix: &str, len: usize, langs: &[(&str, u64)]) -> TypologyStore {
        let feature_ids: Vec<String> = (0..len).map(|i| format!("{prefix}{i:03}")).collect();
        let vectors = langs
            .iter()
            .map(|&(code, pattern)| {
                let values = (0..len).map(|i| ((pattern >> (i % 64)) & 1) as f64).collect();
                (code.to_string(), TypologyVector::new(code, values))
            })
            .collect();
        TypologyStore { feature_ids, vectors }
    }

    fn stats(code: &str, tokens: &[&str]) -> CorpusStats {
        let c = TokenizedCorpus::new(code, vec![tokens.iter().map(|t| t.to_string()).collect()], "").unwrap();
        CorpusStats::from_corpus(&c, false)
    }

    fn stores() -> FeatureStores {
        let langs = [("aaa", 0b1011u64), ("bbb", 0b0110)];
        let mut s = FeatureStores {
            syntactic_uriel: Some(store("S_", 104, &langs)),
            syntactic_grambank: Some(store("GB", 113, &langs)),
            phonological: Some(store("P_", 28, &langs)),
            inventory: Some(store("INV_", 158, &langs)),
            ..Default::default()
        };
        s.lineages.insert("aaa".into(), Lineage::parse("aaa", "F>G>A").unwrap());
        s.lineages.insert("bbb".into(), Lineage::parse("bbb", "F>G>B").unwrap());
        s.geography.insert("aaa".into(), GeoPoint::new("aaa", 0.0, 0.0).unwrap());
        s.geography.insert("bbb".into(), GeoPoint::new("bbb", 0.0, 90.0).unwrap());
        for (code, toks) in [("aaa", ["x", "y", "x"]), ("bbb", ["y", "z", "w"])] {
            s.source_corpora.insert(code.into(), stats(code, &toks));
            s.target_corpora.insert(code.into(), stats(code, &toks));
        }
        s
    }

    fn cfg(src: SyntacticSource, rep: Representation, ds: bool) -> FeatureConfig {
        FeatureConfig { syntactic_source: src, representation: rep, include_dataset: ds }
    }

    #[test]
    fn vector_lengths() {
        let s = stores();
        use Representation::*;
        use SyntacticSource::*;
        let len = |c| s.assemble("aaa", "bbb", &c).unwrap().values.len();
        assert_eq!(len(cfg(Uriel, Distance, true)), 9);
        assert_eq!(len(cfg(Uriel, Distance, false)), 5);
        assert_eq!(len(cfg(Grambank, Full, true)), 305);
        assert_eq!(len(cfg(Uriel, Full, true)), 296);
        assert_eq!(len(cfg(Grambank, Full, false)), 301);
        assert_eq!(len(cfg(Uriel, Full, false)), 292);
    }

    #[test]
    fn feature_order() {
        let s = stores();
        let v = s.assemble("aaa", "bbb", &FeatureConfig::default()).unwrap();
        assert_eq!(
            v.feature_names,
            vec![
                "genetic", "geographic", "syntactic", "phonological", "inventory", "word_overlap",
                "transfer_ttr", "task_ttr", "distance_ttr"
            ]
        );
        assert!((v.values[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((v.values[1] - 0.5).abs() < 1e-15);
        let full = s.assemble("aaa", "bbb", &cfg(SyntacticSource::Grambank, Representation::Full, false)).unwrap();
        assert_eq!(full.feature_names[2], "GB000");
        assert_eq!(full.feature_names.last().unwrap(), "INV_157");
    }

    #[test]
    fn identity_pair() {
        let s = stores();
        let d = s.assemble("aaa", "aaa", &FeatureConfig::default()).unwrap();
        assert_eq!(&d.values[..5], &[0.0; 5]);
        assert_eq!(d.values[5], 0.5);
        assert_eq!(d.values[8], 0.0);

        let f = s.assemble("aaa", "aaa", &cfg(SyntacticSource::Uriel, Representation::Full, false)).unwrap();
        let own = &s.syntactic_uriel.as_ref().unwrap().vectors["aaa"].values;
        assert_eq!(&f.values[2..106], own.as_slice());
    }

    #[test]
    fn missing_language_names_store() {
        let mut s = stores();
        s.geography.remove("bbb");
        let err = s.assemble("aaa", "bbb", &FeatureConfig::default()).unwrap_err();
        assert!(err.to_string().contains("geography"), "{err}");

        let mut s = stores();
        s.syntactic_grambank = None;
        let c = cfg(SyntacticSource::Grambank, Representation::Distance, true);
        assert!(s.assemble("aaa", "bbb", &c).unwrap_err().to_string().contains("syntactic_grambank"));
    }

    #[test]
    fn tsv_roundtrip() {
        let s = stores();
        let table = s
            .assemble_all(&["aaa".into(), "bbb".into()], &["aaa".into(), "bbb".into()], &FeatureConfig::default(), false)
            .unwrap();
        assert_eq!(table.rows.len(), 2);
        let mut buf = Vec::new();
        table.write_tsv(&mut buf).unwrap();
        let back = PairFeatureTable::read_tsv(buf.as_slice()).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn settings() {
        use Representation::*;
        assert_eq!(cfg(SyntacticSource::Uriel, Distance, true).setting(), 'a');
        assert_eq!(cfg(SyntacticSource::Uriel, Distance, false).setting(), 'b');
        assert_eq!(cfg(SyntacticSource::Uriel, Full, true).setting(), 'c');
        assert_eq!(cfg(SyntacticSource::Uriel, Full, false).setting(), 'd');
    }
}
