//! Pipeline configuration file (TOML). Paths are relative to the file's
//! directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compat::TopParams;
use crate::elements::BaseParams;
use crate::error::{Error, Result};
use crate::features::{CompatTable, FeatureEncoding, Sampling, SyntheticSpec};
use crate::fraction::Fraction;
use crate::miner::MiningConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub classes: PathBuf,
    pub catalog: PathBuf,
    /// Either explicit train/test files or one `pairs` file split by
    /// `test_fraction`.
    pub train_pairs: Option<PathBuf>,
    pub test_pairs: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub test_fraction: Option<f64>,
}

impl Default for DataPaths {
    fn default() -> Self {
        DataPaths {
            classes: "classes.txt".into(),
            catalog: "catalog.tsv".into(),
            train_pairs: Some("train_pairs.csv".into()),
            test_pairs: Some("test_pairs.csv".into()),
            pairs: None,
            test_fraction: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackgroundScope {
    /// Each class's own regions.
    #[default]
    Class,
    /// Regions of every class in the catalog.
    Corpus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaseSection {
    pub k: usize,
    pub min_support: Fraction,
    pub min_len: usize,
    pub max_len: usize,
    pub cap: usize,
    pub reg_scale: f64,
    pub background: BackgroundScope,
}

impl Default for BaseSection {
    fn default() -> Self {
        let p = BaseParams::default();
        BaseSection {
            k: p.k,
            min_support: p.mining.min_support,
            min_len: p.mining.min_len,
            max_len: p.mining.max_len,
            cap: p.cap,
            reg_scale: p.reg_scale,
            background: BackgroundScope::Class,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopSection {
    pub k: usize,
    pub min_support: Fraction,
    pub min_confidence: Fraction,
    pub min_len: usize,
    pub max_len: usize,
    /// Total over all class pairs, shared out by training volume.
    pub cap: usize,
    /// Per-pair cap overriding the shared budget.
    pub cap_per_pair: Option<usize>,
    pub reg_scale: f64,
}

impl Default for TopSection {
    fn default() -> Self {
        let p = TopParams::default();
        TopSection {
            k: p.k,
            min_support: p.mining.min_support,
            min_confidence: p.mining.min_confidence,
            min_len: p.mining.min_len,
            max_len: p.mining.max_len,
            cap: p.cap,
            cap_per_pair: None,
            reg_scale: p.reg_scale,
        }
    }
}

/// Parameters of the `synth` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub classes: Vec<String>,
    pub styles_per_class: usize,
    pub signature_size: usize,
    pub boost_range: (f32, f32),
    pub noise_level: f32,
    pub image_size: (u32, u32),
    pub images_per_class: usize,
    pub train_pairs: usize,
    pub test_pairs: usize,
    /// `["class:style", "class:style"]` entries; identity when absent.
    pub compat: Option<Vec<(String, String)>>,
    pub feature_encoding: FeatureEncoding,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            classes: vec!["bottoms".into(), "tops".into()],
            styles_per_class: 3,
            signature_size: 4,
            boost_range: (0.5, 1.0),
            noise_level: 0.1,
            image_size: (256, 256),
            images_per_class: 300,
            train_pairs: 2000,
            test_pairs: 500,
            compat: None,
            feature_encoding: FeatureEncoding::Binary,
        }
    }
}

fn parse_style_ref(s: &str) -> Result<(String, usize)> {
    let (c, st) = s
        .rsplit_once(':')
        .ok_or_else(|| Error::Config(format!("compat entry {s:?} is not class:style")))?;
    let st = st
        .parse()
        .map_err(|_| Error::Config(format!("bad style index in {s:?}")))?;
    Ok((c.to_string(), st))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub dim: usize,
    /// Wall-clock only; never echoed into artifacts. 0 uses every core.
    #[serde(skip_serializing)]
    pub workers: usize,
    pub data: DataPaths,
    pub sampling: Sampling,
    pub base: BaseSection,
    pub top: TopSection,
    pub synth: Option<SynthSection>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            dim: 4096,
            workers: 0,
            data: DataPaths::default(),
            sampling: Sampling::default(),
            base: BaseSection::default(),
            top: TopSection::default(),
            synth: None,
        }
    }
}

impl PipelineConfig {
    /// Settings for the planted synthetic benchmark: 64-dim features, three
    /// styles of four signature indices, and `k = q + 1` at both levels so a
    /// style's whole signature lands in one transaction.
    pub fn benchmark(seed: u64) -> Self {
        PipelineConfig {
            seed,
            dim: 64,
            base: BaseSection {
                k: 5,
                ..BaseSection::default()
            },
            top: TopSection {
                k: 5,
                ..TopSection::default()
            },
            synth: Some(SynthSection::default()),
            ..PipelineConfig::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let c: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&crate::corpus::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Single-line provenance string stored in every artifact.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be positive".into()));
        }
        if self.base.k == 0 || self.base.k > self.dim {
            return Err(Error::KTooLarge {
                k: self.base.k,
                dim: self.dim,
            });
        }
        if self.top.k == 0 {
            return Err(Error::Config("top k must be positive".into()));
        }
        for r in [self.base.reg_scale, self.top.reg_scale] {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::Config(format!("reg_scale {r} invalid")));
            }
        }
        self.base_params().mining.validate()?;
        self.top_mining().validate()?;
        let d = &self.data;
        match (&d.train_pairs, &d.test_pairs, &d.pairs) {
            (Some(_), Some(_), None) => {}
            (None, None, Some(_)) => {
                let f = d.test_fraction.unwrap_or(0.2);
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::Config(format!("test_fraction {f} outside (0, 1)")));
                }
            }
            _ => {
                return Err(Error::Config(
                    "give either train_pairs and test_pairs, or pairs".into(),
                ))
            }
        }
        if let Some(s) = &self.synth {
            self.synthetic_spec(s)?.validate()?;
        }
        Ok(())
    }

    pub fn base_params(&self) -> BaseParams {
        let b = &self.base;
        BaseParams {
            k: b.k,
            mining: MiningConfig {
                min_support: b.min_support,
                min_len: b.min_len,
                max_len: b.max_len,
                top_k_binarize: b.k,
                ..MiningConfig::default()
            },
            cap: b.cap,
            reg_scale: b.reg_scale,
        }
    }

    fn top_mining(&self) -> MiningConfig {
        let t = &self.top;
        MiningConfig {
            min_support: t.min_support,
            min_confidence: t.min_confidence,
            min_len: t.min_len,
            max_len: t.max_len,
            top_k_binarize: t.k,
            consequent_items: None,
            cross_group_boundary: None,
        }
    }

    pub fn top_params(&self) -> TopParams {
        TopParams {
            k: self.top.k,
            mining: self.top_mining(),
            cap: self.top.cap,
            reg_scale: self.top.reg_scale,
        }
    }

    pub fn synthetic_spec(&self, s: &SynthSection) -> Result<SyntheticSpec> {
        let compat_table = match &s.compat {
            None => CompatTable::identity(&s.classes, s.styles_per_class),
            Some(entries) => {
                let mut t = CompatTable::default();
                for (a, b) in entries {
                    t.insert(parse_style_ref(a)?, parse_style_ref(b)?);
                }
                t
            }
        };
        Ok(SyntheticSpec {
            dim: self.dim,
            classes: s.classes.clone(),
            styles_per_class: s.styles_per_class,
            signature_size: s.signature_size,
            boost_range: s.boost_range,
            noise_level: s.noise_level,
            compat_table,
            seed: self.seed,
            image_size: s.image_size,
            sampling: self.sampling,
        })
    }
}
