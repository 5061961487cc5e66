//! File-based pipeline: every stage reads the previous stage's artifacts
//! from the output directory and writes its own.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::compat::{
    canonical_pair, encode_image, explain_pair, mine_top, top_budget, train_top, BaseEncoding,
    CompatModel, EncodingSet, Explanation, PairEncoding, PairScore, Scorer, TopRules,
};
use crate::config::{BackgroundScope, PipelineConfig};
use crate::corpus::{
    load_catalog, load_classes, load_pairs, pairs_to_text, read_to_string, split_dataset, Catalog,
    ClassSet, CompatPair, DatasetSplit,
};
use crate::elements::{
    fit_background_with, mine_base_patterns, train_base_bank, BaseBank, BasePatterns,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, generate_benchmark, roc_points, roc_to_text, Benchmark, EvalReport};
use crate::exec::Exec;
use crate::features::{load_features, save_features, RegionFeature};

pub fn patterns_file(class: &str) -> String {
    format!("patterns-{class}.txt")
}

pub fn bank_file(class: &str) -> String {
    format!("base-{class}.bank")
}

pub fn encodings_file(class: &str) -> String {
    format!("encodings-{class}.txt")
}

pub fn rules_file(a: &str, b: &str) -> String {
    format!("top-rules-{a}--{b}.txt")
}

pub fn model_file(a: &str, b: &str) -> String {
    format!("compat-{a}--{b}.model")
}

/// Labeled pair encodings of one class pair, its pair count, and the
/// total training pair count.
type PairVolume = (Vec<(PairEncoding, u8)>, usize, usize);

pub const REPORT_FILE: &str = "eval-report.txt";
pub const ROC_FILE: &str = "roc.txt";

/// A configured pipeline rooted at the config file's directory.
pub struct Workspace {
    pub config: PipelineConfig,
    /// Base for relative data paths.
    pub root: PathBuf,
    /// Where artifacts are written.
    pub out: PathBuf,
    pub exec: Exec,
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Like `read_to_string`, but a missing file is reported as a missing
/// upstream artifact.
fn read_artifact(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingModel(path.to_path_buf()));
    }
    read_to_string(path)
}

impl Workspace {
    pub fn new(config: PipelineConfig, root: PathBuf, out: PathBuf) -> Result<Self> {
        config.validate()?;
        let exec = if config.workers == 1 {
            Exec::sequential()
        } else {
            Exec::parallel(config.workers)?
        };
        Ok(Workspace {
            config,
            root,
            out,
            exec,
        })
    }

    /// Loads `config_path`; artifacts go to `out`, or next to the config.
    pub fn open(config_path: &Path, out: Option<PathBuf>) -> Result<Self> {
        let config = PipelineConfig::load(config_path)?;
        let root = config_path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        let out = out.unwrap_or_else(|| root.clone());
        Workspace::new(config, root, out)
    }

    fn data(&self, p: &Path) -> PathBuf {
        self.root.join(p)
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn classes(&self) -> Result<ClassSet> {
        load_classes(&self.data(&self.config.data.classes))
    }

    pub fn catalog(&self) -> Result<Catalog> {
        load_catalog(&self.data(&self.config.data.catalog), &self.classes()?)
    }

    pub fn split(&self, catalog: &Catalog) -> Result<DatasetSplit> {
        let d = &self.config.data;
        match (&d.train_pairs, &d.test_pairs, &d.pairs) {
            (Some(train), Some(test), _) => Ok(DatasetSplit {
                train_pairs: load_pairs(&self.data(train), catalog)?,
                test_pairs: load_pairs(&self.data(test), catalog)?,
                seed: self.config.seed,
            }),
            (_, _, Some(all)) => split_dataset(
                &load_pairs(&self.data(all), catalog)?,
                d.test_fraction.unwrap_or(0.2),
                self.config.seed,
            ),
            _ => Err(Error::Config("no pair files configured".into())),
        }
    }

    fn class_of<'a>(&self, catalog: &'a Catalog, item: &str) -> Result<&'a str> {
        catalog
            .get(item)
            .map(|c| c.class_label.as_str())
            .ok_or_else(|| Error::UnknownItem(item.to_string()))
    }

    fn check_class(&self, class: &str) -> Result<()> {
        if self.classes()?.contains(class) {
            Ok(())
        } else {
            Err(Error::UnknownClass(class.to_string()))
        }
    }

    pub fn load_item(&self, catalog: &Catalog, item: &str) -> Result<Vec<RegionFeature>> {
        let it = catalog
            .get(item)
            .ok_or_else(|| Error::UnknownItem(item.to_string()))?;
        load_features(&self.data(&it.feature_source), self.config.dim)
    }

    /// Regions of every item of `class`, in catalog order.
    pub fn class_regions(
        &self,
        catalog: &Catalog,
        class: &str,
    ) -> Result<Vec<(String, Vec<RegionFeature>)>> {
        let items: Vec<_> = catalog.of_class(class).collect();
        if items.is_empty() {
            return Err(Error::Empty("class has no catalog items"));
        }
        self.exec.try_map(&items, |it| {
            let f = load_features(&self.data(&it.feature_source), self.config.dim)?;
            Ok((it.item_id.clone(), f))
        })
    }

    pub fn mine_base(&self, class: &str) -> Result<PathBuf> {
        self.check_class(class)?;
        let catalog = self.catalog()?;
        let regions = self.class_regions(&catalog, class)?;
        let mut patterns =
            mine_base_patterns(class, &regions, &self.config.base_params(), &self.exec)?;
        patterns.config = self.config.echo();
        let path = self.artifact(&patterns_file(class));
        write(&path, patterns.to_text())?;
        log::info!(
            "{class}: {} base patterns -> {}",
            patterns.patterns.len(),
            path.display()
        );
        Ok(path)
    }

    pub fn train_base(&self, class: &str) -> Result<PathBuf> {
        self.check_class(class)?;
        let catalog = self.catalog()?;
        let ppath = self.artifact(&patterns_file(class));
        let patterns =
            BasePatterns::from_text(&read_artifact(&ppath)?, &ppath.display().to_string())?;
        if patterns.class_label != class {
            return Err(Error::ClassMismatch(
                patterns.class_label,
                class.to_string(),
            ));
        }
        let regions = self.class_regions(&catalog, class)?;
        let corpus_bg = match self.config.base.background {
            BackgroundScope::Class => None,
            BackgroundScope::Corpus => {
                let mut rows: Vec<Vec<f32>> = Vec::new();
                for c in self.classes()?.iter() {
                    let all = if c == class {
                        regions.clone()
                    } else {
                        self.class_regions(&catalog, c)?
                    };
                    rows.extend(
                        all.into_iter()
                            .flat_map(|(_, rs)| rs.into_iter().map(|r| r.activation)),
                    );
                }
                Some(fit_background_with(&rows, &self.exec)?)
            }
        };
        let mut bank = train_base_bank(
            &regions,
            &patterns,
            self.config.base.reg_scale,
            corpus_bg.as_ref(),
            &self.exec,
        )?;
        bank.config = self.config.echo();
        let path = self.artifact(&bank_file(class));
        write(&path, bank.to_text())?;
        log::info!(
            "{class}: {} base elements -> {}",
            bank.len(),
            path.display()
        );
        Ok(path)
    }

    pub fn load_bank(&self, class: &str) -> Result<BaseBank> {
        let path = self.artifact(&bank_file(class));
        BaseBank::from_text(&read_artifact(&path)?, &path.display().to_string())
    }

    fn compute_encodings(
        &self,
        catalog: &Catalog,
        class: &str,
        bank: &BaseBank,
    ) -> Result<EncodingSet> {
        let regions = self.class_regions(catalog, class)?;
        let items = self.exec.try_map(&regions, |(id, rs)| {
            Ok((id.clone(), encode_image(rs, bank.classifiers())?))
        })?;
        Ok(EncodingSet::new(class.to_string(), bank.len(), items))
    }

    /// Writes `encodings-<class>.txt` for one class, or all classes.
    pub fn encode(&self, class: Option<&str>) -> Result<Vec<PathBuf>> {
        let catalog = self.catalog()?;
        let classes: Vec<String> = match class {
            Some(c) => {
                self.check_class(c)?;
                vec![c.to_string()]
            }
            None => self.classes()?.iter().map(str::to_string).collect(),
        };
        let mut out = Vec::new();
        for c in classes {
            let bank = self.load_bank(&c)?;
            let set = self.compute_encodings(&catalog, &c, &bank)?;
            let path = self.artifact(&encodings_file(&c));
            write(&path, set.to_text())?;
            out.push(path);
        }
        Ok(out)
    }

    /// Stored encodings when they match the bank, otherwise fresh ones.
    pub fn encodings(
        &self,
        catalog: &Catalog,
        class: &str,
        bank: &BaseBank,
    ) -> Result<EncodingSet> {
        let path = self.artifact(&encodings_file(class));
        if path.exists() {
            let set = EncodingSet::from_text(&read_to_string(&path)?, &path.display().to_string())?;
            if set.class_label == class
                && set.n_elements == bank.len()
                && set.items.len() == catalog.of_class(class).count()
            {
                return Ok(set);
            }
            log::warn!("{} is stale, re-encoding", path.display());
        }
        self.compute_encodings(catalog, class, bank)
    }

    /// Training pairs of the class pair with the canonical-first item first.
    fn oriented_pairs(
        &self,
        catalog: &Catalog,
        pairs: &[CompatPair],
        (a, b): (&str, &str),
    ) -> Result<Vec<CompatPair>> {
        let mut out = Vec::new();
        for p in pairs {
            let ca = self.class_of(catalog, &p.item_a)?;
            let cb = self.class_of(catalog, &p.item_b)?;
            if (ca, cb) == (a, b) {
                out.push(p.clone());
            } else if (cb, ca) == (a, b) {
                out.push(CompatPair {
                    item_a: p.item_b.clone(),
                    item_b: p.item_a.clone(),
                    label: p.label,
                });
            }
        }
        Ok(out)
    }

    fn pair_encodings(
        &self,
        catalog: &Catalog,
        (a, b): (&str, &str),
        banks: (&BaseBank, &BaseBank),
    ) -> Result<PairVolume> {
        let split = self.split(catalog)?;
        let pairs = self.oriented_pairs(catalog, &split.train_pairs, (a, b))?;
        if pairs.is_empty() {
            return Err(Error::NoModel(a.to_string(), b.to_string()));
        }
        let ea = self.encodings(catalog, a, banks.0)?;
        let eb = if a == b {
            ea.clone()
        } else {
            self.encodings(catalog, b, banks.1)?
        };
        let get = |set: &EncodingSet, id: &str| -> Result<BaseEncoding> {
            set.get(id)
                .cloned()
                .ok_or_else(|| Error::UnknownItem(id.to_string()))
        };
        let encoded = pairs
            .iter()
            .map(|p| {
                let pe = PairEncoding::new(a, &get(&ea, &p.item_a)?, b, &get(&eb, &p.item_b)?);
                Ok((pe, p.label))
            })
            .collect::<Result<Vec<_>>>()?;
        let volume = pairs.len();
        let total = split.train_pairs.len();
        Ok((encoded, volume, total))
    }

    fn canonical(&self, a: &str, b: &str) -> Result<(String, String)> {
        self.check_class(a)?;
        self.check_class(b)?;
        let ((x, y), _) = canonical_pair(a, b);
        Ok((x.to_string(), y.to_string()))
    }

    pub fn mine_top(&self, a: &str, b: &str) -> Result<PathBuf> {
        let (a, b) = self.canonical(a, b)?;
        let catalog = self.catalog()?;
        let bank_a = self.load_bank(&a)?;
        let bank_b = self.load_bank(&b)?;
        let (pairs, volume, total) = self.pair_encodings(&catalog, (&a, &b), (&bank_a, &bank_b))?;
        let params = self.config.top_params();
        let cap = self
            .config
            .top
            .cap_per_pair
            .unwrap_or_else(|| top_budget(params.cap, volume, total));
        let sizes = (bank_a.len(), bank_b.len());
        let db = crate::compat::build_pair_matrix(&pairs, params.k, sizes)?;
        let rules = mine_top(&db, &params.mining, sizes, cap, &self.exec)?;
        let compatible_count = pairs.iter().filter(|p| p.1 == 1).count() as u64;
        log::info!("{a}/{b}: {} top-level rules (cap {cap})", rules.len());
        let tr = TopRules {
            class_a: a.clone(),
            class_b: b.clone(),
            n_a: sizes.0,
            n_b: sizes.1,
            k: params.k,
            transactions: db.len() as u64,
            compatible_count,
            rules,
            config: self.config.echo(),
        };
        let path = self.artifact(&rules_file(&a, &b));
        write(&path, tr.to_text())?;
        Ok(path)
    }

    pub fn train_top(&self, a: &str, b: &str) -> Result<PathBuf> {
        let (a, b) = self.canonical(a, b)?;
        let catalog = self.catalog()?;
        let rpath = self.artifact(&rules_file(&a, &b));
        let rules = TopRules::from_text(&read_artifact(&rpath)?, &rpath.display().to_string())?;
        let bank_a = self.load_bank(&a)?;
        let bank_b = self.load_bank(&b)?;
        if (rules.n_a, rules.n_b) != (bank_a.len(), bank_b.len()) {
            return Err(Error::Config(format!(
                "{} was mined against banks of size {}/{}; rerun mine-top",
                rpath.display(),
                rules.n_a,
                rules.n_b
            )));
        }
        let (pairs, ..) = self.pair_encodings(&catalog, (&a, &b), (&bank_a, &bank_b))?;
        let params = self.config.top_params();
        let top_elements = train_top(&rules.rules, &pairs, rules.k, params.reg_scale, &self.exec)?;
        if top_elements.is_empty() {
            return Err(Error::NoTopElements(a, b));
        }
        let model = CompatModel {
            class_a: a.clone(),
            class_b: b.clone(),
            n_a: rules.n_a,
            n_b: rules.n_b,
            k: rules.k,
            min_support: params.mining.min_support,
            min_confidence: params.mining.min_confidence,
            bank_a: bank_file(&a),
            bank_b: bank_file(&b),
            top_elements,
            config: self.config.echo(),
            background: None,
        };
        let path = self.artifact(&model_file(&a, &b));
        write(&path, model.to_text())?;
        log::info!(
            "{a}/{b}: {} top-level elements -> {}",
            model.top_elements.len(),
            path.display()
        );
        Ok(path)
    }

    pub fn load_model(&self, a: &str, b: &str) -> Result<CompatModel> {
        let ((a, b), _) = canonical_pair(a, b);
        let path = self.artifact(&model_file(a, b));
        CompatModel::from_text(&read_artifact(&path)?, &path.display().to_string())
    }

    /// Scorer holding the model for one class pair and both banks.
    pub fn scorer_for(&self, a: &str, b: &str) -> Result<Scorer> {
        let model = self.load_model(a, b)?;
        let mut s = Scorer::new();
        for (class, file) in [
            (&model.class_a, &model.bank_a),
            (&model.class_b, &model.bank_b),
        ] {
            let path = self.artifact(file);
            let bank = BaseBank::from_text(&read_artifact(&path)?, &path.display().to_string())?;
            if &bank.class_label != class {
                return Err(Error::ClassMismatch(bank.class_label, class.clone()));
            }
            s.add_bank(bank);
        }
        s.add_model(model);
        Ok(s)
    }

    pub fn score(&self, item_a: &str, item_b: &str) -> Result<(PairScore, (String, String))> {
        let catalog = self.catalog()?;
        let ca = self.class_of(&catalog, item_a)?;
        let cb = self.class_of(&catalog, item_b)?;
        let scorer = self.scorer_for(ca, cb)?;
        let ra = self.load_item(&catalog, item_a)?;
        let rb = self.load_item(&catalog, item_b)?;
        let s = scorer.score(ca, &ra, cb, &rb)?;
        let ((x, y), _) = canonical_pair(ca, cb);
        Ok((s, (x.to_string(), y.to_string())))
    }

    pub fn explain(&self, item_a: &str, item_b: &str, top_n: usize) -> Result<Explanation> {
        let catalog = self.catalog()?;
        let ca = self.class_of(&catalog, item_a)?;
        let cb = self.class_of(&catalog, item_b)?;
        let (ra, rb) = (
            self.load_item(&catalog, item_a)?,
            self.load_item(&catalog, item_b)?,
        );
        let scorer = self.scorer_for(ca, cb)?;
        let (model, swapped) = scorer.model(ca, cb)?;
        let (ra, rb) = if swapped { (rb, ra) } else { (ra, rb) };
        let s = scorer.score(&model.class_a, &ra, &model.class_b, &rb)?;
        explain_pair(&s, model, &ra, &rb, top_n)
    }

    /// Items of `class` ranked as partners for `item`.
    pub fn recommend(&self, item: &str, class: &str, top_n: usize) -> Result<Vec<(String, f64)>> {
        self.check_class(class)?;
        let catalog = self.catalog()?;
        let qc = self.class_of(&catalog, item)?.to_string();
        let scorer = self.scorer_for(&qc, class)?;
        let query = scorer.encode(&qc, &self.load_item(&catalog, item)?)?;
        let cands = self.encodings(&catalog, class, scorer.bank(class)?)?;
        let cands: Vec<(String, BaseEncoding)> = cands
            .items
            .into_iter()
            .filter(|(id, _)| id != item)
            .collect();
        scorer.recommend(&qc, &query, class, &cands, top_n, &self.exec)
    }

    /// Scores the test split; writes the report and ROC points.
    pub fn eval(&self) -> Result<EvalReport> {
        let catalog = self.catalog()?;
        let split = self.split(&catalog)?;
        let mut scorer = Scorer::new();
        let mut needed = BTreeSet::new();
        for p in &split.test_pairs {
            let ca = self.class_of(&catalog, &p.item_a)?;
            let cb = self.class_of(&catalog, &p.item_b)?;
            let ((x, y), _) = canonical_pair(ca, cb);
            needed.insert((x.to_string(), y.to_string()));
        }
        let mut banks: BTreeMap<String, BaseBank> = BTreeMap::new();
        for (a, b) in &needed {
            match self.load_model(a, b) {
                Ok(m) => {
                    for c in [a, b] {
                        if !banks.contains_key(c) {
                            banks.insert(c.clone(), self.load_bank(c)?);
                        }
                    }
                    scorer.add_model(m);
                }
                Err(Error::MissingModel(p)) => {
                    log::warn!("no model {}; pairs skipped", p.display())
                }
                Err(e) => return Err(e),
            }
        }
        let mut encodings = BTreeMap::new();
        for (c, bank) in &banks {
            encodings.insert(c.clone(), self.encodings(&catalog, c, bank)?);
        }
        for bank in banks.into_values() {
            scorer.add_bank(bank);
        }
        let ev = evaluate(&split.test_pairs, &catalog, &encodings, &scorer, &self.exec)?;
        write(&self.artifact(REPORT_FILE), ev.report.to_text())?;
        write(
            &self.artifact(ROC_FILE),
            roc_to_text(&roc_points(&ev.scored)?),
        )?;
        Ok(ev.report)
    }

    /// Every stage in order for all classes and all trained class pairs.
    /// Class pairs whose training yields no top-level elements are skipped.
    pub fn run_all(&self) -> Result<EvalReport> {
        let classes: Vec<String> = self.classes()?.iter().map(str::to_string).collect();
        for c in &classes {
            self.mine_base(c)?;
            self.train_base(c)?;
        }
        self.encode(None)?;
        let catalog = self.catalog()?;
        let split = self.split(&catalog)?;
        let mut pairs = BTreeSet::new();
        for p in &split.train_pairs {
            let ca = self.class_of(&catalog, &p.item_a)?;
            let cb = self.class_of(&catalog, &p.item_b)?;
            let ((x, y), _) = canonical_pair(ca, cb);
            pairs.insert((x.to_string(), y.to_string()));
        }
        for (a, b) in &pairs {
            self.mine_top(a, b)?;
            match self.train_top(a, b) {
                Err(Error::NoTopElements(..)) => {
                    log::warn!("{a}/{b}: no top-level elements, pair skipped")
                }
                r => {
                    r?;
                }
            }
        }
        self.eval()
    }

    /// Generates the synthetic corpus and a matching config into `out`.
    pub fn synth(&self) -> Result<Benchmark> {
        let s = self
            .config
            .synth
            .as_ref()
            .ok_or_else(|| Error::Config("missing [synth] section".into()))?;
        let spec = self.config.synthetic_spec(s)?;
        let bench = generate_benchmark(
            &spec,
            s.images_per_class,
            s.train_pairs,
            s.test_pairs,
            self.config.seed,
        )?;
        let mut cfg = self.config.clone();
        cfg.data = Default::default();
        write(
            &self.artifact(&cfg.data.classes.display().to_string()),
            bench.classes.to_text(),
        )?;
        write(
            &self.artifact(&cfg.data.catalog.display().to_string()),
            bench.catalog.to_text(),
        )?;
        let dir = self.artifact("features");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let outputs: Vec<_> = bench
            .catalog
            .items()
            .iter()
            .zip(&bench.features)
            .map(|(it, (_, f))| (self.out.join(&it.feature_source), f))
            .collect();
        self.exec.try_map(&outputs, |(path, f)| {
            save_features(path, f, cfg.dim, s.feature_encoding)
        })?;
        let train = cfg.data.train_pairs.as_ref().expect("default paths");
        let test = cfg.data.test_pairs.as_ref().expect("default paths");
        write(
            &self.out.join(train),
            pairs_to_text(&bench.split.train_pairs),
        )?;
        write(&self.out.join(test), pairs_to_text(&bench.split.test_pairs))?;
        write(&self.artifact("config.toml"), cfg.to_toml())?;
        Ok(bench)
    }
}
