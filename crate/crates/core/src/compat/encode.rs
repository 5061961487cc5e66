use std::fmt::Write as _;

use crate::elements::LdaClassifier;
use crate::error::{Error, Result};
use crate::features::RegionFeature;
use crate::miner::{binarize_topk, ItemId, TransactionDb};
use crate::textfmt::{fmt_f64, Lines};

/// Per-element maximum response over an image's regions.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseEncoding {
    pub responses: Vec<f64>,
    pub argmax_regions: Vec<u32>,
}

impl BaseEncoding {
    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

/// Max-pools every classifier over the regions; ties go to the lowest
/// region index.
pub fn encode_image<'a, I>(regions: &[RegionFeature], bank: I) -> Result<BaseEncoding>
where
    I: IntoIterator<Item = &'a LdaClassifier>,
{
    if regions.is_empty() {
        return Err(Error::Empty("region list"));
    }
    let mut responses = Vec::new();
    let mut argmax_regions = Vec::new();
    for c in bank {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0u32;
        for (i, r) in regions.iter().enumerate() {
            if r.dim() != c.dim() {
                return Err(Error::DimensionMismatch {
                    expected: c.dim(),
                    found: r.dim(),
                });
            }
            let s = c.score_unchecked(&r.activation);
            if s > best {
                best = s;
                arg = i as u32;
            }
        }
        responses.push(best);
        argmax_regions.push(arg);
    }
    Ok(BaseEncoding {
        responses,
        argmax_regions,
    })
}

/// Concatenated responses of an image pair, class `a` first.
#[derive(Clone, Debug, PartialEq)]
pub struct PairEncoding {
    pub encoding: Vec<f64>,
    pub class_pair: (String, String),
    pub n_a: usize,
}

impl PairEncoding {
    pub fn new(class_a: &str, a: &BaseEncoding, class_b: &str, b: &BaseEncoding) -> Self {
        let mut encoding = Vec::with_capacity(a.len() + b.len());
        encoding.extend_from_slice(&a.responses);
        encoding.extend_from_slice(&b.responses);
        PairEncoding {
            encoding,
            class_pair: (class_a.to_string(), class_b.to_string()),
            n_a: a.len(),
        }
    }

    pub fn side_a(&self) -> &[f64] {
        &self.encoding[..self.n_a]
    }

    pub fn side_b(&self) -> &[f64] {
        &self.encoding[self.n_a..]
    }
}

/// The two label bins appended after the `n_a + n_b` element items.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabelItems {
    pub compatible: ItemId,
    pub incompatible: ItemId,
}

impl LabelItems {
    pub fn for_sizes(n_a: usize, n_b: usize) -> Self {
        let base = (n_a + n_b) as ItemId;
        LabelItems {
            compatible: base,
            incompatible: base + 1,
        }
    }
}

/// One transaction per labeled pair: top-`k` of each side (b offset by
/// `n_a`) plus the label item.
pub fn build_pair_matrix(
    pairs: &[(PairEncoding, u8)],
    k: usize,
    (n_a, n_b): (usize, usize),
) -> Result<TransactionDb> {
    if k > n_a.min(n_b) {
        return Err(Error::KTooLarge {
            k,
            dim: n_a.min(n_b),
        });
    }
    let labels = LabelItems::for_sizes(n_a, n_b);
    let rows = pairs
        .iter()
        .map(|(p, label)| {
            if p.n_a != n_a || p.encoding.len() != n_a + n_b {
                return Err(Error::DimensionMismatch {
                    expected: n_a + n_b,
                    found: p.encoding.len(),
                });
            }
            let mut items = binarize_topk(p.side_a(), k)?;
            items.extend(
                binarize_topk(p.side_b(), k)?
                    .into_iter()
                    .map(|i| i + n_a as ItemId),
            );
            items.push(match label {
                1 => labels.compatible,
                0 => labels.incompatible,
                other => {
                    return Err(Error::Config(format!("label {other} is not 0 or 1")));
                }
            });
            Ok(items)
        })
        .collect::<Result<Vec<_>>>()?;
    TransactionDb::new(rows, n_a + n_b + 2)
}

/// Encodings of every image of one class over that class's bank.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodingSet {
    pub class_label: String,
    pub n_elements: usize,
    pub items: Vec<(String, BaseEncoding)>,
}

impl EncodingSet {
    pub fn get(&self, item: &str) -> Option<&BaseEncoding> {
        self.items
            .binary_search_by(|(id, _)| id.as_str().cmp(item))
            .ok()
            .map(|i| &self.items[i].1)
    }

    /// Items are kept sorted by id.
    pub fn new(
        class_label: String,
        n_elements: usize,
        mut items: Vec<(String, BaseEncoding)>,
    ) -> Self {
        items.sort_by(|a, b| a.0.cmp(&b.0));
        EncodingSet {
            class_label,
            n_elements,
            items,
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "format encodings/1");
        let _ = writeln!(out, "class {}", self.class_label);
        let _ = writeln!(out, "elements {}", self.n_elements);
        let _ = writeln!(out, "count {}", self.items.len());
        for (id, e) in &self.items {
            let _ = write!(out, "item {id}");
            for &r in &e.responses {
                let _ = write!(out, " {}", fmt_f64(r));
            }
            let _ = write!(out, "\nargmax");
            for a in &e.argmax_regions {
                let _ = write!(out, " {a}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let mut l = Lines::new(text, source);
        l.expect_format("encodings/1")?;
        let class_label = l.field("class")?.to_string();
        let n: usize = l.parsed("elements")?;
        let count: usize = l.parsed("count")?;
        let mut items = Vec::with_capacity(count);
        for _ in 0..count {
            let v = l.field("item")?;
            let (id, rest) = v.split_once(' ').unwrap_or((v, ""));
            let responses = l.parse_f64s(rest, n)?;
            let a = l.field("argmax")?;
            let argmax_regions: Vec<u32> = a
                .split_whitespace()
                .map(|x| x.parse().map_err(|_| l.err("bad region index")))
                .collect::<Result<_>>()?;
            if argmax_regions.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: argmax_regions.len(),
                });
            }
            items.push((
                id.to_string(),
                BaseEncoding {
                    responses,
                    argmax_regions,
                },
            ));
        }
        Ok(EncodingSet::new(class_label, n, items))
    }
}
