//! Planted-pattern feature generator used as a ground-truth oracle.
//!
//! Each (class, style) owns `signature_size` activation indices. Regions of
//! an image of that style carry a boost at those indices on top of uniform
//! noise, plus one distractor spike at a random non-signature index. The
//! distractor sits strictly between the noise ceiling and the boost floor
//! whenever `boost_range.0 > 2 * noise_level`.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{RegionFeature, Sampling};
use crate::error::{Error, Result};

pub type StyleRef = (String, usize);

/// Symmetric compatibility relation over (class, style) pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatTable(BTreeSet<(StyleRef, StyleRef)>);

impl CompatTable {
    /// Style `s` of every class is compatible with style `s` of every other class.
    pub fn identity(classes: &[String], styles: usize) -> Self {
        let mut t = CompatTable::default();
        for (i, a) in classes.iter().enumerate() {
            for b in &classes[i + 1..] {
                for s in 0..styles {
                    t.insert((a.clone(), s), (b.clone(), s));
                }
            }
        }
        t
    }

    pub fn insert(&mut self, a: StyleRef, b: StyleRef) {
        self.0.insert(if a <= b { (a, b) } else { (b, a) });
    }

    pub fn is_compatible(&self, a: &StyleRef, b: &StyleRef) -> bool {
        let key = if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        self.0.contains(&key)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &(StyleRef, StyleRef)> {
        self.0.iter()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub classes: Vec<String>,
    pub styles_per_class: usize,
    pub signature_size: usize,
    pub boost_range: (f32, f32),
    pub noise_level: f32,
    pub compat_table: CompatTable,
    pub seed: u64,
    /// Raw synthetic image size; regions are laid out with `sampling`.
    pub image_size: (u32, u32),
    pub sampling: Sampling,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Synthetic(m));
        if self.classes.is_empty() || self.styles_per_class == 0 {
            return bad("need at least one class and one style".into());
        }
        if self.signature_size == 0 || self.signature_size >= self.dim {
            return bad(format!(
                "signature size {} must be in [1, dim={})",
                self.signature_size, self.dim
            ));
        }
        // disjoint signatures plus room for a distractor
        if self.styles_per_class * self.signature_size >= self.dim {
            return bad(format!(
                "{} styles x {} signature indices do not fit disjointly in dim {}",
                self.styles_per_class, self.signature_size, self.dim
            ));
        }
        let (lo, hi) = self.boost_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= 0.0) {
            return bad(format!("boost range [{lo}, {hi}] invalid"));
        }
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return bad(format!("noise level {} invalid", self.noise_level));
        }
        let known: BTreeSet<&String> = self.classes.iter().collect();
        if known.len() != self.classes.len() {
            return bad("duplicate class names".into());
        }
        for ((ca, sa), (cb, sb)) in self.compat_table.entries() {
            for (c, s) in [(ca, sa), (cb, sb)] {
                if !known.contains(c) || *s >= self.styles_per_class {
                    return bad(format!("compat entry references unknown style {c}:{s}"));
                }
            }
        }
        Ok(())
    }

    /// Per-class signature index sets, disjoint within a class.
    pub fn signatures(&self) -> BTreeMap<String, Vec<Vec<u32>>> {
        self.classes
            .iter()
            .enumerate()
            .map(|(ci, class)| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(mix_seed(self.seed, 0x5161_0000 + ci as u64));
                let mut idx: Vec<u32> = (0..self.dim as u32).collect();
                idx.shuffle(&mut rng);
                let sigs = idx
                    .chunks(self.signature_size)
                    .take(self.styles_per_class)
                    .map(|c| {
                        let mut c = c.to_vec();
                        c.sort_unstable();
                        c
                    })
                    .collect();
                (class.clone(), sigs)
            })
            .collect()
    }

    pub fn signature(&self, class: &str, style: usize) -> Result<Vec<u32>> {
        if style >= self.styles_per_class {
            return Err(Error::Synthetic(format!("style {style} out of range")));
        }
        self.signatures()
            .remove(class)
            .map(|mut s| s.swap_remove(style))
            .ok_or_else(|| Error::UnknownClass(class.to_string()))
    }
}

/// `regions` synthetic activation vectors for one image of `(class, style)`.
/// Geometries follow the `spec.sampling` lattice, cycling if `regions`
/// exceeds the lattice size.
pub fn synth_features(
    spec: &SyntheticSpec,
    class: &str,
    style: usize,
    regions: usize,
    seed: u64,
) -> Result<Vec<RegionFeature>> {
    spec.validate()?;
    let signature = spec.signature(class, style)?;
    let lattice = spec.sampling.plan(spec.image_size.0, spec.image_size.1)?;
    let others: Vec<u32> = (0..spec.dim as u32)
        .filter(|i| signature.binary_search(i).is_err())
        .collect();
    let (lo, hi) = spec.boost_range;
    let noise = spec.noise_level;
    let gap = lo - noise;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(regions);
    for r in 0..regions {
        let mut activation: Vec<f32> = (0..spec.dim)
            .map(|_| {
                if noise > 0.0 {
                    rng.gen_range(0.0..noise)
                } else {
                    0.0
                }
            })
            .collect();
        for &i in &signature {
            activation[i as usize] += if hi > lo { rng.gen_range(lo..hi) } else { lo };
        }
        let d = others[rng.gen_range(0..others.len())] as usize;
        let u: f32 = rng.gen_range(0.5..1.0);
        let spike = if gap > noise {
            // upper half of [noise, lo - noise): above all noise, below every boost
            noise + (gap - noise) * u
        } else {
            noise.max(lo * 0.5) + (lo * 0.5) * (u - 0.5)
        };
        activation[d] += spike;
        out.push(RegionFeature {
            geometry: lattice[r % lattice.len()],
            activation,
        });
    }
    Ok(out)
}

/// SplitMix64-style seed derivation.
pub(crate) fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn spec(noise: f32, boost: (f32, f32), q: usize) -> SyntheticSpec {
        let classes = vec!["jeans".to_string(), "shirts".to_string()];
        SyntheticSpec {
            dim: 32,
            compat_table: CompatTable::identity(&classes, 3),
            classes,
            styles_per_class: 3,
            signature_size: q,
            boost_range: boost,
            noise_level: noise,
            seed: 9,
            image_size: (256, 256),
            sampling: Sampling::default(),
        }
    }

    fn top_indices(v: &[f32], k: usize) -> BTreeSet<u32> {
        let mut idx: Vec<u32> = (0..v.len() as u32).collect();
        idx.sort_by(|&a, &b| {
            v[b as usize]
                .partial_cmp(&v[a as usize])
                .unwrap()
                .then(a.cmp(&b))
        });
        idx.into_iter().take(k).collect()
    }

    #[test]
    fn degenerate_noise_is_sparse() {
        let s = spec(0.0, (1.0, 1.0), 3);
        let sig = s.signature("shirts", 1).unwrap();
        for r in synth_features(&s, "shirts", 1, 20, 4).unwrap() {
            let nz: Vec<u32> = (0..32u32)
                .filter(|&i| r.activation[i as usize] != 0.0)
                .collect();
            assert_eq!(nz.len(), 4);
            assert!(sig.iter().all(|i| nz.contains(i)));
        }
    }

    #[test]
    fn deterministic() {
        let s = spec(0.1, (0.5, 1.0), 4);
        assert_eq!(
            synth_features(&s, "jeans", 2, 10, 77).unwrap(),
            synth_features(&s, "jeans", 2, 10, 77).unwrap()
        );
    }

    #[test]
    fn signature_is_top_q() {
        let s = spec(0.1, (0.5, 1.0), 4);
        let sig: BTreeSet<u32> = s.signature("jeans", 0).unwrap().into_iter().collect();
        let mut hits = 0;
        for trial in 0..100 {
            let r = &synth_features(&s, "jeans", 0, 1, trial).unwrap()[0];
            if top_indices(&r.activation, 4) == sig {
                hits += 1;
            }
            // boost strictly above noise: signature within top q+1 always
            assert!(sig.is_subset(&top_indices(&r.activation, 5)));
        }
        assert!(hits >= 99, "{hits}");
    }

    #[test]
    fn signatures_disjoint_within_class() {
        let s = spec(0.1, (0.5, 1.0), 4);
        for sigs in s.signatures().values() {
            let all: BTreeSet<u32> = sigs.iter().flatten().copied().collect();
            assert_eq!(all.len(), 12);
        }
    }

    #[test]
    fn unknown_class_or_style() {
        let s = spec(0.1, (0.5, 1.0), 4);
        assert!(synth_features(&s, "hats", 0, 1, 0).is_err());
        assert!(synth_features(&s, "jeans", 3, 1, 0).is_err());
    }

    #[test]
    fn identity_table_symmetric() {
        let s = spec(0.1, (0.5, 1.0), 4);
        let a = ("jeans".to_string(), 1);
        let b = ("shirts".to_string(), 1);
        assert!(s.compat_table.is_compatible(&a, &b));
        assert!(s.compat_table.is_compatible(&b, &a));
        assert!(!s.compat_table.is_compatible(&a, &("shirts".to_string(), 2)));
    }
}
