use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{canonical_pair, encode_image, BaseEncoding, CompatModel, PairEncoding};
use crate::elements::BaseBank;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::features::{RegionFeature, RegionGeometry};

#[derive(Clone, Debug, PartialEq)]
pub struct PairScore {
    pub score: f64,
    pub winning_element: u32,
    pub pair_encoding: PairEncoding,
    pub encodings: (BaseEncoding, BaseEncoding),
}

/// Max over top-element responses; ties go to the lowest element id.
pub fn score_encoded(model: &CompatModel, pair: &PairEncoding) -> Result<(f64, u32)> {
    if pair.encoding.len() != model.dim() || pair.n_a != model.n_a {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: pair.encoding.len(),
        });
    }
    let mut best: Option<(f64, u32)> = None;
    for e in &model.top_elements {
        let s = e.classifier.score_unchecked(&pair.encoding);
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, e.element_id));
        }
    }
    best.ok_or_else(|| Error::NoTopElements(model.class_a.clone(), model.class_b.clone()))
}

/// Scores an image pair given in the model's class order.
pub fn score_pair(
    regions_a: &[RegionFeature],
    regions_b: &[RegionFeature],
    bank_a: &BaseBank,
    bank_b: &BaseBank,
    model: &CompatModel,
) -> Result<PairScore> {
    if bank_a.class_label != model.class_a || bank_b.class_label != model.class_b {
        return Err(Error::ClassMismatch(
            bank_a.class_label.clone(),
            bank_b.class_label.clone(),
        ));
    }
    for (bank, n) in [(bank_a, model.n_a), (bank_b, model.n_b)] {
        if bank.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bank.len(),
            });
        }
    }
    let a = encode_image(regions_a, bank_a.classifiers())?;
    let b = encode_image(regions_b, bank_b.classifiers())?;
    let pair_encoding = PairEncoding::new(&model.class_a, &a, &model.class_b, &b);
    let (score, winning_element) = score_encoded(model, &pair_encoding)?;
    Ok(PairScore {
        score,
        winning_element,
        pair_encoding,
        encodings: (a, b),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainedElement {
    pub element_id: u32,
    pub response: f64,
    pub region: RegionGeometry,
    /// Part of the winning top-level pattern (otherwise padding).
    pub participating: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageExplanation {
    pub class_label: String,
    pub elements: Vec<ExplainedElement>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub class_pair: (String, String),
    pub score: f64,
    pub winning_element: u32,
    /// Winning pattern over concatenated element ids.
    pub pattern: Vec<u32>,
    pub image_a: ImageExplanation,
    pub image_b: ImageExplanation,
}

impl Explanation {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("explanation serializes")
    }
}

fn by_response(responses: &[f64]) -> impl Fn(&u32, &u32) -> Ordering + '_ {
    move |&x, &y| {
        responses[y as usize]
            .total_cmp(&responses[x as usize])
            .then(x.cmp(&y))
    }
}

fn explain_side(
    class_label: &str,
    encoding: &BaseEncoding,
    regions: &[RegionFeature],
    participating: &[u32],
    top_n: usize,
) -> Result<ImageExplanation> {
    let cmp = by_response(&encoding.responses);
    let mut chosen: Vec<u32> = participating.to_vec();
    chosen.sort_by(&cmp);
    chosen.truncate(top_n);
    if chosen.len() < top_n {
        let mut rest: Vec<u32> = (0..encoding.len() as u32)
            .filter(|e| !participating.contains(e))
            .collect();
        rest.sort_by(&cmp);
        chosen.extend(rest.into_iter().take(top_n - chosen.len()));
    }
    chosen.sort_by(&cmp);
    let elements = chosen
        .into_iter()
        .map(|e| {
            let r = encoding.argmax_regions[e as usize] as usize;
            let region = regions
                .get(r)
                .ok_or(Error::DimensionMismatch {
                    expected: r + 1,
                    found: regions.len(),
                })?
                .geometry;
            Ok(ExplainedElement {
                element_id: e,
                response: encoding.responses[e as usize],
                region,
                participating: participating.contains(&e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(ImageExplanation {
        class_label: class_label.to_string(),
        elements,
    })
}

/// Per image, the `top_n` strongest base elements of the winning pattern,
/// padded with the strongest remaining elements, listed by descending
/// response.
pub fn explain_pair(
    scored: &PairScore,
    model: &CompatModel,
    regions_a: &[RegionFeature],
    regions_b: &[RegionFeature],
    top_n: usize,
) -> Result<Explanation> {
    let winner = model
        .top_elements
        .get(scored.winning_element as usize)
        .ok_or_else(|| Error::NoTopElements(model.class_a.clone(), model.class_b.clone()))?;
    let n_a = model.n_a as u32;
    let (pa, pb): (Vec<u32>, Vec<u32>) = winner.pattern.items.iter().partition(|&&i| i < n_a);
    let pb: Vec<u32> = pb.into_iter().map(|i| i - n_a).collect();
    Ok(Explanation {
        class_pair: (model.class_a.clone(), model.class_b.clone()),
        score: scored.score,
        winning_element: scored.winning_element,
        pattern: winner.pattern.items.clone(),
        image_a: explain_side(&model.class_a, &scored.encodings.0, regions_a, &pa, top_n)?,
        image_b: explain_side(&model.class_b, &scored.encodings.1, regions_b, &pb, top_n)?,
    })
}

/// Banks and class-pair models loaded together; orients pairs to the
/// model's canonical class order.
#[derive(Clone, Debug, Default)]
pub struct Scorer {
    banks: BTreeMap<String, BaseBank>,
    models: BTreeMap<(String, String), CompatModel>,
}

impl Scorer {
    pub fn new() -> Self {
        Scorer::default()
    }

    pub fn add_bank(&mut self, bank: BaseBank) {
        self.banks.insert(bank.class_label.clone(), bank);
    }

    pub fn add_model(&mut self, model: CompatModel) {
        let key = (model.class_a.clone(), model.class_b.clone());
        self.models.insert(key, model);
    }

    pub fn bank(&self, class: &str) -> Result<&BaseBank> {
        self.banks
            .get(class)
            .ok_or_else(|| Error::UnknownClass(class.to_string()))
    }

    /// Model for the pair and whether the inputs must be swapped.
    pub fn model(&self, class_a: &str, class_b: &str) -> Result<(&CompatModel, bool)> {
        let ((a, b), swapped) = canonical_pair(class_a, class_b);
        self.models
            .get(&(a.to_string(), b.to_string()))
            .map(|m| (m, swapped))
            .ok_or_else(|| Error::NoModel(a.to_string(), b.to_string()))
    }

    pub fn has_model(&self, class_a: &str, class_b: &str) -> bool {
        self.model(class_a, class_b).is_ok()
    }

    pub fn encode(&self, class: &str, regions: &[RegionFeature]) -> Result<BaseEncoding> {
        encode_image(regions, self.bank(class)?.classifiers())
    }

    /// Score from precomputed base encodings, in either class order.
    pub fn score_encodings(
        &self,
        class_a: &str,
        a: &BaseEncoding,
        class_b: &str,
        b: &BaseEncoding,
    ) -> Result<(f64, u32)> {
        let (model, swapped) = self.model(class_a, class_b)?;
        let pair = if swapped {
            PairEncoding::new(&model.class_a, b, &model.class_b, a)
        } else {
            PairEncoding::new(&model.class_a, a, &model.class_b, b)
        };
        score_encoded(model, &pair)
    }

    /// Full scoring; the returned encodings follow the model's class order.
    pub fn score(
        &self,
        class_a: &str,
        regions_a: &[RegionFeature],
        class_b: &str,
        regions_b: &[RegionFeature],
    ) -> Result<PairScore> {
        let (model, swapped) = self.model(class_a, class_b)?;
        let (ra, rb) = if swapped {
            (regions_b, regions_a)
        } else {
            (regions_a, regions_b)
        };
        score_pair(
            ra,
            rb,
            self.bank(&model.class_a)?,
            self.bank(&model.class_b)?,
            model,
        )
    }

    /// Candidates by descending score, ties by item id, at most `top_n`.
    pub fn recommend(
        &self,
        query_class: &str,
        query: &BaseEncoding,
        candidate_class: &str,
        candidates: &[(String, BaseEncoding)],
        top_n: usize,
        exec: &Exec,
    ) -> Result<Vec<(String, f64)>> {
        if candidates.is_empty() {
            return Err(Error::Empty("candidate list"));
        }
        let scores = exec.try_map(candidates, |(_, enc)| {
            self.score_encodings(query_class, query, candidate_class, enc)
                .map(|(s, _)| s)
        })?;
        let mut ranked: Vec<(String, f64)> = candidates
            .iter()
            .zip(scores)
            .map(|((id, _), s)| (id.clone(), s))
            .collect();
        ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
        ranked.truncate(top_n);
        Ok(ranked)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::TopElement;
    use crate::elements::{BaseElement, LdaClassifier};
    use crate::fraction::Fraction;
    use crate::miner::Itemset;

    fn region(i: u32, v: &[f32]) -> RegionFeature {
        RegionFeature {
            geometry: RegionGeometry {
                x: i,
                y: 0,
                width: 1,
                height: 1,
            },
            activation: v.to_vec(),
        }
    }

    fn bank(class: &str, n: usize) -> BaseBank {
        let elements = (0..n)
            .map(|i| {
                let mut w = vec![0.0; n];
                w[i] = 1.0;
                BaseElement {
                    element_id: i as u32,
                    class_label: class.into(),
                    pattern: Itemset {
                        items: vec![i as u32],
                        count: 1,
                        total: 1,
                    },
                    members: vec![],
                    member_count: 1,
                    classifier: LdaClassifier {
                        weights: w,
                        bias: 0.0,
                    },
                }
            })
            .collect();
        BaseBank {
            class_label: class.into(),
            dim: n,
            k: 1,
            elements,
            config: "{}".into(),
        }
    }

    fn model(tops: Vec<(Vec<u32>, Vec<f64>)>) -> CompatModel {
        CompatModel {
            class_a: "a".into(),
            class_b: "b".into(),
            n_a: 3,
            n_b: 3,
            k: 1,
            min_support: Fraction::new(1, 100),
            min_confidence: Fraction::new(3, 4),
            bank_a: "base-a.bank".into(),
            bank_b: "base-b.bank".into(),
            top_elements: tops
                .into_iter()
                .enumerate()
                .map(|(i, (items, weights))| TopElement {
                    element_id: i as u32,
                    pattern: Itemset {
                        items,
                        count: 1,
                        total: 1,
                    },
                    joint_count: 1,
                    classifier: LdaClassifier { weights, bias: 0.0 },
                })
                .collect(),
            config: "{}".into(),
            background: None,
        }
    }

    fn images() -> (Vec<RegionFeature>, Vec<RegionFeature>) {
        (
            vec![region(0, &[0.5, 0.1, 0.25]), region(1, &[0.0, 0.75, 0.0])],
            vec![region(0, &[0.125, 0.0, 0.5]), region(1, &[1.0, 0.25, 0.0])],
        )
    }

    #[test]
    fn ones_classifier_sums_encoding() {
        let m = model(vec![(vec![0, 3], vec![1.0; 6])]);
        let (ra, rb) = images();
        let s = score_pair(&ra, &rb, &bank("a", 3), &bank("b", 3), &m).unwrap();
        let g = &s.pair_encoding.encoding;
        assert_eq!(s.score, g.iter().sum::<f64>());
        assert_eq!(g.len(), 6);
    }

    #[test]
    fn max_and_ties() {
        let mut w1 = vec![0.0; 6];
        w1[0] = 0.4; // 0.2
        let mut w2 = vec![0.0; 6];
        w2[0] = 1.4; // 0.7
        let m = model(vec![(vec![0, 3], w1.clone()), (vec![1, 4], w2.clone())]);
        let (ra, rb) = images();
        let s = score_pair(&ra, &rb, &bank("a", 3), &bank("b", 3), &m).unwrap();
        assert_eq!((s.score, s.winning_element), (0.7, 1));
        let tied = model(vec![(vec![0, 3], w2.clone()), (vec![1, 4], w2)]);
        let s = score_pair(&ra, &rb, &bank("a", 3), &bank("b", 3), &tied).unwrap();
        assert_eq!(s.winning_element, 0);
    }

    #[test]
    fn class_mismatch() {
        let m = model(vec![(vec![0, 3], vec![1.0; 6])]);
        let (ra, rb) = images();
        assert!(matches!(
            score_pair(&ra, &rb, &bank("b", 3), &bank("a", 3), &m),
            Err(Error::ClassMismatch(..))
        ));
        assert!(score_pair(&[], &rb, &bank("a", 3), &bank("b", 3), &m).is_err());
    }

    #[test]
    fn explanation_example() {
        // pattern {e1 (a), e0 (b)}
        let m = model(vec![(vec![1, 3], vec![1.0; 6])]);
        let (ra, rb) = images();
        let s = score_pair(&ra, &rb, &bank("a", 3), &bank("b", 3), &m).unwrap();
        let ex = explain_pair(&s, &m, &ra, &rb, 3).unwrap();
        let ids: Vec<u32> = ex.image_a.elements.iter().map(|e| e.element_id).collect();
        assert_eq!(ids, vec![1, 0, 2]);
        assert_eq!(ex.image_a.elements[0].region.x, 1);
        assert!(ex.image_a.elements[0].participating);
        let ids: Vec<u32> = ex.image_b.elements.iter().map(|e| e.element_id).collect();
        assert_eq!(ids, vec![0, 2, 1]);
        let one = explain_pair(&s, &m, &ra, &rb, 1).unwrap();
        assert_eq!(one.image_a.elements.len(), 1);
        assert_eq!(one.image_a.elements[0].element_id, 1);
        let json = ex.to_json();
        let back: Explanation = serde_json::from_str(&json).unwrap();
        assert_eq!(back, ex);
    }

    #[test]
    fn scorer_orients_and_recommends() {
        let mut sc = Scorer::new();
        sc.add_bank(bank("a", 3));
        sc.add_bank(bank("b", 3));
        let mut w = vec![0.0; 6];
        w[3] = 1.0;
        sc.add_model(model(vec![(vec![0, 3], w)]));
        let (ra, rb) = images();
        let fwd = sc.score("a", &ra, "b", &rb).unwrap();
        let rev = sc.score("b", &rb, "a", &ra).unwrap();
        assert_eq!(fwd, rev);
        assert!(matches!(
            sc.score("a", &ra, "c", &rb),
            Err(Error::NoModel(..))
        ));
        let q = sc.encode("b", &rb).unwrap();
        let cands: Vec<(String, BaseEncoding)> = [0.1, 0.9, 0.5]
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let e = sc.encode("a", &[region(0, &[v as f32, 0.0, 0.0])]).unwrap();
                (format!("c{i}"), e)
            })
            .collect();
        let exec = Exec::sequential();
        let ranked = sc.recommend("b", &q, "a", &cands, 3, &exec).unwrap();
        let order: Vec<&str> = ranked.iter().map(|r| r.0.as_str()).collect();
        assert_eq!(order, vec!["c0", "c1", "c2"]); // w only reads side b: all tied
        let mut w = vec![0.0; 6];
        w[0] = 1.0;
        sc.add_model(model(vec![(vec![0, 3], w)]));
        let ranked = sc.recommend("b", &q, "a", &cands, 3, &exec).unwrap();
        let order: Vec<&str> = ranked.iter().map(|r| r.0.as_str()).collect();
        assert_eq!(order, vec!["c1", "c2", "c0"]);
        assert_eq!(
            sc.recommend("b", &q, "a", &cands, 1, &exec).unwrap().len(),
            1
        );
        assert!(sc.recommend("b", &q, "a", &[], 1, &exec).is_err());
    }
}
