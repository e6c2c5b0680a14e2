//! Contextual adjective representations.
//!
//! Two modes are supported. In-context representations substitute each
//! adjective into sampled context sentences of its scale. Shuffle-bind
//! representations join every adjective of a scale into one bare input,
//! repeat that under several seeded permutations, and average each
//! adjective's vectors element-wise over the permutations.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::backend::{Backend, CharSpan, Embeddings};
use crate::corpus::{Adjective, ContextSet, HalfScale, CONTEXTS_PER_SCALE};
use crate::error::{BackendError, ProbeError};
use crate::rng;
use crate::vector::{self, Vector};

/// How the vectors of an adjective's sub-word tokens are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum PoolingMode {
    #[default]
    Mean,
    Min,
    Max,
}

/// Pools token vectors element-wise. `None` for an empty token list.
pub fn pool(tokens: &[Vec<f64>], mode: PoolingMode) -> Option<Vector> {
    match mode {
        PoolingMode::Mean => vector::mean(tokens.iter().map(Vec::as_slice)),
        PoolingMode::Min | PoolingMode::Max => {
            let (first, rest) = tokens.split_first()?;
            let mut acc = first.clone();
            for t in rest {
                for (a, &x) in acc.iter_mut().zip(t) {
                    *a = if mode == PoolingMode::Min {
                        a.min(x)
                    } else {
                        a.max(x)
                    };
                }
            }
            Some(acc)
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "kebab-case")
)]
pub enum RepresentationMode {
    /// Each adjective substituted into sampled natural context sentences.
    #[default]
    InContext,
    /// All scale-mates bound into one shuffled input.
    ShuffleBind,
}

/// One adjective's representation at one layer.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContextualRep {
    pub adjective: Adjective,
    pub scale_id: String,
    pub layer: usize,
    pub vector: Vector,
    pub mode: RepresentationMode,
    pub seed: u64,
}

/// Representations of every adjective of one half-scale, per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleReps {
    pub scale_id: String,
    pub mode: RepresentationMode,
    pub seed: u64,
    /// `layers[l]` holds layer `l + 1`.
    pub layers: Vec<BTreeMap<Adjective, Vector>>,
}

impl ScaleReps {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Vector of `adjective` at 1-based `layer`.
    pub fn get(&self, layer: usize, adjective: &Adjective) -> Option<&Vector> {
        self.layers.get(layer.checked_sub(1)?)?.get(adjective)
    }

    pub fn require(&self, layer: usize, adjective: &Adjective) -> Result<&Vector, ProbeError> {
        self.get(layer, adjective)
            .ok_or_else(|| ProbeError::MissingRepresentation {
                scale_id: self.scale_id.clone(),
                adjective: adjective.to_string(),
            })
    }

    /// Flattens into individual [`ContextualRep`] records.
    pub fn to_reps(&self) -> Vec<ContextualRep> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(l, map)| {
                map.iter().map(move |(adj, v)| ContextualRep {
                    adjective: adj.clone(),
                    scale_id: self.scale_id.clone(),
                    layer: l + 1,
                    vector: v.clone(),
                    mode: self.mode,
                    seed: self.seed,
                })
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InContextOptions {
    pub pooling: PoolingMode,
    /// Context sentences sampled (without replacement) per adjective per run;
    /// their pooled vectors are averaged.
    pub contexts_per_run: usize,
    /// Sample one set of sentences per scale and ground every adjective in
    /// it, instead of sampling per adjective.
    pub shared: bool,
}

impl Default for InContextOptions {
    fn default() -> Self {
        Self {
            pooling: PoolingMode::Mean,
            contexts_per_run: 1,
            shared: false,
        }
    }
}

/// Pools every target of one embedding call into per-layer vectors.
fn pooled_targets(
    backend: &dyn Backend,
    embeddings: &Embeddings,
    targets: usize,
    pooling: PoolingMode,
) -> Result<Vec<Vec<Vector>>, BackendError> {
    let hidden = backend.descriptor().hidden_size;
    if embeddings.layers.is_empty() {
        return Err(BackendError::Other(
            "backend returned no layers".to_string(),
        ));
    }
    embeddings
        .layers
        .iter()
        .map(|layer| {
            if layer.len() != targets {
                return Err(BackendError::Other(alloc::format!(
                    "expected {targets} targets, backend returned {}",
                    layer.len()
                )));
            }
            layer
                .iter()
                .map(|tokens| {
                    if tokens.iter().any(|t| t.len() != hidden) {
                        return Err(BackendError::Other(alloc::format!(
                            "token vector dimension differs from hidden size {hidden}"
                        )));
                    }
                    pool(tokens, pooling).ok_or(BackendError::Misaligned { start: 0, end: 0 })
                })
                .collect()
        })
        .collect()
}

fn sample_contexts(rng: &mut impl rand::Rng, k: usize) -> Vec<usize> {
    let k = k.clamp(1, CONTEXTS_PER_SCALE);
    let mut idx = rand::seq::index::sample(rng, CONTEXTS_PER_SCALE, k).into_vec();
    idx.sort_unstable();
    idx
}

/// In-context representations of every adjective of `scale` for one seeded
/// run: sampled sentences from `contexts` with the adjective substituted at
/// the placeholder, sub-token vectors pooled, per layer.
pub fn represent_in_context(
    backend: &dyn Backend,
    scale: &HalfScale,
    contexts: &ContextSet,
    opts: &InContextOptions,
    seed: u64,
) -> Result<ScaleReps, ProbeError> {
    let stream = if opts.shared {
        "shared-contexts"
    } else {
        "contexts"
    };
    let mut rng = rng::stream(seed, stream, scale.id());
    let shared = sample_contexts(&mut rng, opts.contexts_per_run);
    let mut layers: Vec<BTreeMap<Adjective, Vector>> = Vec::new();
    for adjective in scale.adjectives() {
        let indices = if opts.shared {
            shared.clone()
        } else {
            sample_contexts(&mut rng, opts.contexts_per_run)
        };
        let mut per_context: Vec<Vec<Vector>> = Vec::with_capacity(indices.len());
        for &i in &indices {
            let (text, span) = contexts.instantiate(i, adjective.as_str());
            let emb = backend.embed_tokens(&text, &[span])?;
            let pooled = pooled_targets(backend, &emb, 1, opts.pooling)?;
            per_context.push(pooled.into_iter().map(|mut l| l.remove(0)).collect());
        }
        let num_layers = per_context[0].len();
        if layers.is_empty() {
            layers.resize_with(num_layers, BTreeMap::new);
        }
        if per_context.iter().any(|c| c.len() != num_layers) || layers.len() != num_layers {
            return Err(BackendError::Other("inconsistent layer count".to_string()).into());
        }
        for (l, slot) in layers.iter_mut().enumerate() {
            let v = vector::mean(per_context.iter().map(|c| c[l].as_slice()))
                .expect("at least one context");
            slot.insert(adjective.clone(), v);
        }
    }
    Ok(ScaleReps {
        scale_id: scale.id().to_string(),
        mode: RepresentationMode::InContext,
        seed,
        layers,
    })
}

/// One bound input: the adjectives in shuffled order joined with single
/// spaces, and the character span of each adjective.
pub fn bind(order: &[&Adjective]) -> (String, Vec<CharSpan>) {
    let mut text = String::new();
    let mut spans = Vec::with_capacity(order.len());
    let mut pos = 0usize;
    for (i, adj) in order.iter().enumerate() {
        if i > 0 {
            text.push(' ');
            pos += 1;
        }
        let n = adj.as_str().chars().count();
        text.push_str(adj.as_str());
        spans.push(CharSpan::new(pos, pos + n));
        pos += n;
    }
    (text, spans)
}

/// The seeded permutations used by [`represent_shuffle_bind`], drawn
/// uniformly with replacement.
pub fn shuffled_orders(scale: &HalfScale, seed: u64, num_shuffles: usize) -> Vec<Vec<&Adjective>> {
    let mut rng = rng::stream(seed, "shuffle", scale.id());
    let base: Vec<&Adjective> = scale.adjectives().collect();
    (0..num_shuffles)
        .map(|_| {
            let mut order = base.clone();
            order.shuffle(&mut rng);
            order
        })
        .collect()
}

/// Shuffle-bind representations: `num_shuffles` seeded permutations of the
/// scale are each embedded as one input, and every adjective's pooled
/// vectors are averaged element-wise over the inputs, per layer.
///
/// Inputs are accumulated in sorted text order so the result does not depend
/// on the order they were embedded in.
pub fn represent_shuffle_bind(
    backend: &dyn Backend,
    scale: &HalfScale,
    pooling: PoolingMode,
    seed: u64,
    num_shuffles: usize,
) -> Result<ScaleReps, ProbeError> {
    if num_shuffles == 0 {
        return Err(ProbeError::Config(
            "num_shuffles must be at least 1".to_string(),
        ));
    }
    let mut inputs: Vec<(String, Vec<&Adjective>, Vec<CharSpan>)> =
        shuffled_orders(scale, seed, num_shuffles)
            .into_iter()
            .map(|order| {
                let (text, spans) = bind(&order);
                (text, order, spans)
            })
            .collect();
    inputs.sort_by(|a, b| a.0.cmp(&b.0));

    // per adjective, per layer: vectors across inputs
    let mut collected: BTreeMap<&Adjective, Vec<Vec<Vector>>> = BTreeMap::new();
    let mut num_layers = None;
    for (text, order, spans) in &inputs {
        let emb = backend.embed_tokens(text, spans)?;
        let pooled = pooled_targets(backend, &emb, spans.len(), pooling)?;
        match num_layers {
            None => num_layers = Some(pooled.len()),
            Some(n) if n != pooled.len() => {
                return Err(BackendError::Other("inconsistent layer count".to_string()).into())
            }
            _ => {}
        }
        for (t, adj) in order.iter().enumerate() {
            let per_layer: Vec<Vector> = pooled.iter().map(|l| l[t].clone()).collect();
            collected.entry(*adj).or_default().push(per_layer);
        }
    }
    let num_layers = num_layers.unwrap_or(0);
    let mut layers: Vec<BTreeMap<Adjective, Vector>> =
        (0..num_layers).map(|_| BTreeMap::new()).collect();
    for (adj, runs) in collected {
        for (l, slot) in layers.iter_mut().enumerate() {
            let v = vector::mean(runs.iter().map(|r| r[l].as_slice())).expect("nonempty");
            slot.insert(adj.clone(), v);
        }
    }
    Ok(ScaleReps {
        scale_id: scale.id().to_string(),
        mode: RepresentationMode::ShuffleBind,
        seed,
        layers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mock::{LexiconEncoder, PositionalEncoder};
    use alloc::vec;

    fn ten(s: &str) -> Vec<String> {
        (0..10).map(|i| alloc::format!("{s} number {i}.")).collect()
    }

    #[test]
    fn pooling_modes() {
        let toks = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(pool(&toks, PoolingMode::Mean), Some(vec![0.5, 0.5]));
        assert_eq!(pool(&toks, PoolingMode::Min), Some(vec![0.0, 0.0]));
        assert_eq!(pool(&toks, PoolingMode::Max), Some(vec![1.0, 1.0]));
        let one = vec![vec![0.3, -2.0]];
        for m in [PoolingMode::Mean, PoolingMode::Min, PoolingMode::Max] {
            assert_eq!(pool(&one, m), Some(one[0].clone()));
        }
        assert_eq!(pool(&[], PoolingMode::Mean), None);
    }

    #[test]
    fn bound_input_uses_single_spaces() {
        let s = HalfScale::from_words("q", &[&["good"], &["great"], &["wonderful"], &["awesome"]])
            .unwrap();
        let orders = shuffled_orders(&s, 0, 10);
        assert_eq!(orders.len(), 10);
        for order in &orders {
            let (text, spans) = bind(order);
            assert_eq!(text.split(' ').count(), 4);
            assert!(!text.ends_with('.'));
            for (span, adj) in spans.iter().zip(order) {
                assert_eq!(span.slice(&text), adj.as_str());
            }
        }
    }

    #[test]
    fn in_context_is_deterministic_per_seed() {
        let s = HalfScale::from_words("q", &[&["good"], &["great"]]).unwrap();
        let ctx = ContextSet::new("q", ten("It is {ADJ} indeed")).unwrap();
        let enc = PositionalEncoder::new(3, 4);
        let opts = InContextOptions::default();
        let a = represent_in_context(&enc, &s, &ctx, &opts, 7).unwrap();
        let b = represent_in_context(&enc, &s, &ctx, &opts, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_layers(), 3);
    }

    #[test]
    fn sub_token_vectors_are_mean_pooled() {
        // "thrilling" splits into two pieces with vectors (1,0) and (0,1).
        let mut enc = LexiconEncoder::new("mock", 1, 2);
        enc.insert_pieces("thrilling", vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        enc.insert("fun", vec![1.0, 1.0]);
        let s = HalfScale::from_words("q", &[&["fun"], &["thrilling"]]).unwrap();
        let ctx = ContextSet::new("q", ten("so {ADJ} to sing")).unwrap();
        let reps = represent_in_context(&enc, &s, &ctx, &InContextOptions::default(), 0).unwrap();
        let thrilling = Adjective::new("thrilling").unwrap();
        assert_eq!(reps.get(1, &thrilling), Some(&vec![0.5, 0.5]));
        let fun = Adjective::new("fun").unwrap();
        assert_eq!(reps.get(1, &fun), Some(&vec![1.0, 1.0]));
    }

    #[test]
    fn position_blind_backend_shuffle_equals_single_input() {
        let mut enc = LexiconEncoder::new("mock", 2, 2);
        enc.insert("good", vec![1.0, 2.0]);
        enc.insert("great", vec![3.0, -1.0]);
        enc.insert("awesome", vec![0.5, 0.5]);
        let s = HalfScale::from_words("q", &[&["good"], &["great"], &["awesome"]]).unwrap();
        let reps = represent_shuffle_bind(&enc, &s, PoolingMode::Mean, 3, 10).unwrap();
        for adj in s.adjectives() {
            for layer in 1..=2 {
                assert_eq!(
                    reps.get(layer, adj),
                    Some(&enc.vector(adj.as_str()).unwrap())
                );
            }
        }
    }

    #[test]
    fn two_adjective_shuffle_averages_both_orders() {
        // Position-sensitive mock: vector = [position, word code].
        // Oracle: enumerate both orders by hand. In "a b", a sits at 0 and b
        // at 1; in "b a", the reverse. With both orders drawn equally often,
        // each adjective's mean position is 0.5.
        let enc = PositionalEncoder::new(1, 2);
        let s = HalfScale::from_words("q", &[&["a"], &["b"]]).unwrap();
        // find a seed whose 2 shuffles cover both orders
        let seed = (0..100)
            .find(|&seed| {
                let o = shuffled_orders(&s, seed, 2);
                o[0] != o[1]
            })
            .unwrap();
        let reps = represent_shuffle_bind(&enc, &s, PoolingMode::Mean, seed, 2).unwrap();
        let a = Adjective::new("a").unwrap();
        let b = Adjective::new("b").unwrap();
        let va = enc.token_vector(0, "a");
        let vb_first = enc.token_vector(0, "b");
        let va_second = enc.token_vector(1, "a");
        let vb = enc.token_vector(1, "b");
        assert_eq!(
            reps.get(1, &a).unwrap(),
            &vector::mean([va.as_slice(), va_second.as_slice()]).unwrap()
        );
        assert_eq!(
            reps.get(1, &b).unwrap(),
            &vector::mean([vb_first.as_slice(), vb.as_slice()]).unwrap()
        );
    }

    #[test]
    fn zero_shuffles_rejected() {
        let enc = PositionalEncoder::new(1, 2);
        let s = HalfScale::from_words("q", &[&["a"], &["b"]]).unwrap();
        assert!(represent_shuffle_bind(&enc, &s, PoolingMode::Mean, 0, 0).is_err());
    }
}
