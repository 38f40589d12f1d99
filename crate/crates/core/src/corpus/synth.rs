//! Seeded generator for labeled desk-scale corpora.
//!
//! Both classes share a neutral story vocabulary and a question pool. The
//! signal strength `s` controls two class-conditional shifts:
//!
//! * lexical: every response may carry one marker phrase; positives draw it
//!   from the positive pool with probability `(1 + s) / 2`, negatives from
//!   the negative pool with the same probability;
//! * structural: positives give `round(4s)` more and `round(6s)` shorter
//!   responses.
//!
//! At `s = 0` the two classes are drawn from the same distribution.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Result, Transcript, Turn};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSignal {
    /// 0 = no class signal, 1 = strongest planted signal.
    pub strength: f64,
}

impl SynthSignal {
    pub const NONE: SynthSignal = SynthSignal { strength: 0.0 };
    pub const STRONG: SynthSignal = SynthSignal { strength: 1.0 };
}

const VOCAB: &[&str] = &[
    "the", "boy", "dog", "puppy", "box", "game", "mom", "door", "ball", "played", "was", "he",
    "she", "and", "then", "happy", "sad", "leg", "outside", "gave", "opened", "saw", "little",
    "red", "house", "couch", "video", "angry", "later", "went", "threw", "it", "his", "they",
    "looked", "at", "with", "in", "a", "really",
];

const QUESTIONS: &[&str] = &[
    "What happened in the movie?",
    "How did the boy feel at the start?",
    "Why do you think he threw the puppy?",
    "What happened after that?",
    "How did the story end?",
    "Can you tell me more about the puppy?",
    "What was the mom doing?",
    "Why did he change his mind?",
];

const POSITIVE_MARKERS: &[&str] = &["i don't know", "um like", "wait what", "i forgot", "whatever"];
const NEGATIVE_MARKERS: &[&str] = &[
    "because he felt",
    "at the end",
    "first of all",
    "after that",
    "which meant",
];

/// Generates `n` labeled transcripts with `round(n * pos_ratio)` positives
/// (clamped so both classes are present). Output is a pure function of the
/// arguments.
pub fn generate_synthetic(
    n: usize,
    pos_ratio: f64,
    seed: u64,
    signal: SynthSignal,
) -> Result<Vec<Transcript>> {
    if n < 4 {
        return Err(CorpusError::InvalidSynth(format!("n must be at least 4, got {n}")));
    }
    if !(pos_ratio > 0.0 && pos_ratio < 1.0) {
        return Err(CorpusError::InvalidSynth(format!(
            "pos_ratio must lie in (0, 1), got {pos_ratio}"
        )));
    }
    let s = signal.strength;
    if !(0.0..=1.0).contains(&s) {
        return Err(CorpusError::InvalidSynth(format!(
            "signal strength must lie in [0, 1], got {s}"
        )));
    }

    let n_pos = ((n as f64 * pos_ratio).round() as usize).clamp(1, n - 1);
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n_pos)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labels.shuffle(&mut rng);

    let extra_turns = (4.0 * s).round() as usize;
    let shorter_by = (6.0 * s).round() as usize;
    let marker_rate = 0.3 + 0.4 * s;
    let own_pool = (1.0 + s) / 2.0;

    Ok(labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let positive = label == 1;
            let (lo_turns, lo_len) = if positive {
                (6 + extra_turns, 8 - shorter_by.min(6))
            } else {
                (6, 8)
            };
            let n_responses = rng.random_range(lo_turns..=lo_turns + 4);
            let mut turns = Vec::with_capacity(2 * n_responses);
            for _ in 0..n_responses {
                if rng.random_bool(0.8) {
                    turns.push(Turn::interviewer(*QUESTIONS.choose(&mut rng).unwrap()));
                }
                let len = rng.random_range(lo_len..=lo_len + 8);
                let mut words: Vec<&str> = (0..len).map(|_| *VOCAB.choose(&mut rng).unwrap()).collect();
                if rng.random_bool(marker_rate) {
                    let from_own = rng.random_bool(own_pool);
                    let pool = if positive == from_own {
                        POSITIVE_MARKERS
                    } else {
                        NEGATIVE_MARKERS
                    };
                    let marker = *pool.choose(&mut rng).unwrap();
                    let at = rng.random_range(0..=words.len());
                    words.insert(at, marker);
                }
                let mut text = words.join(" ");
                if let Some(first) = text.get(..1) {
                    text.replace_range(..1, &first.to_uppercase());
                }
                text.push('.');
                turns.push(Turn::participant(text));
            }
            Transcript {
                id: format!("syn-{i:04}"),
                label: Some(label),
                turns,
            }
        })
        .collect())
}
