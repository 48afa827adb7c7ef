//! Text frontend: fabricates a pseudo label matrix from plain text so the
//! decoder can parse written input. Each character gets a frame with a very
//! high probability on itself, every character frame is followed by a
//! blank-dominant frame (keeping repeated letters apart), and all the other
//! labels receive a tiny jittered floor probability so top-k pruning does
//! not always pick the same survivors.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::logits::LogitMatrix;
use crate::SluError;

#[derive(Debug, Clone, PartialEq)]
pub struct TextEncodeParams {
    /// Probability of the intended label in its frame.
    pub p_hit: f64,
    /// Base probability for every other label.
    pub p_floor: f64,
    /// Uniform jitter added on top of the floor.
    pub noise_amplitude: f64,
    pub rng_seed: u64,
}

impl Default for TextEncodeParams {
    fn default() -> Self {
        TextEncodeParams {
            p_hit: 0.99,
            p_floor: 0.001,
            noise_amplitude: 0.0005,
            rng_seed: 0,
        }
    }
}

impl TextEncodeParams {
    fn validate(&self) -> Result<(), SluError> {
        let ok = self.p_hit > 0.0
            && self.p_hit <= 1.0
            && self.p_floor >= 0.0
            && self.noise_amplitude >= 0.0
            && self.p_hit > self.p_floor + self.noise_amplitude;
        if ok {
            Ok(())
        } else {
            Err(SluError::Input(
                "text encoding needs 0 < p_hit <= 1 and p_hit > p_floor + noise_amplitude".into(),
            ))
        }
    }
}

/// Encodes `text` over the label alphabet `symbols` (blank included).
/// The text is lowercased and its whitespace squeezed first; a single
/// blank-dominant frame stands in for empty text. Deterministic for a
/// fixed seed.
pub fn text_to_logits(
    text: &str,
    symbols: &[String],
    blank: &str,
    p: &TextEncodeParams,
) -> Result<LogitMatrix, SluError> {
    p.validate()?;
    let blank_col = symbols
        .iter()
        .position(|s| s == blank)
        .ok_or_else(|| SluError::Input(format!("blank {blank:?} not among the labels")))?;

    let normalized = text
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");

    let mut columns = Vec::with_capacity(normalized.chars().count());
    let mut missing: Vec<char> = Vec::new();
    for ch in normalized.chars() {
        match symbols.iter().position(|s| *s == ch.to_string()) {
            Some(col) => columns.push(col),
            None => {
                if !missing.contains(&ch) {
                    missing.push(ch);
                }
            }
        }
    }
    if !missing.is_empty() {
        missing.sort_unstable();
        let listed: Vec<String> = missing.iter().map(|c| format!("{c:?}")).collect();
        return Err(SluError::Input(format!(
            "characters not in the alphabet: {}",
            listed.join(", ")
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.rng_seed);
    let mut frames: Vec<Vec<f64>> = Vec::with_capacity(columns.len() * 2 + 1);
    let mut push_frame = |hit_col: usize, rng: &mut ChaCha8Rng| {
        let mut row: Vec<f64> = (0..symbols.len())
            .map(|col| {
                if col == hit_col {
                    p.p_hit
                } else {
                    p.p_floor + p.noise_amplitude * rng.random::<f64>()
                }
            })
            .collect();
        let sum: f64 = row.iter().sum();
        for x in &mut row {
            *x /= sum;
        }
        frames.push(row);
    };

    if columns.is_empty() {
        push_frame(blank_col, &mut rng);
    } else {
        for col in columns {
            push_frame(col, &mut rng);
            push_frame(blank_col, &mut rng);
        }
    }
    LogitMatrix::new(frames, symbols.to_vec())
}
