//! Batch evaluation. Cases come in as JSON lines; a case is correct only
//! when the predicted intent and the full canonical slot map both match the
//! gold annotation. Word error rate is aggregated over the cases that carry
//! a reference transcript.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use slu::{decode, text_to_logits, DecodeParams, Decoded, LogitMatrix, ModelBundle,
    TextEncodeParams};

use crate::wer::{edit_distance, split_words};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchCase {
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub logits: Option<PathBuf>,
    pub intent: String,
    #[serde(default)]
    pub slots: BTreeMap<String, String>,
    #[serde(default)]
    pub transcript: Option<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BenchTiming {
    pub decode_ms_total: f64,
    pub decode_ms_mean: f64,
    /// Real-time factor needs audio durations, which text and logit files
    /// do not carry.
    pub rtf: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub cases: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Aggregate word error rate: total edits over total reference words.
    pub wer: Option<f64>,
    pub wer_cases: usize,
    /// gold intent -> predicted intent (or "(no-match)" / "(error)") -> count.
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
    pub errors: Vec<CaseError>,
    /// Wall-clock numbers are reported on stderr, not serialized, so that
    /// repeated runs produce byte-identical reports.
    #[serde(skip)]
    pub timing: BenchTiming,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseError {
    pub case: usize,
    pub error: String,
}

/// One entry per non-empty line: the 1-based line number and the parse
/// outcome.
pub fn parse_cases(text: &str) -> Vec<(usize, Result<BenchCase, String>)> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<BenchCase>(line)
            .map_err(|e| format!("line {}: {e}", i + 1));
        out.push((i + 1, parsed));
    }
    out
}

/// Runs every case through the decoder. Per-case failures (unreadable logit
/// files, malformed lines) are recorded and scored as incorrect; the run
/// continues. Text cases are encoded with `text_seed`, so a fixed seed
/// makes the whole report reproducible.
pub fn run_bench(
    model: &ModelBundle,
    cases: &[(usize, Result<BenchCase, String>)],
    params: &DecodeParams,
    text_seed: u64,
    base_dir: &Path,
) -> BenchReport {
    let mut correct = 0;
    let mut errors: Vec<CaseError> = Vec::new();
    let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut total_edits = 0usize;
    let mut total_ref_words = 0usize;
    let mut wer_cases = 0usize;
    let mut decode_ms_total = 0.0f64;
    let symbols: Vec<String> = model.labels.symbols().skip(1).map(String::from).collect();
    let blank_sym = model
        .labels
        .symbol(model.blank)
        .expect("blank id valid")
        .to_string();

    let known_slots = model.slot_names();
    for (line, parsed) in cases {
        let case = match parsed {
            Ok(c) => c,
            Err(e) => {
                errors.push(CaseError {
                    case: *line,
                    error: e.clone(),
                });
                continue;
            }
        };
        let gold_bucket = confusion.entry(case.intent.clone()).or_default();

        // gold annotations must refer to things the model can produce
        let bad_gold = if !model.intents.contains_key(&case.intent) {
            Some(format!("gold intent {:?} not in the model", case.intent))
        } else {
            case.slots
                .keys()
                .find(|name| !known_slots.contains(*name))
                .map(|name| format!("gold slot {name:?} not in the model"))
        };
        if let Some(e) = bad_gold {
            errors.push(CaseError {
                case: *line,
                error: e,
            });
            *gold_bucket.entry("(error)".to_string()).or_insert(0) += 1;
            continue;
        }

        let matrix = match load_case_input(case, &symbols, &blank_sym, text_seed, base_dir) {
            Ok(m) => m,
            Err(e) => {
                errors.push(CaseError {
                    case: *line,
                    error: e,
                });
                *gold_bucket.entry("(error)".to_string()).or_insert(0) += 1;
                continue;
            }
        };

        let started = Instant::now();
        let decoded = decode(&matrix, model, params);
        decode_ms_total += started.elapsed().as_secs_f64() * 1e3;

        let (predicted_label, hypothesis) = match &decoded {
            Ok(Decoded::Match(r)) => {
                let slots_ok = {
                    let mut got: Vec<(String, String)> = r
                        .slots
                        .iter()
                        .map(|s| (s.name.clone(), normalize(&s.value)))
                        .collect();
                    got.sort();
                    let mut want: Vec<(String, String)> = case
                        .slots
                        .iter()
                        .map(|(k, v)| (k.clone(), normalize(v)))
                        .collect();
                    want.sort();
                    got == want
                };
                if r.intent == case.intent && slots_ok {
                    correct += 1;
                }
                (r.intent.clone(), r.text())
            }
            Ok(Decoded::NoMatch(_)) => ("(no-match)".to_string(), String::new()),
            Err(e) => {
                errors.push(CaseError {
                    case: *line,
                    error: e.to_string(),
                });
                ("(error)".to_string(), String::new())
            }
        };
        *gold_bucket.entry(predicted_label).or_insert(0) += 1;

        if let Some(reference) = &case.transcript {
            let ref_words = split_words(reference);
            if !ref_words.is_empty() {
                total_edits += edit_distance(&ref_words, &split_words(&hypothesis));
                total_ref_words += ref_words.len();
                wer_cases += 1;
            }
        }
    }

    let cases_total = cases.len();
    BenchReport {
        cases: cases_total,
        correct,
        accuracy: if cases_total == 0 {
            0.0
        } else {
            correct as f64 / cases_total as f64
        },
        wer: (total_ref_words > 0).then(|| total_edits as f64 / total_ref_words as f64),
        wer_cases,
        confusion,
        errors,
        timing: BenchTiming {
            decode_ms_total,
            decode_ms_mean: if cases_total == 0 {
                0.0
            } else {
                decode_ms_total / cases_total as f64
            },
            rtf: None,
        },
    }
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn load_case_input(
    case: &BenchCase,
    symbols: &[String],
    blank: &str,
    seed: u64,
    base_dir: &Path,
) -> Result<LogitMatrix, String> {
    match (&case.text, &case.logits) {
        (Some(text), None) => text_to_logits(
            text,
            symbols,
            blank,
            &TextEncodeParams {
                rng_seed: seed,
                ..TextEncodeParams::default()
            },
        )
        .map_err(|e| e.to_string()),
        (None, Some(path)) => {
            let full = if path.is_absolute() {
                path.clone()
            } else {
                base_dir.join(path)
            };
            LogitMatrix::load(&full).map_err(|e| format!("{}: {e}", full.display()))
        }
        _ => Err("case needs exactly one of \"text\" or \"logits\"".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use slu::{build_model, parse_dialog_spec, Alphabet, GrammarMode};

    fn model() -> ModelBundle {
        let spec = parse_dialog_spec(
            r#"{
              "intents": {
                "greet": ["hello there", "hi"],
                "leave": ["goodbye", "bye now"]
              },
              "lookups": {}
            }"#,
        )
        .unwrap();
        let mut labels: Vec<String> = vec![" ".into()];
        labels.extend(('a'..='z').map(|c| c.to_string()));
        labels.push("-".into());
        let alphabet =
            Alphabet::parse(&serde_json::json!({"labels": labels, "blank": "-"}).to_string())
                .unwrap();
        build_model(&spec, &alphabet, GrammarMode::Fixed).unwrap()
    }

    fn case(line: &str) -> (usize, Result<BenchCase, String>) {
        (1, serde_json::from_str(line).map_err(|e| e.to_string()))
    }

    #[test]
    fn five_case_fixture_scores_by_hand() {
        let model = model();
        let cases = vec![
            case(r#"{"text": "hello there", "intent": "greet", "transcript": "hello there"}"#),
            case(r#"{"text": "hi", "intent": "greet"}"#),
            case(r#"{"text": "goodbye", "intent": "leave"}"#),
            case(r#"{"text": "bye now", "intent": "greet"}"#), // wrong gold: decodes as leave
            case(r#"{"text": "hello there", "intent": "greet"}"#),
        ];
        let report = run_bench(&model, &cases, &DecodeParams::default(), 0, Path::new("."));
        assert_eq!(report.cases, 5);
        assert_eq!(report.correct, 4);
        assert!((report.accuracy - 0.8).abs() < 1e-12);
        assert_eq!(report.wer, Some(0.0));
        assert_eq!(report.wer_cases, 1);
        assert_eq!(report.confusion["greet"]["greet"], 3);
        assert_eq!(report.confusion["greet"]["leave"], 1);
        let total: usize = report.confusion.values().flat_map(|m| m.values()).sum();
        assert_eq!(total, report.cases);
    }

    #[test]
    fn wrong_slot_value_scores_incorrect() {
        let spec = parse_dialog_spec(
            r#"{
              "intents": {"paint": ["paint it [---](color)"]},
              "lookups": {"color": ["red", "blue"]}
            }"#,
        )
        .unwrap();
        let mut labels: Vec<String> = vec![" ".into()];
        labels.extend(('a'..='z').map(|c| c.to_string()));
        labels.push("-".into());
        let alphabet =
            Alphabet::parse(&serde_json::json!({"labels": labels, "blank": "-"}).to_string())
                .unwrap();
        let model = build_model(&spec, &alphabet, GrammarMode::Fixed).unwrap();
        let cases = vec![
            case(r#"{"text": "paint it red", "intent": "paint", "slots": {"color": "red"}}"#),
            case(r#"{"text": "paint it red", "intent": "paint", "slots": {"color": "blue"}}"#),
            case(r#"{"text": "paint it red", "intent": "paint"}"#), // missing gold slot
        ];
        let report = run_bench(&model, &cases, &DecodeParams::default(), 0, Path::new("."));
        assert_eq!(report.correct, 1);
    }

    #[test]
    fn bad_lines_and_missing_files_keep_the_run_going() {
        let model = model();
        let cases = vec![
            case(r#"{"text": "hi", "intent": "greet"}"#),
            case(r#"{"not": "a case"#),
            case(r#"{"logits": "/nonexistent/file.flgt", "intent": "greet"}"#),
        ];
        let report = run_bench(&model, &cases, &DecodeParams::default(), 0, Path::new("."));
        assert_eq!(report.cases, 3);
        assert_eq!(report.correct, 1);
        assert_eq!(report.errors.len(), 2);
    }

    #[test]
    fn gold_labels_outside_the_model_are_case_errors() {
        let model = model();
        let cases = vec![
            case(r#"{"text": "hi", "intent": "order-coffee"}"#),
            case(r#"{"text": "hi", "intent": "greet", "slots": {"size": "large"}}"#),
            case(r#"{"text": "hi", "intent": "greet"}"#),
        ];
        let report = run_bench(&model, &cases, &DecodeParams::default(), 0, Path::new("."));
        assert_eq!(report.correct, 1);
        assert_eq!(report.errors.len(), 2);
        assert!(report.errors[0].error.contains("order-coffee"));
        assert!(report.errors[1].error.contains("size"));
        // every well-formed case lands in a confusion bucket
        let total: usize = report.confusion.values().flat_map(|m| m.values()).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn reports_are_deterministic() {
        let model = model();
        let cases = vec![
            case(r#"{"text": "hello there", "intent": "greet", "transcript": "hello there"}"#),
            case(r#"{"text": "bye now", "intent": "leave", "transcript": "bye now"}"#),
        ];
        let a = run_bench(&model, &cases, &DecodeParams::default(), 42, Path::new("."));
        let b = run_bench(&model, &cases, &DecodeParams::default(), 42, Path::new("."));
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
