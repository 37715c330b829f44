use std::path::Path;

use serde::{Deserialize, Serialize};

use qforge_core::seeds::substream_seed;
use qforge_qec::decoder::MatchedPair;
use qforge_qec::{
    build_layout, deutsch_jozsa_demo, generate_decoder_for_topology, logical_error_rate, true_syndrome, DecodeOutcome, Decoder,
    DecoderConfig, ErrorState, NoiseModel, Pauli, QecError, Syndrome, SyndromeHistory, Topology,
};

use crate::args::QecCommand;
use crate::{emit, svg, write_file, CliError, Context};

fn qec_error(e: QecError) -> CliError {
    match e {
        QecError::TooManyDefects { .. } | QecError::LengthMismatch { .. } => CliError::infra(e.kind(), e),
        _ => CliError::usage(e.kind(), e),
    }
}

/// Parses `X0,Z4,Y8` into (qubit, Pauli) pairs.
pub fn parse_errors(spec: &str, num_qubits: usize) -> Result<Vec<(usize, Pauli)>, CliError> {
    spec.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let bad = || CliError::usage("invalid_args", format!("bad error term `{t}`; expected e.g. X0, Y3 or Z4"));
            let (head, tail) = t.split_at(t.char_indices().nth(1).map_or(t.len(), |(i, _)| i));
            let pauli = match head {
                "X" | "x" => Pauli::X,
                "Y" | "y" => Pauli::Y,
                "Z" | "z" => Pauli::Z,
                _ => return Err(bad()),
            };
            let q: usize = tail.parse().map_err(|_| bad())?;
            if q >= num_qubits {
                return Err(CliError::usage(
                    "invalid_args",
                    format!("qubit {q} out of range; the code has {num_qubits} data qubits"),
                ));
            }
            Ok((q, pauli))
        })
        .collect()
}

fn indices(bits: &[bool]) -> Vec<usize> {
    bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect()
}

#[derive(Serialize)]
struct DecodeReport {
    d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    injected: Option<Vec<String>>,
    rounds: usize,
    x_corrections: Vec<usize>,
    z_corrections: Vec<usize>,
    fallback_used: bool,
    total_weight: u64,
    pairs: Vec<MatchedPair>,
    /// Present for injected errors: whether error times correction is a
    /// logical operator.
    #[serde(skip_serializing_if = "Option::is_none")]
    logical_error: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HistoryFile {
    outcomes: Vec<Syndrome>,
}

#[derive(Serialize)]
#[serde(untagged)]
enum TopologyVerdict {
    Supported {
        supported: bool,
        distance: usize,
        decoder: DecoderConfig,
    },
    Unsupported {
        supported: bool,
        error: ErrorBody,
    },
}

#[derive(Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
}

fn load_topology(path: &Path) -> Result<Topology, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage("io_error", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage("invalid_topology", format!("{}: {e}", path.display())))
}

fn parse_grid(spec: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::usage("invalid_args", format!("grid `{spec}` is not WIDTHxHEIGHT"));
    let (w, h) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?))
}

pub fn run(ctx: &Context, command: QecCommand) -> Result<(), CliError> {
    match command {
        QecCommand::Layout { d, out } => {
            let layout = build_layout(d).map_err(qec_error)?;
            let human = format!(
                "distance {d}: {} data qubits, {} X and {} Z stabilizers\n",
                layout.num_data_qubits(),
                layout.x_stabilizers.len(),
                layout.z_stabilizers.len()
            );
            emit(out.as_deref(), &layout, &human)
        }
        QecCommand::Decode { d, errors, history, out } => {
            let config = DecoderConfig::for_distance(d).map_err(qec_error)?;
            let layout = config.layout.clone();
            let decoder = Decoder::new(config).map_err(qec_error)?;
            let (hist, state, injected) = match (errors, history) {
                (Some(spec), _) => {
                    let terms = parse_errors(&spec, layout.num_data_qubits())?;
                    let mut state = ErrorState::clean(layout.num_data_qubits());
                    for &(q, p) in &terms {
                        state.apply(q, p);
                    }
                    let names = terms.iter().map(|(q, p)| format!("{p:?}{q}")).collect();
                    (SyndromeHistory::single(true_syndrome(&state, &layout)), Some(state), Some(names))
                }
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| CliError::usage("io_error", format!("{}: {e}", path.display())))?;
                    let file: HistoryFile = serde_json::from_str(&text)
                        .map_err(|e| CliError::usage("inconsistent_history", format!("{}: {e}", path.display())))?;
                    (SyndromeHistory::new(file.outcomes).map_err(qec_error)?, None, None)
                }
                (None, None) => return Err(CliError::usage("invalid_args", "decode needs --errors or --history")),
            };
            let DecodeOutcome {
                corrections,
                pairs,
                total_weight,
            } = decoder.decode_detailed(&hist).map_err(qec_error)?;
            let logical_error = state.map(|mut s| {
                s.compose(&corrections.x_corrections, &corrections.z_corrections);
                s.is_logical_error(&layout)
            });
            let report = DecodeReport {
                d,
                injected,
                rounds: hist.rounds(),
                x_corrections: indices(&corrections.x_corrections),
                z_corrections: indices(&corrections.z_corrections),
                fallback_used: corrections.fallback_used,
                total_weight,
                pairs,
                logical_error,
            };
            let mut human = format!(
                "X corrections {:?}, Z corrections {:?}, weight {}\n",
                report.x_corrections, report.z_corrections, report.total_weight
            );
            if let Some(l) = report.logical_error {
                human.push_str(if l { "residual: logical error\n" } else { "residual: corrected\n" });
            }
            emit(out.as_deref(), &report, &human)
        }
        QecCommand::Rate {
            d,
            p,
            q,
            rounds,
            trials,
            out,
        } => {
            let model = NoiseModel::new(p, q.unwrap_or(p)).map_err(qec_error)?;
            let seed = substream_seed(ctx.seed, "qec", "rate");
            let estimate = logical_error_rate(d, model, rounds.unwrap_or(d), trials, seed).map_err(qec_error)?;
            let human = format!(
                "d={} p={} q={} rounds={}: {} / {} failures, rate {:.6} (95% CI {:.6} to {:.6})\n",
                estimate.d,
                estimate.p,
                estimate.q,
                estimate.rounds,
                estimate.failures,
                estimate.trials,
                estimate.logical_error_rate,
                estimate.ci.0,
                estimate.ci.1
            );
            emit(out.as_deref(), &estimate, &human)
        }
        QecCommand::Demo {
            n,
            p_noisy,
            p_corrected,
            shots,
            svg: svg_path,
            out,
        } => {
            let seed = substream_seed(ctx.seed, "qec", "demo");
            let report = deutsch_jozsa_demo(n, p_noisy, p_corrected, shots, seed).map_err(qec_error)?;
            if let Some(path) = &svg_path {
                write_file(path, svg::demo_histograms(&report).as_bytes())?;
            }
            let zeros = "0".repeat(n);
            let human = format!(
                "P({zeros}): ideal {:.4}, noisy (p={}) {:.4}, corrected (p={}) {:.4}\n",
                report.ideal_fraction, report.p_noisy, report.noisy_fraction, report.p_corrected, report.corrected_fraction
            );
            emit(out.as_deref(), &report, &human)
        }
        QecCommand::Topology { file, grid, chain, out } => {
            let topology = match (file, grid, chain) {
                (Some(path), _, _) => load_topology(&path)?,
                (None, Some(spec), _) => {
                    let (w, h) = parse_grid(&spec)?;
                    Topology::grid(w, h)
                }
                (None, None, Some(n)) => Topology::linear_chain(n),
                (None, None, None) => return Err(CliError::usage("invalid_args", "topology needs --file, --grid or --chain")),
            };
            let (verdict, human) = match generate_decoder_for_topology(&topology) {
                Ok(decoder) => {
                    let distance = decoder.layout.distance;
                    (
                        TopologyVerdict::Supported {
                            supported: true,
                            distance,
                            decoder,
                        },
                        format!("supported: distance {distance}\n"),
                    )
                }
                Err(e @ QecError::TopologyUnsupported(_)) => (
                    TopologyVerdict::Unsupported {
                        supported: false,
                        error: ErrorBody {
                            kind: e.kind(),
                            message: e.to_string(),
                        },
                    },
                    format!("unsupported: {e}\n"),
                ),
                Err(e) => return Err(qec_error(e)),
            };
            emit(out.as_deref(), &verdict, &human)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_error_terms() {
        assert_eq!(parse_errors("X0, z4,Y8", 9).unwrap(), vec![(0, Pauli::X), (4, Pauli::Z), (8, Pauli::Y)]);
        assert!(parse_errors("X9", 9).is_err());
        assert!(parse_errors("W1", 9).is_err());
        assert!(parse_errors("X", 9).is_err());
        assert!(parse_errors("", 9).unwrap().is_empty());
    }

    #[test]
    fn parses_grid_specs() {
        assert_eq!(parse_grid("7x7").unwrap(), (7, 7));
        assert_eq!(parse_grid("3X5").unwrap(), (3, 5));
        assert!(parse_grid("7").is_err());
    }
}
