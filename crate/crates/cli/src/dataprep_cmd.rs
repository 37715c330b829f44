use chrono::NaiveDate;
use regex::Regex;
use serde::Serialize;

use qforge_core::dataprep::{
    chunk_corpus, default_import_regex, filter_corpus, fim_transform, load_corpus_dir, read_jsonl, total_tokens, upsample,
    write_jsonl, CorpusFile, DataprepError, FimSentinels, NotebookSentinels, TrainChunk,
};
use qforge_core::seeds::substream;

use crate::args::DataprepCommand;
use crate::{CliError, Context};

fn dataprep_error(e: DataprepError) -> CliError {
    match e {
        DataprepError::InvalidArgs(_) | DataprepError::InvalidTarget(_) | DataprepError::Pattern(_) => CliError::usage(e.kind(), e),
        _ => CliError::infra(e.kind(), e),
    }
}

#[derive(Serialize)]
struct Summary {
    input_items: usize,
    output_items: usize,
    input_tokens: usize,
    output_tokens: usize,
}

fn print_summary(step: &str, s: &Summary) -> Result<(), CliError> {
    let json = serde_json::to_string(s).map_err(|e| CliError::infra("serialize", e))?;
    log::info!("{step}: {json}");
    println!(
        "{step}: {} -> {} items, {} -> {} tokens",
        s.input_items, s.output_items, s.input_tokens, s.output_tokens
    );
    Ok(())
}

fn file_tokens(files: &[CorpusFile]) -> usize {
    files.iter().map(|f| qforge_core::dataprep::token_count(&f.full_text())).sum()
}

pub fn run(ctx: &Context, command: DataprepCommand) -> Result<(), CliError> {
    match command {
        DataprepCommand::Filter { corpus, cutoff, pattern, out } => {
            let cutoff = NaiveDate::parse_from_str(&cutoff, "%Y-%m-%d")
                .map_err(|e| CliError::usage("invalid_args", format!("cutoff `{cutoff}`: {e}")))?;
            let pattern = match pattern {
                Some(p) => Regex::new(&p).map_err(|e| dataprep_error(e.into()))?,
                None => default_import_regex(),
            };
            let files = load_corpus_dir(&corpus).map_err(dataprep_error)?;
            let kept = filter_corpus(&files, cutoff, &pattern);
            write_jsonl(&out, &kept).map_err(dataprep_error)?;
            print_summary(
                "filter",
                &Summary {
                    input_items: files.len(),
                    output_items: kept.len(),
                    input_tokens: file_tokens(&files),
                    output_tokens: file_tokens(&kept),
                },
            )
        }
        DataprepCommand::Split {
            input,
            corpus,
            chunk_words,
            out,
        } => {
            let files: Vec<CorpusFile> = match (input, corpus) {
                (Some(path), _) => read_jsonl(&path).map_err(dataprep_error)?,
                (None, Some(dir)) => load_corpus_dir(&dir).map_err(dataprep_error)?,
                (None, None) => return Err(CliError::usage("invalid_args", "split needs --input or --corpus")),
            };
            let chunks = chunk_corpus(&files, &NotebookSentinels::default(), chunk_words).map_err(dataprep_error)?;
            write_jsonl(&out, &chunks).map_err(dataprep_error)?;
            print_summary(
                "split",
                &Summary {
                    input_items: files.len(),
                    output_items: chunks.len(),
                    input_tokens: file_tokens(&files),
                    output_tokens: total_tokens(&chunks),
                },
            )
        }
        DataprepCommand::Fim { input, rate, out } => {
            if !(0.0..=1.0).contains(&rate) {
                return Err(CliError::usage("invalid_args", format!("rate must lie in [0, 1], got {rate}")));
            }
            let chunks: Vec<TrainChunk> = read_jsonl(&input).map_err(dataprep_error)?;
            let mut rng = substream(ctx.seed, "dataprep", "fim");
            let sentinels = FimSentinels::default();
            let rewritten: Vec<TrainChunk> = chunks.iter().map(|c| fim_transform(c, &mut rng, rate, &sentinels)).collect();
            write_jsonl(&out, &rewritten).map_err(dataprep_error)?;
            let applied = rewritten.iter().filter(|c| c.fim_applied).count();
            println!("fim: rewrote {applied} of {} chunks", rewritten.len());
            Ok(())
        }
        DataprepCommand::Upsample {
            input,
            target,
            official_weight,
            out,
        } => {
            let chunks: Vec<TrainChunk> = read_jsonl(&input).map_err(dataprep_error)?;
            let mut rng = substream(ctx.seed, "dataprep", "upsample");
            let grown = upsample(&chunks, official_weight, target, &mut rng).map_err(dataprep_error)?;
            write_jsonl(&out, &grown).map_err(dataprep_error)?;
            print_summary(
                "upsample",
                &Summary {
                    input_items: chunks.len(),
                    output_items: grown.len(),
                    input_tokens: total_tokens(&chunks),
                    output_tokens: total_tokens(&grown),
                },
            )
        }
    }
}
