//! Write a synthetic transcript file, matching forward returns and a small
//! mock-backed `run.toml` into a directory.
//!
//! ```text
//! cargo run -p earnings-distill-cli --example synth -- demo/
//! cargo run -p earnings-distill-cli --bin edistill -- --config demo/run.toml ingest
//! ```

use std::path::PathBuf;

use clap::Parser;
use earnings_distill::analytics::write_returns_csv;
use earnings_distill::synthetic::{returns, transcripts, CorpusSpec};
use earnings_distill::Corpus;

#[derive(Parser)]
struct Args {
    dir: PathBuf,
    #[arg(long, default_value_t = 24)]
    companies: usize,
    #[arg(long, default_value_t = 12)]
    months: usize,
    #[arg(long, default_value_t = 30)]
    sentences: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Strength of the tone-to-return link.
    #[arg(long, default_value_t = 0.02)]
    signal: f64,
}

pub const RUN_TOML: &str = include_str!("synth_run.toml");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = Args::parse();
    let spec = CorpusSpec {
        companies: a.companies,
        months: a.months,
        sentences_per_call: a.sentences,
        seed: a.seed,
        ..CorpusSpec::default()
    };
    std::fs::create_dir_all(&a.dir)?;
    let corpus = Corpus::new(transcripts(&spec))?;
    std::fs::write(a.dir.join("transcripts.jsonl"), corpus.to_jsonl()?)?;
    let file = std::fs::File::create(a.dir.join("returns.csv"))?;
    write_returns_csv(&returns(&spec, a.signal), file)?;
    let config = a.dir.join("run.toml");
    if !config.exists() {
        std::fs::write(&config, RUN_TOML)?;
    }
    let c = corpus.counts();
    println!("{} calls, {} sentences in {}", c.documents, c.sentences, a.dir.display());
    Ok(())
}
