use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use weaklabel::pipeline::{
    pharaoh_lines, read_jsonl, run_generate, run_stage, LinkRecord, PipelineConfig, Stage,
    StageReport,
};
use weaklabel::Result;

#[derive(Parser)]
#[command(
    version,
    about = "Generate weakly labeled NER data by annotation projection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline and write the weak CoNLL file
    Gen(Common),
    /// Align sentence pairs and write the links artifact
    Align {
        #[command(flatten)]
        common: Common,
        /// Also print links as `id<TAB>src-tgt:score:method ...` lines
        #[arg(long)]
        pharaoh: bool,
    },
    /// Project source entities onto target words
    Project(Common),
    /// Score projected sentences
    Score(Common),
    /// Keep the top fraction and write the weak CoNLL file
    Filter(Common),
    /// Verify the distillation loss gradient against finite differences
    DistillCheck(Common),
}

#[derive(Args)]
struct Common {
    /// key = value config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parallel corpus, `id<TAB>src tokens<TAB>tgt tokens`
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Source entity spans, JSON lines
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Word-level embeddings, JSON lines
    #[arg(long)]
    word_emb: Option<PathBuf>,
    /// Subword-level embeddings with word maps, JSON lines
    #[arg(long)]
    subword_emb: Option<PathBuf>,
    /// Output CoNLL path; stage artifacts are written next to it
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fraction of scored sentences to keep [default: 0.4]
    #[arg(long)]
    keep_fraction: Option<f64>,
    /// Keep sentences whose entity words are not all aligned
    #[arg(long)]
    no_drop_uncovered: bool,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        let paths = [
            (&self.corpus, &mut config.corpus),
            (&self.annotations, &mut config.annotations),
            (&self.word_emb, &mut config.word_emb),
            (&self.subword_emb, &mut config.subword_emb),
            (&self.out, &mut config.out),
        ];
        for (flag, slot) in paths {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        if let Some(f) = self.keep_fraction {
            config.keep_fraction = f;
        }
        if self.no_drop_uncovered {
            config.drop_uncovered = false;
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(command: Command) -> Result<()> {
    let (stage, common, pharaoh) = match command {
        Command::Gen(common) => {
            let summary = run_generate(&common.config()?)?;
            println!("{summary}");
            return Ok(());
        }
        Command::Align { common, pharaoh } => (Stage::Align, common, pharaoh),
        Command::Project(common) => (Stage::Project, common, false),
        Command::Score(common) => (Stage::Score, common, false),
        Command::Filter(common) => (Stage::Filter, common, false),
        Command::DistillCheck(common) => (Stage::DistillCheck, common, false),
    };
    let config = common.config()?;
    let report = run_stage(stage, &config)?;
    if pharaoh {
        if let StageReport::Artifact { path, .. } = &report {
            let records: Vec<LinkRecord> = read_jsonl(path)?;
            print!("{}", pharaoh_lines(&records));
        }
    }
    println!("{report}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
