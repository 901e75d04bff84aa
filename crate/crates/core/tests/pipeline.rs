use std::path::{Path, PathBuf};
use std::process::Command;

use weaklabel::corpus_io::read_conll;
use weaklabel::pipeline::{
    run_generate, run_stage, ArtifactPaths, PipelineConfig, Stage, StageReport,
};
use weaklabel::Error;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn config(out: &Path) -> PipelineConfig {
    let mut c = PipelineConfig::from_file(&fixtures().join("fixture.conf")).unwrap();
    c.out = Some(out.to_owned());
    c
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_weaklabel"))
}

fn fixture_flags(out: &Path) -> Vec<String> {
    let f = fixtures();
    vec![
        "--corpus".into(),
        f.join("corpus.tsv").display().to_string(),
        "--annotations".into(),
        f.join("annotations.jsonl").display().to_string(),
        "--word-emb".into(),
        f.join("word_emb.jsonl").display().to_string(),
        "--subword-emb".into(),
        f.join("subword_emb.jsonl").display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ]
}

#[test]
fn generate_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("weak.conll");
    let summary = run_generate(&config(&out)).unwrap();
    assert_eq!(
        (
            summary.read,
            summary.zero_entity,
            summary.dropped_uncovered,
            summary.scored,
            summary.kept
        ),
        (12, 2, 0, 10, 4)
    );
    let golden = std::fs::read(fixtures().join("golden.conll")).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), golden);
}

#[test]
fn staged_run_matches_single_shot() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("staged.conll");
    let c = config(&out);
    for stage in [Stage::Align, Stage::Project, Stage::Score] {
        assert!(matches!(
            run_stage(stage, &c).unwrap(),
            StageReport::Artifact { records: 12, .. }
        ));
    }
    let StageReport::Filtered {
        summary, kept_ids, ..
    } = run_stage(Stage::Filter, &c).unwrap()
    else {
        panic!("filter should report a summary");
    };
    assert_eq!(summary.kept, 4);
    assert_eq!(
        std::fs::read_to_string(kept_ids).unwrap().lines().count(),
        4
    );
    let golden = std::fs::read(fixtures().join("golden.conll")).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), golden);
}

#[test]
fn golden_output_parses_back() {
    let sentences = read_conll(&fixtures().join("golden.conll")).unwrap();
    let ids: Vec<u64> = sentences.iter().map(|s| s.id).collect();
    assert_eq!(ids.len(), 4);
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
    assert!(sentences.iter().all(|s| s.sentence_score <= 0.0));
}

#[test]
fn keep_everything() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("all.conll");
    let mut c = config(&out);
    c.keep_fraction = 1.0;
    let summary = run_generate(&c).unwrap();
    assert_eq!(summary.kept, summary.scored);
    assert_eq!(read_conll(&out).unwrap().len(), 10);
}

#[test]
fn later_stage_without_artifact_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("weak.conll");
    let err = run_stage(Stage::Score, &config(&out)).unwrap_err();
    let expected = ArtifactPaths::for_output(&out).projected;
    assert!(
        err.to_string().contains(&expected.display().to_string()),
        "{err}"
    );
    assert!(err.to_string().starts_with("stage=score"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn stale_artifact_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("weak.conll");
    let c = config(&out);
    run_stage(Stage::Align, &c).unwrap();
    let links = ArtifactPaths::for_output(&out).links;
    let text = std::fs::read_to_string(&links).unwrap();
    let truncated: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
    std::fs::write(&links, truncated).unwrap();
    let err = run_stage(Stage::Project, &c).unwrap_err();
    let Error::Stage { source, .. } = &err else {
        panic!("{err}")
    };
    assert!(matches!(**source, Error::StaleArtifact { .. }), "{err}");
}

#[test]
fn missing_embedding_record() {
    let dir = tempfile::tempdir().unwrap();
    let word = dir.path().join("word.jsonl");
    let text = std::fs::read_to_string(fixtures().join("word_emb.jsonl")).unwrap();
    let kept: String = text
        .lines()
        .filter(|l| !l.starts_with(r#"{"id":7,"#))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(&word, kept).unwrap();
    let mut c = config(&dir.path().join("weak.conll"));
    c.word_emb = Some(word);
    let err = run_generate(&c).unwrap_err();
    assert!(
        err.to_string()
            .starts_with("stage=align: missing embeddings for id=7"),
        "{err}"
    );
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn cli_gen_prints_summary_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a.conll", "b.conll"] {
        let out = dir.path().join(name);
        let run = bin().arg("gen").args(fixture_flags(&out)).output().unwrap();
        assert!(
            run.status.success(),
            "{}",
            String::from_utf8_lossy(&run.stderr)
        );
        let stdout = String::from_utf8(run.stdout).unwrap();
        assert!(stdout.contains("sentences read:        12"), "{stdout}");
        assert!(stdout.contains("kept:                  4"), "{stdout}");
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn cli_missing_embeddings_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut flags = fixture_flags(&dir.path().join("weak.conll"));
    let i = flags.iter().position(|f| f == "--word-emb").unwrap();
    flags[i + 1] = dir.path().join("nope.jsonl").display().to_string();
    let run = bin().arg("gen").args(flags).output().unwrap();
    assert_eq!(run.status.code(), Some(2));
    let stderr = String::from_utf8(run.stderr).unwrap();
    assert!(stderr.contains("stage=align"), "{stderr}");
}

#[test]
fn cli_validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let run = bin()
        .arg("gen")
        .args(fixture_flags(&dir.path().join("weak.conll")))
        .args(["--keep-fraction", "1.5"])
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(1));
    let run = bin().arg("frobnicate").output().unwrap();
    assert_eq!(run.status.code(), Some(1));
}

#[test]
fn cli_config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("weak.conll");
    let run = bin()
        .arg("gen")
        .arg("--config")
        .arg(fixtures().join("fixture.conf"))
        .arg("--out")
        .arg(&out)
        .args(["--keep-fraction", "1.0"])
        .output()
        .unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(read_conll(&out).unwrap().len(), 10);
}

#[test]
fn cli_staged_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("weak.conll");
    let run = bin()
        .arg("align")
        .args(fixture_flags(&out))
        .arg("--pharaoh")
        .output()
        .unwrap();
    assert!(run.status.success());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.contains("4\t0-0:"), "{stdout}");
    assert!(stdout.contains("1-1:0.970917:match_fallback"), "{stdout}");
    for stage in ["project", "score", "filter"] {
        let run = bin().arg(stage).args(fixture_flags(&out)).output().unwrap();
        assert!(
            run.status.success(),
            "{stage}: {}",
            String::from_utf8_lossy(&run.stderr)
        );
    }
    let golden = std::fs::read(fixtures().join("golden.conll")).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), golden);
}

#[test]
fn cli_distill_check() {
    let run = bin().arg("distill-check").output().unwrap();
    assert!(
        run.status.success(),
        "{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.contains("max relative error:"), "{stdout}");
}
