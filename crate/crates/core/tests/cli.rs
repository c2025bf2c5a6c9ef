use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use graph_diffusion_cf::commands::{
    cmd_build_homo, cmd_eval, cmd_train, BEST_CHECKPOINT, EDGE_LIST_FILE, FINAL_CHECKPOINT, HISTOGRAM_FILE, HISTORY_FILE,
};
use graph_diffusion_cf::{Checkpoint, DenseMatrix, EmbeddingTable};

fn write(path: &Path, text: &str) -> PathBuf {
    fs::write(path, text).unwrap();
    path.to_path_buf()
}

/// Three users, four items; every pair of items is co-consumed by someone.
fn toy_corpus(dir: &Path) {
    write(&dir.join("train.txt"), "0 0\n0 1\n0 2\n1 1\n1 2\n1 3\n2 0\n2 3\n");
    write(&dir.join("test.txt"), "0 3\n1 0\n");
}

fn toy_config(dir: &Path, extra: &str) -> PathBuf {
    toy_corpus(dir);
    write(
        &dir.join("run.toml"),
        &format!(
            "[dataset]\ntrain_path = \"train.txt\"\ntest_path = \"test.txt\"\n[loss]\nn_neg = 2\n[train]\nepochs = 1\nbatch_size = 4\nembedding_dim = 4\n{extra}"
        ),
    )
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gdcf"))
}

#[test]
fn one_epoch_writes_checkpoints_and_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "");
    let out = dir.path().join("out");
    let summary = cmd_train(&cfg, &out).unwrap();
    assert!(out.join(BEST_CHECKPOINT).exists());
    assert!(out.join(FINAL_CHECKPOINT).exists());
    let history = fs::read_to_string(out.join(HISTORY_FILE)).unwrap();
    assert_eq!(history.lines().count(), 1);
    let rec: serde_json::Value = serde_json::from_str(history.lines().next().unwrap()).unwrap();
    for key in ["epoch", "mode", "loss", "recall", "ndcg", "cutoff"] {
        assert!(rec.get(key).is_some(), "missing {key} in {rec}");
    }
    assert_eq!(summary.best_epoch, Some(1));
    let ck = Checkpoint::load(&out.join(FINAL_CHECKPOINT)).unwrap();
    assert_eq!(ck.table.num_rows(), 7);
    assert_eq!(ck.table.dim(), 4);
    assert!(ck.config_echo.contains("[train]"));
}

#[test]
fn rerun_gives_identical_history_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    cmd_train(&cfg, &a).unwrap();
    cmd_train(&cfg, &b).unwrap();
    for f in [HISTORY_FILE, BEST_CHECKPOINT, FINAL_CHECKPOINT] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

fn perfect_checkpoint(dir: &Path) -> (PathBuf, PathBuf) {
    // user 0 trained on item 0 and held out item 2; user 1 trained on item 1
    // and held out item 2
    write(&dir.join("train.txt"), "0 0\n1 1\n");
    write(&dir.join("test.txt"), "0 2\n1 2\n");
    let cfg = write(
        &dir.join("mf.toml"),
        "[dataset]\ntrain_path = \"train.txt\"\ntest_path = \"test.txt\"\n[train]\nmode = \"mf\"\n",
    );
    let x = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0], [1.0, 1.0]]);
    let ck = dir.join("perfect.ckpt");
    Checkpoint { table: EmbeddingTable { x }, seed: 0, config_echo: String::new() }.save(&ck).unwrap();
    (ck, cfg)
}

#[test]
fn perfect_checkpoint_scores_full_recall() {
    let dir = tempfile::tempdir().unwrap();
    let (ck, cfg) = perfect_checkpoint(dir.path());
    let report = cmd_eval(&ck, &cfg, None).unwrap();
    assert_eq!(report.cutoff, 20);
    assert_eq!(report.recall, 1.0);
    assert_eq!(report.ndcg, 1.0);
    assert_eq!(report.num_users, 2);
    let narrow = cmd_eval(&ck, &cfg, Some(1)).unwrap();
    assert_eq!(narrow.cutoff, 1);
    assert_eq!(narrow.recall, 1.0);
}

#[test]
fn eval_output_is_the_documented_json() {
    let dir = tempfile::tempdir().unwrap();
    let (ck, cfg) = perfect_checkpoint(dir.path());
    let out = bin().arg("eval").arg(&ck).arg(&cfg).args(["--cutoff", "5"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["cutoff"], 5);
    assert_eq!(v["recall"], 1.0);
    assert!(v["ndcg"].is_f64());
    assert_eq!(v["num_users"], 2);
}

#[test]
fn eval_rejects_mismatched_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let (_, cfg) = perfect_checkpoint(dir.path());
    let ck = dir.path().join("small.ckpt");
    Checkpoint { table: EmbeddingTable::init(3, 2, 1), seed: 1, config_echo: String::new() }.save(&ck).unwrap();
    assert!(cmd_eval(&ck, &cfg, None).is_err());
    let out = bin().arg("eval").arg(&ck).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("rows"));
}

#[test]
fn build_homo_at_zero_keeps_every_pair_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "[homo]\ns_percent = 0.0\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let summary = cmd_build_homo(&cfg, &a).unwrap();
    cmd_build_homo(&cfg, &b).unwrap();
    assert_eq!(summary.kept_pairs, 6);
    assert_eq!(summary.candidate_pairs, 6);
    let edges = fs::read_to_string(a.join(EDGE_LIST_FILE)).unwrap();
    assert_eq!(edges, "0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n");
    for f in [EDGE_LIST_FILE, HISTOGRAM_FILE] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let hist = fs::read_to_string(a.join(HISTOGRAM_FILE)).unwrap();
    assert!(hist.starts_with("# threshold "));
}

#[test]
fn build_homo_reports_degenerate_sparsification() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "[homo]\ns_percent = 99.9\n");
    let out = bin().arg("build-homo").arg(&cfg).arg("--out").arg(dir.path().join("h")).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["degenerate"], true);
    assert_eq!(v["kept_pairs"], 0);
}

#[test]
fn verify_exit_status_follows_the_report() {
    let ok = bin().args(["verify", "--instances", "5"]).output().unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    let text = String::from_utf8_lossy(&ok.stdout);
    for name in ["closed_form", "dis_optimality", "specializations", "inverse_roundtrip", "sparsification"] {
        assert!(text.contains(name), "{name} missing");
    }

    let one = bin().args(["verify", "--check", "closed_form", "--instances", "5"]).output().unwrap();
    assert!(one.status.success());
    let text = String::from_utf8_lossy(&one.stdout);
    assert!(text.lines().any(|l| l.starts_with("closed_form") && l.contains("PASS")));
    assert!(!text.contains("sparsification"));

    let injected = bin().args(["verify", "--check", "closed_form", "--tolerance", "0"]).output().unwrap();
    assert!(!injected.status.success());
    assert!(String::from_utf8_lossy(&injected.stdout).contains("FAIL"));
}

#[test]
fn print_config_round_trips_and_bad_configs_fail() {
    let out = bin().arg("print-config").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    graph_diffusion_cf::RunConfig::from_toml_str(&text).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let bad = toy_config(dir.path(), "learning_rate = 0.1\n");
    let run = bin().arg("train").arg(&bad).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("learning_rate"));
}

#[test]
fn train_subcommand_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = toy_config(dir.path(), "");
    let out = dir.path().join("run");
    let res = bin().arg("train").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join(HISTORY_FILE).exists());
    assert!(out.join(BEST_CHECKPOINT).exists());
}
