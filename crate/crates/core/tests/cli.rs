use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radar-gesture")).args(args).output().unwrap()
}

#[test]
fn domain_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ds");
    let o = run(&["synth", "--per-class", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["synth", "--distances", "0.01", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["synth", "--dims", "64by64", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    // unparsable flags are rejected by the argument parser with the same code
    let o = run(&["synth", "--tf", "wavelet", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing-here");
    let o = run(&["train", "--data", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn synth_inspect_train_eval() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("ds");
    let runs = dir.path().join("run");
    let maps = dir.path().join("maps");
    let (d, r, m) = (data.to_str().unwrap(), runs.to_str().unwrap(), maps.to_str().unwrap());
    assert!(run(&["synth", "--per-class", "5", "--dims", "20x20", "--seed", "3", "--out", d]).status.success());
    let o = run(&["inspect", "--data", d, "--indices", "0,7", "--out", m]);
    assert!(o.status.success());
    for name in ["sample00000_rx1.pgm", "sample00000_rx2.pgm", "sample00007_rx1.pgm", "sample00007_rx2.pgm"] {
        let bytes = std::fs::read(maps.join(name)).unwrap();
        assert!(bytes.starts_with(b"P5\n20 20\n255\n"));
        assert_eq!(bytes.len(), "P5\n20 20\n255\n".len() + 400);
    }
    let o = run(&["train", "--data", d, "--epochs", "2", "--out", r]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = std::fs::read_to_string(runs.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("epoch,lr,train_loss,train_acc,test_loss,test_acc\n"));
    let ckpt = runs.join("model.gmc");
    let o = run(&["eval", "--data", d, "--checkpoint", ckpt.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("test samples 4 accuracy"));
    assert!(text.contains("true,pred_0,pred_1,pred_2,pred_3"));
}

#[test]
fn eval_rejects_mismatched_model() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let runs = dir.path().join("run");
    assert!(run(&["synth", "--per-class", "3", "--dims", "16x16", "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["synth", "--per-class", "3", "--dims", "20x20", "--out", b.to_str().unwrap()]).status.success());
    let o = run(&["train", "--data", a.to_str().unwrap(), "--epochs", "1", "--out", runs.to_str().unwrap()]);
    assert!(o.status.success());
    let ckpt = runs.join("model.gmc");
    let o = run(&["eval", "--data", b.to_str().unwrap(), "--checkpoint", ckpt.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
