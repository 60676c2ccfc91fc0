use std::process::Command;

fn fraclap(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fraclap")).args(args).output().unwrap()
}

fn stdout(o: &std::process::Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn constants_json_keys() {
    let o = fraclap(&["constants", "--dim", "1", "--s", "0.5", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    for k in ["c_frac", "c_log", "rho", "omega", "kappa_riesz", "kappa_form"] {
        assert!(keys.contains(&k), "{k}");
    }
    assert!((v["c_frac"].as_f64().unwrap() - 1.0 / std::f64::consts::PI).abs() < 1e-15);
    assert!(v["kappa_riesz"].is_null());
}

#[test]
fn opeval_prints_value_and_error() {
    for op in ["frac", "log", "symbol"] {
        let o = fraclap(&["opeval", "--op", op, "--s", "0.25", "--at", "0.1", "--tol", "1e-8", "--bump", "polynomial-c2"]);
        assert!(o.status.success(), "{op}");
        let out = stdout(&o);
        assert!(out.contains("value ") && out.contains("est_error "), "{out}");
    }
    let bad = fraclap(&["opeval", "--op", "frac", "--s", "0", "--at", "0"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn forms_checks_emit_csv() {
    let dir = tempfile::tempdir().unwrap();
    for check in ["delta-split", "lemma23", "lemma22"] {
        let path = dir.path().join(format!("{check}.csv"));
        let o = fraclap(&["forms", "--check", check, "--seed", "3", "--out", path.to_str().unwrap()]);
        assert!(o.status.success(), "{check}");
        let csv = std::fs::read_to_string(&path).unwrap();
        assert!(csv.starts_with("case,s,delta,slack\n"));
        assert!(csv.lines().count() > 1);
    }
}

#[test]
fn assemble_then_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.bin");
    let m = dir.path().join("m.bin");
    let dom = r#"{"kind":"interval","a":-1,"b":1}"#;
    let oa = fraclap(&["assemble", "--domain", dom, "--kind", "frac", "--s", "0.5", "--n", "64", "--out", a.to_str().unwrap()]);
    let om = fraclap(&["assemble", "--domain", dom, "--kind", "mass", "--n", "64", "--out", m.to_str().unwrap()]);
    assert!(oa.status.success() && om.status.success());
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(&bytes[..4], b"NLFM");
    let o = fraclap(&["spectrum", "--A", a.to_str().unwrap(), "--M", m.to_str().unwrap(), "-k", "3", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let ev = v["eigenvalues"].as_array().unwrap();
    assert_eq!(ev.len(), 3);
    assert_eq!(v["residuals"].as_array().unwrap().len(), 3);
    // Galerkin upper bound over the known value λ₁ ≈ 1.1577738 for s = 1/2
    let l1 = ev[0].as_f64().unwrap();
    assert!(l1 > 1.1577 && l1 < 1.17, "{l1}");
}

#[test]
fn sweep_writes_outputs_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"domain":{"kind":"interval","a":-1,"b":1},"n":96,"s_grid":[0.1,0.05,0.025,0.0125],"k":3,"quad_tol":1e-10,"seed":1}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = fraclap(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let heads = [
        ("eigenvalues.csv", "s,k,lambda,diffquot"),
        ("logeigs.csv", "k,lambda_L"),
        ("slopes.csv", "k,slope,residual,lambda_L,relerr"),
        ("diagnostics.csv", "s,k,supnorm,decaystat,osc_r1,osc_r2,osc_r3,kernelstat"),
    ];
    for (f, h) in heads {
        let text = std::fs::read_to_string(out.join(f)).unwrap();
        assert_eq!(text.lines().next(), Some(h), "{f}");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(true));

    std::fs::write(&cfg, r#"{"domain":{"kind":"interval","a":-1,"b":1},"n":32,"s_grid":[0.05,0.1]}"#).unwrap();
    let bad = fraclap(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}
