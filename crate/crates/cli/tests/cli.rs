use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mechrxn"));
    c.env_remove("MECHRXN_MODEL_DIR");
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn schema(name: &str) -> serde_json::Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn assert_valid(schema_name: &str, value: &serde_json::Value) {
    let s = schema(schema_name);
    let compiled = jsonschema::JSONSchema::compile(&s).unwrap();
    let msgs: Vec<String> = match compiled.validate(value) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{e} at {}", e.instance_path)).collect(),
    };
    panic!("{schema_name}: {msgs:?}\n{value:#}");
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    (
        status.code().unwrap_or(-1),
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

fn json(stdout: &str) -> serde_json::Value {
    serde_json::from_str(stdout).unwrap_or_else(|e| panic!("{e}: {stdout}"))
}

/// Models trained once on the SN2 fixture, shared by the tests that need them.
fn models() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap().keep();
        let (code, _, err) = run(bin().args(["train", "--seed", "3", "--data"]).arg(fixture("sn2_train.steps")).arg("--out").arg(&dir));
        assert_eq!(code, 0, "{err}");
        dir
    })
}

#[test]
fn invalid_smiles_exits_one() {
    let (code, _, err) = run(bin().args(["predict", "C(C", "--mode", "hybrid", "--adapter", "builtin:echo"]));
    assert_eq!(code, 1);
    assert!(err.contains("invalid reactants 'C(C'"), "{err}");
}

#[test]
fn missing_models_is_a_config_error() {
    let (code, _, err) = run(bin().args(["predict", "CBr.[OH-]"]));
    assert_eq!(code, 1);
    assert!(err.contains("MECHRXN_MODEL_DIR"), "{err}");
}

#[test]
fn echo_adapter_k1_gives_one_candidate() {
    let (code, out, _) = run(bin().args(["predict", "CBr.[OH-]", "-k", "1", "--mode", "hybrid", "--adapter", "builtin:echo", "--json"]));
    assert_eq!(code, 0);
    let v = json(&out);
    assert_valid("predict-output.schema.json", &v);
    assert_eq!(v["candidates"].as_array().unwrap().len(), 1);
}

#[test]
fn process_echo_adapter_matches_in_process_echo() {
    let exe = env!("CARGO_BIN_EXE_mechrxn");
    let external = format!("{exe} serve-echo");
    let args = |adapter: &str| -> String {
        let (code, out, err) = run(bin().args(["predict", "CBr.[OH-]", "-k", "3", "--mode", "hybrid", "--adapter", adapter, "--json"]));
        assert_eq!(code, 0, "{err}");
        out
    };
    assert_eq!(args(&external), args("builtin:echo"));
}

#[test]
fn serve_echo_survives_fuzzed_requests() {
    use rand::{Rng, SeedableRng};
    use std::io::{BufRead, BufReader, Write};
    let mut child = bin()
        .arg("serve-echo")
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    let hello = json(&lines.next().unwrap().unwrap());
    assert_valid("adapter-hello.schema.json", &hello);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    let reactants = ["CBr.[OH-]", "CC(=O)O.[OH-]", "c1ccccc1", "[Na+].[Cl-]", "C(C", ""];
    let mut sent = Vec::new();
    for i in 0..1000u64 {
        let id = rng.gen_range(0..u64::MAX / 2) * 2 + i % 2;
        let (line, expect) = match rng.gen_range(0..10) {
            0 => (format!("{{\"id\": {id}, \"reactants\": 5, \"top_k\": 1}}"), Some(id)),
            1 => (format!("{{\"id\": \"{id}\"}}"), None),
            2 => ("garbage ]".to_string(), None),
            _ => {
                let req = serde_json::json!({
                    "id": id,
                    "reactants": reactants[rng.gen_range(0..reactants.len())],
                    "top_k": rng.gen_range(0..5),
                });
                assert_valid("adapter-request.schema.json", &req);
                (req.to_string(), Some(id))
            }
        };
        sent.push((line, expect));
    }
    let lines_out: Vec<String> = sent.iter().map(|(l, _)| l.clone()).collect();
    // written from another thread so a full pipe cannot stall either side
    let writer = std::thread::spawn(move || {
        for l in lines_out {
            writeln!(stdin, "{l}").unwrap();
        }
    });
    for (line, expect) in &sent {
        let resp = json(&lines.next().unwrap().unwrap());
        assert_valid("adapter-response.schema.json", &resp);
        match expect {
            Some(id) => assert_eq!(resp["id"], *id, "{line}"),
            None => assert!(resp["id"].is_null(), "{line}"),
        }
        if let Some(c) = resp["candidates"].as_array() {
            let req: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(c.len() <= req["top_k"].as_u64().unwrap() as usize);
        }
    }
    writer.join().unwrap();
    assert!(child.wait().unwrap().success());
}

#[test]
fn twostep_predicts_sn2_on_top() {
    let (code, out, err) = run(bin()
        .env("MECHRXN_MODEL_DIR", models())
        .args(["predict", "CCCBr.[OH-]", "-k", "5", "--json"]));
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert_valid("predict-output.schema.json", &v);
    let top = &v["candidates"][0];
    let products = mechrxn::chem::parse_smiles(top["products"].as_str().unwrap()).unwrap();
    assert_eq!(mechrxn::chem::canonical_smiles(&products), mechrxn::chem::canonical_smiles(&mechrxn::chem::parse_smiles("CCCO.[Br-]").unwrap()));
    assert!(top["arrow"].as_str().unwrap().starts_with("LP:"), "{top}");
    assert!(top["record"].as_str().unwrap().contains("role=twostep score="));
}

#[test]
fn train_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let train = |out: &Path| {
        let (code, _, err) = run(bin()
            .args(["train", "--seed", "5", "--epochs", "2", "--data"])
            .arg(fixture("sn2_train.steps"))
            .arg("--out")
            .arg(out));
        assert_eq!(code, 0, "{err}");
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    train(&a);
    train(&b);
    for f in ["source.mlp", "sink.mlp", "ranker.mlp"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m = json(&std::fs::read_to_string(a.join("manifest.json")).unwrap());
    assert_valid("run-manifest.schema.json", &m);
    assert_eq!(m["seed"], 5);
}

#[test]
fn ptgen_writes_shards_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("pt");
    let (code, stdout, err) = run(bin()
        .args(["ptgen", "--shard-size", "10", "--jobs", "2", "--json", "--acids"])
        .arg(fixture("acids10.csv"))
        .arg("--bases")
        .arg(fixture("bases10.csv"))
        .arg("--out")
        .arg(&out));
    assert_eq!(code, 0, "{err}");
    let summary = json(&stdout);
    assert_eq!(summary["pairs"], 100);
    let m = json(&std::fs::read_to_string(out.join("manifest.json")).unwrap());
    assert_valid("ptgen-manifest.schema.json", &m);
    assert_valid("run-manifest.schema.json", &m["run"]);
    let mut lines = 0;
    for s in m["shards"].as_array().unwrap() {
        let text = std::fs::read_to_string(out.join(s["file"].as_str().unwrap())).unwrap();
        assert_eq!(text.lines().count() as u64, s["records"].as_u64().unwrap());
        lines += text.lines().count();
        assert!(text.lines().all(|l| l.contains("role=combinatorial k=") && l.contains(" model=eigen")));
    }
    assert_eq!(lines as u64, m["total"].as_u64().unwrap());
    assert_eq!(summary["written"], m["total"]);
}

#[test]
fn pathway_finds_planted_chain_and_selects() {
    let table = fixture("snar_table.steps");
    let reactants = "[OH-].[O-][N+](=O)c1ccc(Cl)cc1";
    let target = "[O-][N+](=O)c1ccc(O)cc1";
    let go = |selection: &str| {
        let (code, out, err) = run(bin()
            .args(["pathway", reactants, "--target", target, "--predictor", "table", "--json", "--selection", selection, "--table"])
            .arg(&table));
        assert_eq!(code, 0, "{err}");
        let v = json(&out);
        assert_valid("pathway-report.schema.json", &v);
        let i = v["selected"].as_u64().unwrap() as usize;
        v["result"]["pathways"][i].clone()
    };
    let first = go("first_found");
    assert_eq!(first["depth"], 1);
    assert_eq!(first["min_step_score"], 0.08);
    let best = go("max_min_step");
    assert_eq!(best["depth"], 2);
    assert_eq!(best["min_step_score"], 1.198);
    let (code, out, _) = run(bin()
        .args(["pathway", reactants, "--target", target, "--predictor", "table", "--selection", "max_min_step", "--table"])
        .arg(&table));
    assert_eq!(code, 0);
    assert!(out.contains("LP:1>PS:2-3") && out.contains("LP:3>SS:2-4") && out.contains("selected: pathway 2"), "{out}");
}

#[test]
fn pathway_unreachable_exits_two() {
    let (code, out, _) = run(bin()
        .args(["pathway", "[OH-].[O-][N+](=O)c1ccc(Cl)cc1", "--target", "formula:C99", "--predictor", "table", "--table"])
        .arg(fixture("snar_table.steps")));
    assert_eq!(code, 2);
    assert!(out.contains("0 pathway(s)"));
}

#[test]
fn pathway_time_budget_stops_a_slow_search() {
    // an adapter that answers each request after 0.4 s with one more carbon
    let script = r#"echo '{"hello":{"name":"slow","version":"0"}}'; i=0; p=C; while read l; do sleep 0.4; p="${p}C"; echo "{\"id\":$i,\"candidates\":[{\"products\":\"$p\",\"log_likelihood\":-0.1}]}"; i=$((i+1)); done"#;
    let dir = tempfile::tempdir().unwrap();
    let sh = dir.path().join("slow.sh");
    std::fs::write(&sh, script).unwrap();
    let adapter = format!("sh {}", sh.display());
    let (code, out, err) = run(bin().args([
        "pathway", "C", "--target", "formula:C50H102", "--predictor", "adapter-only", "--adapter", &adapter, "--time-budget", "1s", "--json",
    ]));
    assert_eq!(code, 2, "{err}");
    let v = json(&out);
    assert_eq!(v["result"]["stop"]["reason"], "budget");
    let expanded = v["result"]["expanded"].as_u64().unwrap();
    assert!((1..=4).contains(&expanded), "{expanded}");
}

#[test]
fn eval_topn_oracle_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let refs = fixture("sn2_train.steps");
    let preds = dir.path().join("p.ndjson");
    let mut text = String::new();
    for line in std::fs::read_to_string(&refs).unwrap().lines() {
        let products = line.split('|').next().unwrap().split(">>").nth(1).unwrap().trim();
        text += &serde_json::json!({"candidates": ["O", products]}).to_string();
        text.push('\n');
    }
    std::fs::write(&preds, text).unwrap();
    let manifest = dir.path().join("m.json");
    let (code, out, err) = run(bin()
        .args(["eval", "topn", "--json", "--references"])
        .arg(&refs)
        .arg("--predictions")
        .arg(&preds)
        .arg("--manifest")
        .arg(&manifest));
    assert_eq!(code, 0, "{err}");
    let v = json(&out);
    assert_valid("accuracy-table.schema.json", &v);
    assert_eq!(v["percent"], serde_json::json!([0.0, 100.0, 100.0, 100.0]));
    assert_valid("run-manifest.schema.json", &json(&std::fs::read_to_string(manifest).unwrap()));
}

#[test]
fn eval_benchmark_with_journal() {
    let dir = tempfile::tempdir().unwrap();
    let bench = dir.path().join("b.txt");
    std::fs::write(
        &bench,
        "[OH-].[O-][N+](=O)c1ccc(Cl)cc1 | [O-][N+](=O)c1ccc(O)cc1 | 2\nbad line\n[OH-].[O-][N+](=O)c1ccc(Cl)cc1 | formula:C99 | 3\n",
    )
    .unwrap();
    let journal = dir.path().join("j.ndjson");
    let go = || {
        run(bin()
            .args(["eval", "benchmark", "--json", "--predictor", "table", "--table"])
            .arg(fixture("snar_table.steps"))
            .arg("--journal")
            .arg(&journal)
            .arg(&bench))
    };
    let (code, out, err) = go();
    assert_eq!(code, 0, "{err}");
    assert!(err.contains(":2:"), "{err}");
    let v = json(&out);
    assert_valid("benchmark-report.schema.json", &v);
    assert_eq!((v["recovered"].as_u64(), v["total"].as_u64()), (Some(1), Some(2)));
    let (_, again, _) = go();
    assert_eq!(json(&again)["rows"], v["rows"]);
    assert_eq!(std::fs::read_to_string(&journal).unwrap().lines().count(), 2);
}

#[test]
fn stats_csv() {
    let (code, out, _) = run(bin().args(["stats", "--data"]).arg(fixture("sn2_train.steps")));
    assert_eq!(code, 0);
    assert!(out.starts_with("table,key,count\n"));
    assert!(out.contains("element,Br,"));
}

#[test]
fn fingerprint_dump_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fp.bin");
    let (code, _, err) = run(bin().args(["fingerprints", "--data"]).arg(fixture("sn2_train.steps")).arg("--out").arg(&out));
    assert_eq!(code, 0, "{err}");
    let rows = mechrxn::featurize::read_fingerprint_dump(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 46);
    assert_eq!(rows[0].dim(), mechrxn::featurize::REACTION_FP_LEN);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[predict]\nmode = \"hybrid\"\nk = 1\nadapters = [\"builtin:echo\"]\n").unwrap();
    let (code, out, err) = run(bin().arg("--config").arg(&cfg).args(["predict", "CBr.[OH-]", "--json"]));
    assert_eq!(code, 0, "{err}");
    assert_eq!(json(&out)["mode"], "hybrid");
    let (code, _, err) = run(bin().arg("--config").arg(&cfg).args(["predict", "CBr.[OH-]", "--mode", "twostep"]));
    assert_eq!(code, 1);
    assert!(err.contains("model directory"), "{err}");
    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    let (code, _, err) = run(bin().arg("--config").arg(&cfg).args(["stats", "--data", "x"]));
    assert_eq!(code, 1);
    assert!(err.contains("parsing config"), "{err}");
}
