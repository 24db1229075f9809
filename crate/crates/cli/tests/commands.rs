use std::path::Path;
use std::process::{Command, Output};

fn spinglass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinglass"))
        .args(args)
        .env_remove("SPINGLASS_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn field(solution: &str, key: &str) -> String {
    solution
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')))
        .unwrap_or_else(|| panic!("no {key} in {solution}"))
        .to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn bruteforce_examples() {
    let dir = tempfile::tempdir().unwrap();
    let square = dir.path().join("square.txt");
    std::fs::write(&square, "4\n0 1 -1\n1 3 -1\n2 3 -1\n0 2 1\n").unwrap();
    let out = dir.path().join("bf.txt");
    assert_eq!(code(&spinglass(&["bruteforce", "--in", p(&square), "--out", p(&out)])), 0);
    assert_eq!(field(&std::fs::read_to_string(&out).unwrap(), "energy"), "-2");

    let ferro = dir.path().join("ferro.txt");
    std::fs::write(&ferro, "9\n0 1 -1\n1 2 -1\n3 4 -1\n4 5 -1\n6 7 -1\n7 8 -1\n0 3 -1\n3 6 -1\n1 4 -1\n4 7 -1\n2 5 -1\n5 8 -1\n").unwrap();
    assert_eq!(code(&spinglass(&["bruteforce", "--in", p(&ferro), "--out", p(&out)])), 0);
    assert_eq!(field(&std::fs::read_to_string(&out).unwrap(), "energy"), "-12");

    let big = dir.path().join("big.txt");
    std::fs::write(&big, "30\n0 1 -1\n").unwrap();
    let r = spinglass(&["bruteforce", "--in", p(&big), "--out", p(&out)]);
    assert_eq!(code(&r), 3, "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = d.join("o.txt");
    // Usage: missing --rho, unknown subcommand, unknown topology.
    let gen_dir = d.join("g");
    assert_eq!(code(&spinglass(&["generate", "--topology", "logical-square", "--size", "4", "--alpha", "1", "--out", p(&gen_dir)])), 1);
    assert_eq!(code(&spinglass(&["frobnicate"])), 1);
    assert_eq!(code(&spinglass(&["generate", "--topology", "hexagonal", "--size", "4", "--alpha", "1", "--rho", "3", "--out", p(&gen_dir)])), 1);
    // Input: missing and malformed files.
    assert_eq!(code(&spinglass(&["solve-exact", "--in", p(&d.join("none.txt")), "--out", p(&out)])), 2);
    let bad = d.join("bad.txt");
    std::fs::write(&bad, "3\n0 1\n").unwrap();
    assert_eq!(code(&spinglass(&["solve-exact", "--in", p(&bad), "--out", p(&out)])), 2);
    // Precondition: biases for the exact solver, nonplanar input.
    let biased = d.join("biased.txt");
    std::fs::write(&biased, "2\n0 1 -1\n0 0 1\n").unwrap();
    assert_eq!(code(&spinglass(&["solve-exact", "--in", p(&biased), "--out", p(&out)])), 3);
    let k5 = d.join("k5.txt");
    let mut text = String::from("5\n");
    for u in 0..5 {
        for v in u + 1..5 {
            text.push_str(&format!("{u} {v} -1\n"));
        }
    }
    std::fs::write(&k5, text).unwrap();
    let r = spinglass(&["solve-exact", "--in", p(&k5), "--out", p(&out)]);
    assert_eq!(code(&r), 3);
    assert!(String::from_utf8_lossy(&r.stderr).contains("not planar"));
    // Budget: a loop budget that cannot be met.
    let r = spinglass(&[
        "generate", "--topology", "logical-square", "--size", "16", "--alpha", "2", "--rho", "3",
        "--max-loop-rejections", "1000", "--out", p(&gen_dir),
    ]);
    assert_eq!(code(&r), 4);
    assert!(!out.exists());
}

#[test]
fn generate_solve_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = d.join("g");
    let r = spinglass(&[
        "generate", "--topology", "logical-square", "--size", "4", "--alpha", "0.75", "--rho", "3", "--count", "5",
        "--seed", "7", "--out", p(&g),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    for i in 0..5 {
        let inst = g.join(format!("instance_{i:04}.txt"));
        let sidecar: serde_json::Value =
            serde_json::from_slice(&std::fs::read(g.join(format!("instance_{i:04}.json"))).unwrap()).unwrap();
        let exact = d.join(format!("exact_{i}.txt"));
        assert_eq!(code(&spinglass(&["solve-exact", "--in", p(&inst), "--out", p(&exact)])), 0);
        let exact = std::fs::read_to_string(&exact).unwrap();
        assert_eq!(field(&exact, "energy"), sidecar["planted_energy"].as_str().unwrap());
        assert_eq!(field(&exact, "matches_planted"), "true");
        let bf = d.join(format!("bf_{i}.txt"));
        assert_eq!(code(&spinglass(&["bruteforce", "--in", p(&inst), "--out", p(&bf)])), 0);
        assert_eq!(field(&std::fs::read_to_string(&bf).unwrap(), "energy"), field(&exact, "energy"));
    }
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(g.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 10);
    assert_eq!(manifest["seeds"][0], 7);

    let anti = d.join("a");
    assert_eq!(
        code(&spinglass(&[
            "generate", "--topology", "anticluster", "--size", "3", "--alpha", "1", "--rho", "3", "--out", p(&anti),
        ])),
        0
    );
    let text = std::fs::read_to_string(anti.join("instance_0000.txt")).unwrap();
    assert_eq!(text.lines().next(), Some("48"));
    let topo = d.join("t");
    assert_eq!(
        code(&spinglass(&["generate", "--topology", "chimera", "--size", "2", "--topology-only", "--out", p(&topo)])),
        0
    );
    let edges = std::fs::read_to_string(topo.join("topology_chimera_2.txt")).unwrap();
    assert_eq!(edges.lines().count(), 1 + 16 * 4 + 8 * 2);
}

#[test]
fn heuristic_summary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = d.join("g");
    assert_eq!(
        code(&spinglass(&[
            "generate", "--topology", "logical-square", "--size", "5", "--alpha", "0.5", "--rho", "3", "--seed", "2",
            "--out", p(&g),
        ])),
        0
    );
    let params = d.join("pt.toml");
    std::fs::write(&params, "sweeps = 200\ntemperatures = 10\n").unwrap();
    let out = d.join("h.txt");
    let inst = g.join("instance_0000.txt");
    let r = spinglass(&[
        "solve-heuristic", "--algo", "pticm", "--in", p(&inst), "--params", p(&params), "--reps", "100", "--seed", "4",
        "--out", p(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let sol = std::fs::read_to_string(&out).unwrap();
    assert_eq!(field(&sol, "repetitions"), "100");
    let successes: usize = field(&sol, "successes").parse().unwrap();
    assert!(successes <= 100);
    let lo: f64 = field(&sol, "wilson_low").parse().unwrap();
    let hi: f64 = field(&sol, "wilson_high").parse().unwrap();
    let pr: f64 = field(&sol, "p").parse().unwrap();
    assert!(lo <= pr && pr <= hi);
    // SA rejects PT-only parameters.
    let r = spinglass(&["solve-heuristic", "--algo", "sa", "--in", p(&inst), "--params", p(&params), "--out", p(&out)]);
    assert_eq!(code(&r), 2);
}

#[test]
fn mwpm_debug_command() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    std::fs::write(&g, "4\n0 1 5\n2 3 5\n0 2 1\n1 3 1\n0 3 9\n").unwrap();
    let r = spinglass(&["mwpm", "--graph", p(&g)]);
    assert_eq!(code(&r), 0);
    assert_eq!(String::from_utf8_lossy(&r.stdout), "weight 2\n0 2\n1 3\n");
    std::fs::write(&g, "3\n0 1 1\n").unwrap();
    assert_eq!(code(&spinglass(&["mwpm", "--graph", p(&g)])), 3);
}

#[test]
fn benchmark_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let plan = d.join("plan.toml");
    std::fs::write(
        &plan,
        "topology = \"logical-square\"\nsizes = [16, 32, 64]\nalpha = 1.0\nrho = 3\ninstances = 2\nseed = 3\n\n[[solvers]]\nalgo = \"mwpm\"\n",
    )
    .unwrap();
    let out = d.join("bench");
    let r = spinglass(&["benchmark", "--plan", p(&plan), "--out", p(&out)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(out.join("scaling_mwpm.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,q05_us,median_us,q95_us");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("256,") && lines[3].starts_with("4096,"));
    let fits = std::fs::read_to_string(out.join("fits_mwpm.txt")).unwrap();
    assert!(fits.contains("power.slope = "));

    let ext = d.join("dw.csv");
    std::fs::write(&ext, "solver,n,T_us,p\ndw2000q, 256, 10, 0.5\ndw2000q,256,20,1.5\n").unwrap();
    let r = spinglass(&["report", "--in", p(&out), "--external", p(&ext)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(String::from_utf8_lossy(&r.stderr).contains("outside [0, 1]"));
    let table = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(table.lines().filter(|l| l.starts_with("measured,mwpm,")).count(), 3);
    let ext_row = table.lines().find(|l| l.starts_with("external,dw2000q,256,")).unwrap();
    let median: f64 = ext_row.split(',').nth(4).unwrap().parse().unwrap();
    assert!((median - 66.43856189774724).abs() < 1e-9);

    let empty = d.join("empty.toml");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(&spinglass(&["benchmark", "--plan", p(&empty), "--out", p(&d.join("e"))])), 2);
    std::fs::write(
        &empty,
        "topology = \"logical-square\"\nsizes = []\nalpha = 1.0\nrho = 3\ninstances = 1\nseed = 0\n",
    )
    .unwrap();
    assert_eq!(code(&spinglass(&["benchmark", "--plan", p(&empty), "--out", p(&d.join("e"))])), 2);
}
