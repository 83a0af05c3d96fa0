//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any gating criterion fails. Long-running criteria only run
//! with EWM_STRETCH=1.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use ewm_cli::pipeline::{synthesize, WEIGHTS_FILE, MANIFEST_FILE, WITNESS_FILE};
use ewm_cli::JobConfig;
use ewm_core::phase2::Phase2Outcome;
use ewm_core::symmetry::symmetry_reduce;
use serde_json::Value;

const TABLE1_LIMIT: Duration = Duration::from_secs(1);
const EISENSTEIN_LIMIT: Duration = Duration::from_secs(300);
const RANDOM_TRIALS: u64 = 1000;
const RANDOM_MAX_LENGTH: usize = 20;

struct Suite {
    dir: tempfile::TempDir,
    failures: Vec<String>,
    counter: usize,
}

impl Suite {
    fn record(&mut self, id: &str, title: &str, result: Result<String, String>) {
        match result {
            Ok(detail) => println!("[PASS] {id} {title}: {detail}"),
            Err(detail) => {
                println!("[FAIL] {id} {title}: {detail}");
                self.failures.push(id.to_string());
            }
        }
    }

    fn config(&mut self, json: &str) -> PathBuf {
        self.counter += 1;
        let path = self.dir.path().join(format!("config-{}.json", self.counter));
        std::fs::write(&path, json).unwrap();
        path
    }

    fn out_dir(&mut self) -> PathBuf {
        self.counter += 1;
        self.dir.path().join(format!("out-{}", self.counter))
    }
}

fn ewm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ewm")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn run_cli(s: &mut Suite, json: &str, extra: &[&str]) -> (i32, PathBuf, Output) {
    let config = s.config(json);
    let out = s.out_dir();
    let mut args = vec!["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = ewm(&args);
    (code(&o), out, o)
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(MANIFEST_FILE)).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).trim().to_string()
}

fn verification_ok(m: &Value) -> Result<(), String> {
    let v = &m["verification"];
    let checks = [
        ("fixpoint", v["fixpoint"]["passed"].as_bool() == Some(true)),
        ("bound", v["bound"]["passed"].as_bool() == Some(true)),
        ("q(0..0)=0", v["zero_window"].as_bool() == Some(true)),
        ("validity", v["validity"]["violation"].is_null() && v["validity"]["checks"].as_u64().unwrap_or(0) > 0),
        ("additions", v["additions"]["failures"].as_u64() == Some(0) && v["additions"]["trials"].as_u64() == Some(RANDOM_TRIALS)),
    ];
    match checks.iter().find(|(_, ok)| !ok) {
        Some((name, _)) => Err(format!("{name} check failed")),
        None => Ok(()),
    }
}

/// Expects a converged run with the given #Q and p.
fn expect_run(s: &mut Suite, label: &str, json: &str, q: u64, p: u64) -> Result<String, String> {
    let t = Instant::now();
    let (c, out, o) = run_cli(s, json, &[]);
    if c != 0 {
        return Err(format!("{label}: exit {c} {}", stderr(&o)));
    }
    let m = manifest(&out);
    let (got_q, got_p, r) = (m["weight_coefficients"]["count"].as_u64(), m["locality"].as_u64(), m["memory"].as_u64());
    if got_q != Some(q) || got_p != Some(p) || r.map(|r| r + 1) != got_p {
        return Err(format!("{label}: #Q={got_q:?} p={got_p:?} r={r:?}, expected #Q={q} p={p}"));
    }
    verification_ok(&m).map_err(|e| format!("{label}: {e}"))?;
    Ok(format!("{label} #Q={q} p={p} ({:.2?})", t.elapsed()))
}

fn all(results: Vec<Result<String, String>>) -> Result<String, String> {
    let (ok, bad): (Vec<_>, Vec<_>) = results.into_iter().partition(|r| r.is_ok());
    if bad.is_empty() {
        Ok(ok.into_iter().map(Result::unwrap).collect::<Vec<_>>().join("; "))
    } else {
        Err(bad.into_iter().map(|r| r.unwrap_err()).collect::<Vec<_>>().join("; "))
    }
}

const METHODS: [(&str, &str); 4] = [("abs", "gravity"), ("beta_norm", "gravity"), ("abs", "beta_norm"), ("beta_norm", "beta_norm")];

fn criterion_1(s: &mut Suite) {
    // (label, config, accepted Q sets, p)
    let cases: [(&str, &str, &[&[i64]], u64); 4] = [
        ("beta=3 A={-2..2}", r#""omega_min_poly":[-3,1],"base":[3],"alphabet":[[-2],[-1],[0],[1],[2]]"#, &[&[-1, 0, 1]], 2),
        ("beta=2 A={-1,0,1}", r#""omega_min_poly":[-2,1],"base":[2],"alphabet":[[-1],[0],[1]]"#, &[&[-1, 0, 1]], 3),
        ("beta=2 A={0,1,2}", r#""omega_min_poly":[-2,1],"base":[2],"alphabet":[[0],[1],[2]]"#, &[&[-1, 0, 1], &[0, 1, 2], &[-2, -1, 0]], 3),
        ("beta=-3 A={-1..2}", r#""omega_min_poly":[3,1],"base":[-3],"alphabet":[[-1],[0],[1],[2]]"#, &[&[-1, 0, 1], &[0, 1, 2], &[-2, -1, 0]], 3),
    ];
    let mut results = Vec::new();
    for (label, body, qs, p) in cases {
        let mut errors = Vec::new();
        for (m1, m2) in METHODS {
            let config = JobConfig::from_json(&format!(r#"{{{body},"method_phase1":"{m1}","method_phase2":"{m2}"}}"#)).unwrap();
            let t = Instant::now();
            let (_, syn) = synthesize(&config).unwrap();
            let elapsed = t.elapsed();
            let q: Vec<i64> = syn.q.elements.iter().map(|x| x.coords()[0].to_string().parse().unwrap()).collect();
            match &syn.outcome {
                Phase2Outcome::Converged(r) => {
                    let got_p = r.weight_function.locality() as u64;
                    if !qs.contains(&q.as_slice()) || got_p != p {
                        errors.push(format!("[{m1}/{m2}] Q={q:?} p={got_p}"));
                    } else if elapsed > TABLE1_LIMIT {
                        errors.push(format!("[{m1}/{m2}] took {elapsed:.2?}"));
                    }
                }
                Phase2Outcome::NonConvergent { witness, .. } => errors.push(format!("[{m1}/{m2}] {witness}")),
            }
        }
        results.push(if errors.is_empty() { Ok(format!("{label} p={p}")) } else { Err(format!("{label}: {}", errors.join(", "))) });
    }
    let outcome = all(results).map(|d| format!("{d} under all four method pairs"));
    s.record("AC1", "integer bases (exact Q and p)", outcome);
}

fn criterion_2(s: &mut Suite) {
    let r = vec![
        expect_run(s, "sqrt2", r#"{"omega_min_poly":[-2,0,1],"distinguished_root":[1.414,0],"base":[0,1],"alphabet":[[0],[1],[2]]}"#, 9, 5),
        expect_run(s, "sqrt3", r#"{"omega_min_poly":[-3,0,1],"distinguished_root":[1.732,0],"base":[0,1],"alphabet":[[0],[1],[2],[3]]}"#, 9, 5),
        expect_run(s, "cbrt2", r#"{"omega_min_poly":[-2,0,0,1],"distinguished_root":[1.26,0],"base":[0,1,0],"alphabet":[[0],[1],[2]]}"#, 27, 7),
    ];
    s.record("AC2", "real roots of integers (exact #Q and p)", all(r));
}

fn criterion_3(s: &mut Suite) {
    let r = vec![
        expect_run(s, "2i", r#"{"omega_min_poly":[4,0,1],"base":[0,1],"alphabet":[[-2],[-1],[0],[1],[2]]}"#, 9, 5),
        expect_run(s, "i*sqrt2", r#"{"omega_min_poly":[2,0,1],"base":[0,1],"alphabet":[[-1],[0],[1]]}"#, 9, 5),
    ];
    s.record("AC3", "complex bases (exact #Q and p)", all(r));
}

const EISENSTEIN: &str = r#"{"omega_min_poly":[1,1,1],"base":[-1,1],"alphabet":[[0,0],[1,0],[-1,0],[0,1],[0,-1],[1,1],[-1,-1]],"method_phase1":"beta_norm","method_phase2":"gravity"}"#;

fn criterion_4(s: &mut Suite) {
    let t = Instant::now();
    let run = expect_run(s, "eisenstein", EISENSTEIN, 19, 4);
    let config = JobConfig::from_json(EISENSTEIN).unwrap();
    let (_, syn) = synthesize(&config).unwrap();
    let sym = match &syn.outcome {
        Phase2Outcome::Converged(r) => {
            let wf = &r.weight_function;
            let ctx = wf.system().context();
            let w = ctx.omega();
            let w2 = ctx.mul(&w, &w);
            let units = [ctx.one(), ctx.integer(-1), w.clone(), -&w, w2.clone(), -&w2];
            let red = symmetry_reduce(wf, &units).map_err(|e| e.to_string());
            red.and_then(|red| {
                let a = red.agreement(wf);
                if a.agrees() && a.windows == 19u64.pow(3) && wf.memory() == 3 {
                    Ok(format!("r=3, symmetry-reduced table ({} windows) agrees on all {} windows", a.representatives, a.windows))
                } else {
                    Err(format!("r={}, mismatch at {:?} over {} windows", wf.memory(), a.mismatch, a.windows))
                }
            })
        }
        Phase2Outcome::NonConvergent { witness, .. } => Err(witness.to_string()),
    };
    let elapsed = t.elapsed();
    let time = if elapsed <= EISENSTEIN_LIMIT { Ok(format!("{elapsed:.2?}")) } else { Err(format!("took {elapsed:.2?}")) };
    s.record("AC4", "Eisenstein 1-block with 6-fold symmetry", all(vec![run, sym, time]));
}

fn expect_non_convergent(s: &mut Suite, label: &str, json: &str, kinds: &[&str]) -> Result<String, String> {
    let (c, out, o) = run_cli(s, json, &[]);
    if c != 2 {
        return Err(format!("{label}: exit {c}, expected 2 ({})", stderr(&o)));
    }
    let w: Value = serde_json::from_str(&std::fs::read_to_string(out.join(WITNESS_FILE)).unwrap()).unwrap();
    let kind = w["witness"]["kind"].as_str().unwrap_or_default().to_string();
    if !kinds.contains(&kind.as_str()) {
        return Err(format!("{label}: witness kind {kind:?}"));
    }
    let detail = match kind.as_str() {
        "constant_digit" => format!("constant digit {}", w["witness"]["digit"]),
        _ => format!("Rauzy walk of {} vertices at level {}", w["witness"]["walk"].as_array().map_or(0, Vec::len), w["witness"]["level"]),
    };
    Ok(format!("{label}: exit 2, {detail}"))
}

fn criterion_5(s: &mut Suite) {
    let r = vec![
        expect_non_convergent(
            s,
            "Knuth base 2i",
            r#"{"omega_min_poly":[4,0,1],"base":[0,1],"alphabet":[[0,0],[1,1],[-1,-1],[2,-1],[-2,1]]}"#,
            &["constant_digit"],
        ),
        expect_non_convergent(
            s,
            "i*sqrt2 A={0,1,1+w}",
            r#"{"omega_min_poly":[2,0,1],"base":[0,1],"alphabet":[[0,0],[1,0],[1,1]]}"#,
            &["constant_digit", "rauzy_walk"],
        ),
    ];
    s.record("AC5", "non-convergence detection", all(r));
}

fn criterion_6(s: &mut Suite) {
    let config = s.config(r#"{"omega_min_poly":[-1,-1,1],"distinguished_root":[1.618,0],"base":[0,1],"alphabet":[[0],[1]]}"#);
    let check = code(&ewm(&["check", "--config", config.to_str().unwrap()]));
    let out = s.out_dir();
    let run = code(&ewm(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    let result = if check == 3 && run == 3 { Ok("golden ratio base: check and run exit 3".into()) } else { Err(format!("exit codes check={check} run={run}")) };
    s.record("AC6", "ineligible quadratic Pisot base", result);
}

fn criterion_7(s: &mut Suite) {
    let cases = [
        ("Penney", r#"{"omega_min_poly":[1,0,1],"base":[-1,1],"alphabet":[[-2],[-1],[0],[1],[2]]}"#, 5),
        ("Eisenstein", EISENSTEIN, 7),
        ("sqrt2", r#"{"omega_min_poly":[-2,0,1],"distinguished_root":[1.414,0],"base":[0,1],"alphabet":[[0],[1],[2]]}"#, 3),
    ];
    let mut results = Vec::new();
    for (label, json, bound) in cases {
        let config = s.config(json);
        let o = ewm(&["check", "--config", config.to_str().unwrap()]);
        let report: Value = serde_json::from_slice(&o.stdout).unwrap_or(Value::Null);
        let got = report["lower_bound"].as_u64();
        results.push(if code(&o) == 0 && got == Some(bound) {
            Ok(format!("{label} {bound}"))
        } else {
            Err(format!("{label}: exit {} bound {got:?}", code(&o)))
        });
    }
    s.record("AC7", "alphabet lower bounds", all(results));
}

fn minus_four_rule(w: i64, w4: i64) -> i64 {
    if w <= -3 || (w == -2 && w4 >= 2) {
        1
    } else if w >= 3 || (w == 2 && w4 <= -2) {
        -1
    } else {
        0
    }
}

/// The base −4 weight rule moved to base −1+i through β⁴ = −4, written as a
/// depth-8 table with don't-care cells left empty.
fn penney_csv() -> String {
    // β = −1+i; β² = −2i; β³ = 2+2i. q′ = β³q_0 + β²q_1 + βq_2 + q_3.
    let weights: [(i64, i64); 4] = [(2, 2), (0, -2), (-1, 1), (1, 0)];
    let matters = |path: &[Option<i64>], i: usize| i < 4 || matches!(path[i - 4], Some(2) | Some(-2));
    let mut out = String::from("w_0;w_-1;w_-2;w_-3;w_-4;w_-5;w_-6;w_-7;q\n");
    let mut stack: Vec<Vec<Option<i64>>> = vec![Vec::new()];
    // depth-first, digits ascending
    while let Some(path) = stack.pop() {
        let i = path.len();
        if i == 8 || (i >= 4 && (i..8).all(|k| !matters(&path, k))) {
            for k in 0..8 {
                if let Some(Some(d)) = path.get(k) {
                    let _ = write!(out, "({d},0)");
                }
                out.push(';');
            }
            let (mut re, mut im) = (0, 0);
            for (k, (a, b)) in weights.iter().enumerate() {
                let q = minus_four_rule(path[k].unwrap(), path.get(k + 4).copied().flatten().unwrap_or(0));
                re += a * q;
                im += b * q;
            }
            let _ = writeln!(out, "({re},{im})");
            continue;
        }
        if matters(&path, i) {
            for d in (-4..=4).rev() {
                let mut next = path.clone();
                next.push(Some(d));
                stack.push(next);
            }
        } else {
            let mut next = path;
            next.push(None);
            stack.push(next);
        }
    }
    out
}

fn criterion_8(s: &mut Suite) {
    let config = s.config(r#"{"omega_min_poly":[1,0,1],"base":[-1,1],"alphabet":[[-2],[-1],[0],[1],[2]]}"#);
    let table = s.dir.path().join("penney.csv");
    std::fs::write(&table, penney_csv()).unwrap();
    let trials = RANDOM_TRIALS.to_string();
    let len = RANDOM_MAX_LENGTH.to_string();
    let args = ["verify", "--config", config.to_str().unwrap(), "--table", table.to_str().unwrap(), "--trials", &trials, "--max-length", &len];
    let o = ewm(&args);
    let text = String::from_utf8_lossy(&o.stdout);
    let exhaustive = text.contains("window validity (exhaustive");
    let additions = text.contains(&format!("random additions ({RANDOM_TRIALS} trials, length <= {RANDOM_MAX_LENGTH}): 0 failures"));
    let result = if code(&o) == 0 && exhaustive && additions {
        let checks = text.lines().find(|l| l.starts_with("window validity")).unwrap_or_default().to_string();
        Ok(format!("{checks}; {RANDOM_TRIALS} random additions exact"))
    } else {
        Err(format!("exit {}: {}{}", code(&o), text.trim(), stderr(&o)))
    };
    s.record("AC8", "external Penney table", result);
}

fn criterion_9(s: &mut Suite) {
    let systems = [
        ("binary", r#"{"omega_min_poly":[-2,1],"base":[2],"alphabet":[[-1],[0],[1]],"seed":11}"#),
        ("cbrt2", r#"{"omega_min_poly":[-2,0,0,1],"distinguished_root":[1.26,0],"base":[0,1,0],"alphabet":[[0],[1],[2]]}"#),
        ("2i", r#"{"omega_min_poly":[4,0,1],"base":[0,1],"alphabet":[[-2],[-1],[0],[1],[2]]}"#),
        ("eisenstein", EISENSTEIN),
    ];
    let mut results = Vec::new();
    for (label, json) in systems {
        let (c1, a, _) = run_cli(s, json, &[]);
        let (c2, b, _) = run_cli(s, json, &["--threads", "1"]);
        if c1 != 0 || c2 != 0 {
            results.push(Err(format!("{label}: exit {c1}/{c2}")));
            continue;
        }
        let same = |f: &str| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap();
        let m = manifest(&a);
        results.push(match verification_ok(&m) {
            Err(e) => Err(format!("{label}: {e}")),
            Ok(()) if !same(WEIGHTS_FILE) || !same(MANIFEST_FILE) => Err(format!("{label}: repeated runs differ")),
            Ok(()) => Ok(format!("{label} ok")),
        });
    }
    s.record("AC9", "property suite and determinism", all(results).map(|d| format!("{d} (fixpoint, bound, validity, q(0..0)=0, {RANDOM_TRIALS} additions, byte-identical reruns)")));
}

fn stretch(s: &mut Suite) {
    let r = expect_run(s, "fourth root of 5", r#"{"omega_min_poly":[-5,0,0,0,1],"distinguished_root":[1.495,0],"base":[0,1,0,0],"alphabet":[[0],[1],[2],[3],[4],[5]]}"#, 81, 9);
    s.record("AC2*", "fourth root of 5 (stretch)", r);

    let (c, out, o) = run_cli(s, r#"{"omega_min_poly":[1,0,1],"base":[-1,1],"alphabet":[[-1],[0],[1]],"block_length":2}"#, &[]);
    let r = if c == 0 {
        let m = manifest(&out);
        let (p, rows) = (m["locality"].as_u64(), m["table_rows"].as_u64());
        if p == Some(6) && rows == Some(60_721) { Ok("p=6, 60721 rows".to_string()) } else { Err(format!("p={p:?} rows={rows:?}, expected p=6 and 60721 rows")) }
    } else {
        Err(format!("exit {c} {}", stderr(&o)))
    };
    s.record("AC10a", "Penney 2-block (stretch)", r);

    let (c, out, o) = run_cli(s, r#"{"omega_min_poly":[1,0,1],"base":[-1,1],"alphabet":[[0,0],[1,0],[-1,0],[0,1],[0,-1]]}"#, &[]);
    let r = if c == 0 {
        let m = manifest(&out);
        let (q, p, rows) = (m["weight_coefficients"]["count"].as_u64(), m["locality"].as_u64(), m["table_rows"].as_u64());
        if q == Some(45) && p == Some(7) { Ok(format!("#Q=45, p=7, {rows:?} rows")) } else { Err(format!("#Q={q:?} p={p:?} rows={rows:?}")) }
    } else {
        Err(format!("exit {c} {}", stderr(&o)))
    };
    s.record("AC10b", "Penney complex alphabet (stretch)", r);

    let units: [[i64; 2]; 6] = [[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1]];
    let mut ok = 0;
    let mut min_r = u64::MAX;
    let mut notes = Vec::new();
    for mask in 0u32..64 {
        if mask.count_ones() != 4 {
            continue;
        }
        let digits: Vec<String> = std::iter::once("[0,0]".to_string())
            .chain((0..6).filter(|i| mask & (1 << i) != 0).map(|i| format!("[{},{}]", units[i][0], units[i][1])))
            .collect();
        let json = format!(r#"{{"omega_min_poly":[1,1,1],"base":[-1,1],"alphabet":[{}],"block_length":3}}"#, digits.join(","));
        let (c, out, _) = run_cli(s, &json, &[]);
        if c == 0 {
            ok += 1;
            min_r = min_r.min(manifest(&out)["memory"].as_u64().unwrap());
        }
        notes.push(c.to_string());
    }
    let codes = notes.join(",");
    let r = if ok == 9 { Ok(format!("9 of 15 subsets converge (exit codes {codes})")) } else { Err(format!("{ok} of 15 converge, exit codes {codes}")) };
    s.record("AC10c", "Eisenstein 3-block 5-digit alphabets (stretch)", r);
    let r = if min_r == 2 { Ok("minimum r=2".to_string()) } else { Err(format!("minimum r={min_r}, expected 2")) };
    s.record("AC10d", "Eisenstein 3-block minimal memory (stretch)", r);
}

fn main() {
    let mut s = Suite { dir: tempfile::tempdir().unwrap(), failures: Vec::new(), counter: 0 };
    criterion_1(&mut s);
    criterion_2(&mut s);
    criterion_3(&mut s);
    criterion_4(&mut s);
    criterion_5(&mut s);
    criterion_6(&mut s);
    criterion_7(&mut s);
    criterion_8(&mut s);
    criterion_9(&mut s);
    let gating = s.failures.len();
    if std::env::var("EWM_STRETCH").is_ok_and(|v| v == "1") {
        stretch(&mut s);
    } else {
        println!("[SKIP] AC2* AC10a AC10b AC10c AC10d stretch criteria (set EWM_STRETCH=1)");
    }
    println!("acceptance: {} gating failures, {} stretch failures", gating, s.failures.len() - gating);
    if gating > 0 {
        std::process::exit(1);
    }
}
