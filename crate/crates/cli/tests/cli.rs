use std::path::Path;
use std::process::{Command, Output};

fn hardattn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hardattn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn simulate_exit_code_follows_the_decision() {
    for (word, expected) in [("abcba", 0), ("abba", 0), ("", 0), ("abcca", 1), ("ab", 1)] {
        let o = hardattn(&["simulate", "palindromes", word]);
        assert_eq!(code(&o), expected, "{word}");
        assert_eq!(stdout(&o), format!("OUTPUT {}\n", u8::from(expected == 0)));
    }
}

#[test]
fn simulate_accepts_the_model_flag() {
    let o = hardattn(&["simulate", "--model", "onestar", "111"]);
    assert_eq!(code(&o), 0);
    let o = hardattn(&["simulate", "--model", "onestar", "101"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn trace_lists_every_layer_and_the_decision() {
    let o = hardattn(&["simulate", "palindromes", "aba", "--trace"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0], "(a,1,4)\t(b,2,4)\t(a,3,4)\t($,4,4)");
    assert_eq!(rows[3], "OUTPUT 1");
}

#[test]
fn vector_models_simulate() {
    // majority: #1 >= #0
    assert_eq!(code(&hardattn(&["simulate", "majority-ahat", "0110"])), 0);
    assert_eq!(code(&hardattn(&["simulate", "majority-ahat", "0010"])), 1);
    assert_eq!(code(&hardattn(&["simulate", "contains-one", "0001"])), 0);
    assert_eq!(code(&hardattn(&["simulate", "contains-one", "0000"])), 1);
}

#[test]
fn usage_and_input_errors_exit_two() {
    let cases: &[&[&str]] = &[
        &["simulate", "no-such-model", "ab"],
        &["simulate", "palindromes", "abd"],
        &["compile", "majority-ahat", "4"],
        &["convert", "palindromes", "4"],
        &["growth", "onestar", "5", "4"],
        &["compile", "palindromes"],
        &["oracle", "dyck:1", "()"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = hardattn(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty(), "{args:?}");
    }
    let o = hardattn(&["simulate", "no-such-model"]);
    assert!(
        stderr(&o).contains("palindromes"),
        "error should list the zoo"
    );
}

#[test]
fn compile_then_eval_matches_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("p.net");
    let o = hardattn(&["compile", "palindromes", "4", net.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).ends_with("SIZE 20388 DEPTH 25\n"));

    // symbols a, b, c → 000, 001, 010
    let enc = |w: &str| -> String {
        w.chars()
            .map(|c| match c {
                'a' => "000",
                'b' => "001",
                _ => "010",
            })
            .collect()
    };
    for w in ["aaa", "aba", "abc", "cbc", "cab", "bba"] {
        let sim = code(&hardattn(&["simulate", "palindromes", w]));
        let ev = hardattn(&["eval", net.to_str().unwrap(), &enc(w)]);
        assert_eq!(code(&ev), sim, "{w}");
        assert_eq!(stdout(&ev), format!("{}\n", u8::from(sim == 0)));
    }
}

#[test]
fn compile_flags_match_positionals() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.net");
    let b = dir.path().join("b.net");
    let o1 = hardattn(&["compile", "onestar", "5", a.to_str().unwrap()]);
    let o2 = hardattn(&[
        "compile",
        "--model",
        "onestar",
        "--length",
        "5",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(stdout(&o1), stdout(&o2));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn compile_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = ["1", "4"]
        .iter()
        .map(|j| dir.path().join(format!("j{j}.net")))
        .collect();
    for (j, p) in ["1", "4"].iter().zip(&paths) {
        let o = hardattn(&["--jobs", j, "compile", "anbn", "7", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(
        std::fs::read(&paths[0]).unwrap(),
        std::fs::read(&paths[1]).unwrap()
    );
}

#[test]
fn eval_reports_bad_netlists_and_bit_strings() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("x.net");
    std::fs::write(&net, "not a netlist\n").unwrap();
    assert_eq!(code(&hardattn(&["eval", net.to_str().unwrap(), "01"])), 2);
    assert_eq!(
        code(&hardattn(&[
            "eval",
            Path::new("/nonexistent.net").to_str().unwrap(),
            "01"
        ])),
        2
    );

    let good = dir.path().join("g.net");
    assert_eq!(
        code(&hardattn(&[
            "compile",
            "onestar",
            "3",
            good.to_str().unwrap()
        ])),
        0
    );
    assert_eq!(
        code(&hardattn(&["eval", good.to_str().unwrap(), "0101"])),
        0
    );
    assert_eq!(
        code(&hardattn(&["eval", good.to_str().unwrap(), "01x1"])),
        2
    );
    assert_eq!(code(&hardattn(&["eval", good.to_str().unwrap(), "01"])), 2);
}

#[test]
fn equiv_passes_and_detects_an_injected_fault() {
    let o = hardattn(&["equiv", "palindromes", "5"]);
    assert_eq!(code(&o), 0);
    // 1 + 3 + 9 + 27 + 81 + 243
    assert_eq!(
        stdout(&o),
        "EQUIV palindromes LENGTHS 0..5 STRINGS 364 MISMATCHES 0\n"
    );

    let o = hardattn(&["equiv", "onestar", "4", "--inject-fault"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("MISMATCHES 1"));
    assert!(stdout(&o).contains("FIRST"));
}

#[test]
fn growth_is_reproducible_without_timing() {
    let a = hardattn(&["growth", "onestar", "4", "6"]);
    let b = hardattn(&[
        "growth",
        "--model",
        "onestar",
        "--length",
        "4",
        "--max-length",
        "6",
    ]);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    let text = stdout(&a);
    assert!(text.starts_with("GROWTH onestar\nROW N 4 SIZE "));
    assert!(text.ends_with("DEPTH constant\n"));
    assert!(!text.contains("TIME_MS"));
    assert!(stdout(&hardattn(&["growth", "onestar", "4", "5", "--timing"])).contains("TIME_MS"));
}

#[test]
fn unleveled_depth_can_vary() {
    let o = hardattn(&["growth", "palindromes", "2", "4", "--unleveled"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).ends_with("DEPTH varies\n"));
}

#[test]
fn nf_report_audits_widths() {
    let o = hardattn(&["nf-report", "palindromes", "6"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("NF palindromes LENGTH 6 MODE reachable\n"));
    // leaf width 2·ℓ(6) + ℓ(4) = 9, doubling per layer with one head
    assert!(text.contains("LAYER 0 VALUES 16 RANKS 0 WIDTH 9\n"));
    assert!(text.contains("WIDTH 18\n") && text.contains("WIDTH 36\n"));
    assert!(text.ends_with("AUDIT ok\n"));
}

#[test]
fn budgets_are_enforced() {
    let o = hardattn(&["compile", "palindromes", "6", "--budget-wires", "100"]);
    assert_eq!(code(&o), 2);
    let o = hardattn(&["nf-report", "palindromes", "6", "--budget-values", "3"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn convert_and_reduce() {
    let o = hardattn(&["convert", "contains-one", "8"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("MIN_GAP 1 N 16\n"));
    assert!(stdout(&o).ends_with("AGREE 128/128 TIES 0\n"));

    for n in 1..=5 {
        let o = hardattn(&["reduce", &n.to_string()]);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).ends_with(&format!("AGREE {0}/{0}\n", 1 << n)));
    }
    assert_eq!(code(&hardattn(&["reduce", "0"])), 2);
    assert_eq!(code(&hardattn(&["reduce", "40"])), 2);
}

#[test]
fn oracle_languages() {
    let cases = [
        ("parity", "0110", 0),
        ("parity", "0111", 1),
        ("majority", "0011", 0),
        ("equality", "0101", 0),
        ("equality", "0111", 1),
        ("dyck:1", "[[]]", 0),
        ("dyck:1", "][", 1),
        ("palindromes", "abba", 0),
    ];
    for (lang, word, exit) in cases {
        let o = hardattn(&["oracle", lang, word]);
        assert_eq!(code(&o), exit, "{lang} {word}");
        assert_eq!(stdout(&o), format!("{}\n", u8::from(exit == 0)));
    }
}

#[test]
fn list_names_every_model() {
    let text = stdout(&hardattn(&["list"]));
    for name in [
        "palindromes",
        "onestar",
        "anbn",
        "majority-ahat",
        "contains-one",
    ] {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("{name}\t"))),
            "{name}"
        );
    }
}
