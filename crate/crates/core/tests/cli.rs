use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const SMALL: [&str; 4] = ["--pprec", "4", "--uprec", "16"];

fn pwin(args: &[&str], stdin: Option<&[u8]>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_pwin"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("pwin starts");
    if let Some(bytes) = stdin {
        child.stdin.take().unwrap().write_all(bytes).unwrap();
    }
    drop(child.stdin.take());
    child.wait_with_output().unwrap()
}

fn small(args: &[&str]) -> Vec<String> {
    args.iter().chain(SMALL.iter()).map(|s| s.to_string()).collect()
}

fn run(args: &[&str], stdin: Option<&[u8]>) -> (i32, Vec<u8>) {
    let out = pwin(args, stdin);
    (out.status.code().unwrap(), out.stdout)
}

fn as_strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"], None).0, 2);
    assert_eq!(run(&["gamma", "lambda", "--chi", "6"], None).0, 2);
    assert_eq!(run(&["gamma", "lambda"], None).0, 2);
    assert_eq!(run(&["suite", "no-such-suite"], None).0, 2);
    assert_eq!(run(&["zoo", "build", "no-such-object"], None).0, 2);
    assert_eq!(
        run(&["window", "check"], Some(b"{\"frame\": {\"ring\": \"witt\"}}")).0,
        2
    );
}

#[test]
fn zoo_build_json_has_the_objects_and_actions() {
    let (code, out) = run(&as_strs(&small(&["zoo", "build", "gm", "--json"])), None);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["name"], "gm");
    assert_eq!(v["window"]["n"], 1);
    assert_eq!(v["actions"]["window"]["generators"].as_array().unwrap().len(), 3);
    assert_eq!(
        run(&["zoo", "list"], None).1,
        b"tate\ngm\ntate-twist\ngm-twist\nsum\next\n"
    );
}

#[test]
fn windows_pass_through_files_and_pipes() {
    let dir = std::env::temp_dir().join(format!("pwin-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let w = dir.join("w.json");
    let w = w.to_str().unwrap();
    let (code, _) = run(
        &as_strs(&small(&["window", "random", "--rank", "3", "--seed", "5", "--out", w])),
        None,
    );
    assert_eq!(code, 0);
    let (code, out) = run(&as_strs(&small(&["window", "check", "--in", w])), None);
    assert_eq!((code, out), (0, b"window_check ok\nfv_varpi ok\n".to_vec()));

    let (_, dual) = run(&as_strs(&small(&["window", "dual", "--in", w])), None);
    let (_, back) = run(&as_strs(&small(&["window", "dual"])), Some(&dual));
    assert_eq!(back, std::fs::read(w).unwrap(), "double dual is the identity");

    let (_, bt) = run(&as_strs(&small(&["bt", "from-window", "--in", w])), None);
    assert_eq!(run(&as_strs(&small(&["bt", "check"])), Some(&bt)).0, 0);
    let (_, again) = run(&as_strs(&small(&["bt", "to-window"])), Some(&bt));
    assert_eq!(run(&as_strs(&small(&["window", "check"])), Some(&again)).0, 0);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn a_broken_window_is_a_check_failure() {
    // Psi = p is not invertible, so the window axioms fail
    let w = br#"{"frame": {"ring": "sigma"}, "L": [], "Psi": [[{"coeffs": ["3"]}]]}"#;
    let (code, out) = run(&as_strs(&small(&["window", "check", "--json"])), Some(w));
    assert_eq!(code, 1);
    let v: Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["window_check"], false);
}

#[test]
fn gamma_and_wach_commands() {
    let (code, out) = run(&["gamma", "lambda", "--chi", "4", "--pprec", "1", "--uprec", "3"], None);
    assert_eq!((code, out), (0, b"1 + u^2 + O(p^1, u^3)\n".to_vec()));
    let (code, out) = run(&["gamma", "t", "--pprec", "2", "--uprec", "4"], None);
    assert_eq!((code, out), (0, b"3*u + 3*u^2 + u^3 + O(p^2, u^4)\n".to_vec()));
    assert_eq!(
        run(&as_strs(&small(&["gamma", "strictm", "tate-twist", "--n", "2"])), None).0,
        0
    );

    let (code, out) = run(&["wach", "kr-to-wach", "--alpha", "E1", "--r", "1", "--json"], None);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(
        (v["round_trip"].clone(), v["wach"]["display"].clone()),
        (Value::Bool(true), "1 (phi = E1)".into())
    );
    let (code, out) = run(
        &["wach", "wach-to-kr", "--alpha", "E2", "--lattice", "u", "--r", "2"],
        None,
    );
    assert_eq!((code, out), (0, b"kr: u*E1 (phi = E2)\nkr-stable: true\n".to_vec()));
}

#[test]
fn suite_list_and_json_report() {
    let (code, out) = run(&["suite", "--list", "--json"], None);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 12);

    let (code, out) = run(&["suite", "le-strictm", "--uprec", "24", "--json"], None);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_slice(&out).unwrap();
    let ids: Vec<&str> = v["cases"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_str().unwrap())
        .collect();
    assert!(ids.windows(2).all(|w| w[0] < w[1]), "cases are sorted by id");
    assert_eq!(v["settings"]["ctx"]["M"], 24);
}
