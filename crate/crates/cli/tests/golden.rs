//! Golden-file tests over the committed corpus: the signature, the twelve
//! derivations, their extracted realizers per monad, and the expected
//! verdicts, plus end-to-end runs of the `irt` binary.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;

use irt_core::checker::{sequent_valid, CheckBounds, SuppliedRealizers};
use irt_core::corpus;
use irt_core::extract::{extract, monadic_type};
use irt_core::format::{
    decorated_from_sexp, decorated_to_sexp, derivation_from_sexp, derivation_to_sexp,
    signature_from_sexp, signature_to_sexp,
};
use irt_core::monads::{exception_monad, identity_monad, ir_monad, SyntacticMonad};
use irt_core::runtime::KnowledgeState;
use irt_core::sexp::parse;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn monads() -> Vec<SyntacticMonad> {
    vec![identity_monad(), exception_monad(), ir_monad()]
}

fn read(path: &PathBuf) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

/// Regenerates every committed corpus file. Run with
/// `cargo test -p irt-cli -- --ignored regenerate_corpus` and review the diff.
#[test]
#[ignore]
fn regenerate_corpus() {
    let dir = corpus_dir();
    let sig = corpus::signature();
    std::fs::create_dir_all(dir.join("derivations")).unwrap();
    std::fs::create_dir_all(dir.join("realizers")).unwrap();
    std::fs::create_dir_all(dir.join("terms")).unwrap();
    std::fs::create_dir_all(dir.join("states")).unwrap();

    std::fs::write(dir.join("signature.sexp"), signature_to_sexp(&sig).to_string() + "\n")
        .unwrap();

    let mut verdict_lines = vec!["(verdicts".to_string()];
    for (name, d) in corpus::derivations() {
        std::fs::write(
            dir.join("derivations").join(format!("{name}.sexp")),
            derivation_to_sexp(&d).to_string() + "\n",
        )
        .unwrap();
        for m in monads() {
            if d.uses_em() && m.name != "ir" {
                continue;
            }
            let ds = extract(&sig, &m, &d).expect("corpus extraction");
            let ty = monadic_type(&m, &ds.conclusion);
            std::fs::write(
                dir.join("realizers").join(format!("{name}.{}.sexp", m.name)),
                decorated_to_sexp(&m.name, 0, &ds, &ty).to_string() + "\n",
            )
            .unwrap();
            if m.name == "ir" {
                let v = sequent_valid(
                    &sig,
                    &ds,
                    &KnowledgeState::empty(),
                    CheckBounds::default(),
                    &SuppliedRealizers::new(),
                )
                .expect("check");
                verdict_lines.push(format!(
                    "  ({name} ir empty-state {})",
                    if v.is_pass() { "pass" } else { "fail" }
                ));
            }
        }
    }
    verdict_lines.push(")".to_string());
    std::fs::write(dir.join("verdicts.sexp"), verdict_lines.join("\n") + "\n").unwrap();

    std::fs::write(dir.join("terms/beta.sexp"), "(app (lam (x Nat) x) (num 0))\n").unwrap();
    std::fs::write(
        dir.join("terms/rec.sexp"),
        "(rec inf (lam (m Nat) (lam (r (-> Nat Nat)) m)) (num 3))\n",
    )
    .unwrap();
    std::fs::write(dir.join("terms/ill-typed.sexp"), "(app (num 0) (num 0))\n").unwrap();
    std::fs::write(dir.join("states/b4-witness.sexp"), "(state (B4 () 5))\n").unwrap();
}

#[test]
fn golden_signature_roundtrips() {
    let dir = corpus_dir();
    let printed = signature_to_sexp(&corpus::signature()).to_string();
    assert_eq!(read(&dir.join("signature.sexp")).trim(), printed);
    let parsed = signature_from_sexp(&parse(&printed).unwrap()).unwrap();
    assert_eq!(signature_to_sexp(&parsed).to_string(), printed);
}

#[test]
fn golden_derivations_match_builders() {
    let dir = corpus_dir();
    let sig = corpus::signature();
    for (name, d) in corpus::derivations() {
        let path = dir.join("derivations").join(format!("{name}.sexp"));
        let content = read(&path);
        assert_eq!(content.trim(), derivation_to_sexp(&d).to_string(), "{name} file diverged");
        let parsed = derivation_from_sexp(&sig, &parse(&content).unwrap()).unwrap();
        assert_eq!(parsed, d, "{name} does not re-parse to the builder derivation");
    }
}

#[test]
fn golden_realizers_match_extraction() {
    let dir = corpus_dir();
    let sig = corpus::signature();
    for (name, d) in corpus::derivations() {
        for m in monads() {
            if d.uses_em() && m.name != "ir" {
                continue;
            }
            let path = dir.join("realizers").join(format!("{name}.{}.sexp", m.name));
            let content = read(&path);
            let ds = extract(&sig, &m, &d).unwrap();
            let ty = monadic_type(&m, &ds.conclusion);
            assert_eq!(
                content.trim(),
                decorated_to_sexp(&m.name, 0, &ds, &ty).to_string(),
                "{name} under {} diverged",
                m.name
            );
            // And the committed artifact re-parses to a typable sequent.
            let (_, _, parsed, ty2) =
                decorated_from_sexp(&sig, &parse(&content).unwrap()).unwrap();
            assert_eq!(ty2, ty);
            parsed.check_typing(&m).unwrap();
        }
    }
}

#[test]
fn golden_verdicts_hold() {
    let dir = corpus_dir();
    let sig = corpus::signature();
    let content = read(&dir.join("verdicts.sexp"));
    let parsed = parse(&content).unwrap();
    let entries = parsed.as_list().expect("verdict list");
    assert_eq!(entries[0].as_atom(), Some("verdicts"));
    let mut expected: BTreeMap<String, String> = BTreeMap::new();
    for e in &entries[1..] {
        let l = e.as_list().expect("entry");
        expected.insert(
            l[0].as_atom().unwrap().to_string(),
            l[3].as_atom().unwrap().to_string(),
        );
    }
    assert_eq!(expected.len(), 12);
    for (name, d) in corpus::derivations() {
        let ds = extract(&sig, &ir_monad(), &d).unwrap();
        let v = sequent_valid(
            &sig,
            &ds,
            &KnowledgeState::empty(),
            CheckBounds::default(),
            &SuppliedRealizers::new(),
        )
        .unwrap();
        let got = if v.is_pass() { "pass" } else { "fail" };
        assert_eq!(expected.get(name).map(|s| s.as_str()), Some(got), "{name}");
    }
}

// ---------------------------------------------------------------------------
// End-to-end binary runs
// ---------------------------------------------------------------------------

fn irt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_irt"))
}

fn path(rel: &str) -> String {
    corpus_dir().join(rel).to_string_lossy().into_owned()
}

#[test]
fn cli_normalize_beta() {
    let out = irt().args(["normalize", &path("terms/beta.sexp")]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "(num 0)");
}

#[test]
fn cli_normalize_guarded_recursor() {
    let out = irt().args(["normalize", &path("terms/rec.sexp")]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "(num 3)");
}

#[test]
fn cli_normalize_ill_typed_exits_2() {
    let out = irt().args(["normalize", &path("terms/ill-typed.sexp")]).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn cli_extract_is_deterministic_and_matches_golden() {
    let run = || {
        let out = irt()
            .args([
                "extract",
                "--monad",
                "ir",
                "--signature",
                &path("signature.sexp"),
                &path("derivations/12-em-loop.sexp"),
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8_lossy(&out.stdout).into_owned()
    };
    let a = run();
    let b = run();
    assert_eq!(a, b, "extraction must be byte-identical across runs");
    assert_eq!(a.trim(), read(&corpus_dir().join("realizers/12-em-loop.ir.sexp")).trim());
}

#[test]
fn cli_extract_em_under_identity_is_rejected() {
    let out = irt()
        .args([
            "extract",
            "--monad",
            "identity",
            &path("derivations/12-em-loop.sexp"),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("interactive realizability"), "stderr: {err}");
}

#[test]
fn cli_realize_check_passes_on_corpus_realizer() {
    let out = irt()
        .args([
            "realize-check",
            "--decorated",
            &path("realizers/06-imp-intro.ir.sexp"),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("(verdict pass"), "stdout: {stdout}");
}

#[test]
fn cli_learn_runs_the_em_loop() {
    let out = irt()
        .args(["learn", "--decorated", &path("realizers/12-em-loop.ir.sexp")])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(stdout.contains("exceptional"), "first step learns: {stdout}");
    assert!(stdout.contains("fixed-point"));
    assert!(stdout.contains("witness 5"));

    let again = irt()
        .args(["learn", "--decorated", &path("realizers/12-em-loop.ir.sexp")])
        .output()
        .unwrap();
    assert_eq!(stdout, String::from_utf8_lossy(&again.stdout), "trace must be reproducible");
}

#[test]
fn cli_realize_check_bare_realizer_and_failing_verdict() {
    let dir = std::env::temp_dir().join("irt-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let realizer = dir.join("unit-realizer.sexp");
    std::fs::write(&realizer, "(lam (_ State) (the (sum Unit Ex) (inl unit)))\n").unwrap();
    let true_formula = dir.join("true.sexp");
    std::fs::write(&true_formula, "(LE (num 0) (num 0))\n").unwrap();
    let false_formula = dir.join("false.sexp");
    std::fs::write(&false_formula, "(LT (num 1) (num 0))\n").unwrap();

    let pass = irt()
        .args([
            "realize-check",
            "--realizer",
            realizer.to_str().unwrap(),
            "--formula",
            true_formula.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(pass.status.code(), Some(0), "{}", String::from_utf8_lossy(&pass.stderr));
    assert!(String::from_utf8_lossy(&pass.stdout).contains("(verdict pass"));

    let fail = irt()
        .args([
            "realize-check",
            "--realizer",
            realizer.to_str().unwrap(),
            "--formula",
            false_formula.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&fail.stdout).contains("(verdict fail"));
}

#[test]
fn cli_check_laws_smoke() {
    let out = irt()
        .args(["check-laws", "--monad", "exception", "--samples", "20", "--seed", "9"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    for law in ["M1", "M2", "M3"] {
        assert!(
            stdout.contains(&format!("law {law} monad exception samples 20 result pass")),
            "stdout: {stdout}"
        );
    }
}
