use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use apixplore::refsut::{AnySut, GroupsConfig, SutId, SutServer};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn apixplore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apixplore"))
        .args(args)
        .env_remove("APIXPLORE_BASE_URL")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

fn explore_persons(out: &Path, variant: &str) -> Output {
    let amos = fixture("persons.amos.json");
    apixplore(&[
        "explore",
        "--amos",
        amos.to_str().unwrap(),
        "--props",
        "MP-R-1,MP-R-2",
        "--tests",
        "100",
        "--iterations",
        "5",
        "--seed",
        "42",
        "--adapter",
        &format!("in-process:{variant}"),
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn explore_writes_reports_and_cases() {
    let dir = tempfile::tempdir().unwrap();
    let out = explore_persons(dir.path(), "persons-v1");
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let names = files(dir.path());
    assert!(names.contains(&"persons.report.json".to_string()), "{names:?}");
    assert!(names.contains(&"persons.txt".to_string()));
    assert!(names.iter().any(|n| n.ends_with(".case.json")));
    let text = fs::read_to_string(dir.path().join("persons.txt")).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout), text);
    assert!(text.contains("MP-R-2 get-persons"));
}

#[test]
fn explore_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(code(&explore_persons(a.path(), "persons-v2")), 0);
    assert_eq!(code(&explore_persons(b.path(), "persons-v2")), 0);
    let names = files(a.path());
    assert_eq!(names, files(b.path()));
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n}");
    }
}

#[test]
fn unknown_property_is_a_config_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let amos = fixture("persons.amos.json");
    let out = apixplore(&[
        "explore",
        "--amos",
        amos.to_str().unwrap(),
        "--props",
        "MP-X-9",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("MP-R-1") && err.contains("MP-S-5"), "{err}");
    assert!(err.contains("Usage:"), "{err}");
    assert!(!out_dir.exists());
}

#[test]
fn config_errors_exit_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let groups = fixture("groups.amos.json");
    let cases: [&[&str]; 4] = [
        &["--props", "MP-S-3"],
        &["--props", "MP-S-3", "--query-op", "no-such-op"],
        &["--adapter", "in-process:nothing"],
        &["--adapter", "http"],
    ];
    for extra in cases {
        let mut args = vec!["explore", "--amos", groups.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];
        args.extend_from_slice(extra);
        let out = apixplore(&args);
        assert_eq!(code(&out), 2, "{extra:?}: {}", stderr(&out));
        assert!(!out_dir.exists(), "{extra:?}");
    }
    assert_eq!(code(&apixplore(&["explore", "--bogus"])), 2);
    let missing = dir.path().join("missing.json");
    let out = apixplore(&["explore", "--amos", missing.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unreachable_system_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let amos = fixture("persons.amos.json");
    let out = Command::new(env!("CARGO_BIN_EXE_apixplore"))
        .args(["explore", "--amos", amos.to_str().unwrap(), "--adapter", "http", "--timeout-ms", "500"])
        .args(["--out", dir.path().join("o").to_str().unwrap()])
        .env("APIXPLORE_BASE_URL", format!("http://127.0.0.1:{port}"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn explore_over_http_via_environment_base_url() {
    let server = SutServer::start(AnySut::new(SutId::Groups, GroupsConfig::default()), "127.0.0.1:0").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let amos = fixture("groups.amos.json");
    let out = Command::new(env!("CARGO_BIN_EXE_apixplore"))
        .args(["explore", "--amos", amos.to_str().unwrap(), "--adapter", "http"])
        .args(["--props", "MP-S-4", "--query-op", "get-groups", "--tests", "20", "--iterations", "1"])
        .args(["--out", dir.path().to_str().unwrap()])
        .env("APIXPLORE_BASE_URL", server.base_url())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(files(dir.path()).iter().any(|n| n.starts_with("groups.MP-S-4")));
}

#[test]
fn replay_exits_0_iff_the_property_holds() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&explore_persons(dir.path(), "persons-v1")), 0);
    let case = dir.path().join("persons.MP-R-2-1.case.json");
    let amos = fixture("persons.amos.json");
    let replay = |variant: &str| {
        apixplore(&[
            "replay",
            "--case",
            case.to_str().unwrap(),
            "--amos",
            amos.to_str().unwrap(),
            "--adapter",
            &format!("in-process:{variant}"),
        ])
    };
    assert_eq!(code(&replay("persons-v1")), 0);
    // v3 rejects the empty-named person, so the post changes nothing.
    assert_eq!(code(&replay("persons-v3")), 1);
    let out = apixplore(&["replay", "--case", "/nonexistent", "--amos", amos.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn map_openapi_writes_a_catalogue() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("groups.amos.json");
    let input = fixture("groups.openapi.json");
    let run = apixplore(&["map-openapi", "--in", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&run), 0, "{}", stderr(&run));
    let amos = apixplore::amos::parse_amos(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(amos.operation("get-groups").is_some());

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    let target = dir.path().join("never.json");
    let run = apixplore(&["map-openapi", "--in", bad.to_str().unwrap(), "--out", target.to_str().unwrap()]);
    assert_eq!(code(&run), 1);
    assert!(!target.exists());
}

#[test]
fn map_openapi_reports_warnings_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("api.json");
    fs::write(
        &input,
        r#"{"openapi":"3.0.0","paths":{"/x":{"get":{"parameters":[{"name":"X-Key","in":"header","schema":{"type":"string"}}]}}}}"#,
    )
    .unwrap();
    let out = dir.path().join("api.amos.json");
    let run = apixplore(&["map-openapi", "--in", input.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&run), 0);
    assert!(stderr(&run).contains("warning: #/paths/~1x/get/parameters/0"), "{}", stderr(&run));
}

#[test]
fn bench_writes_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("samples.csv");
    let out = apixplore(&["bench", "--runs", "10", "--budget", "1000", "--seed", "7", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 40);
    for label in ["A", "B", "C", "D"] {
        assert_eq!(rows.iter().filter(|r| r.starts_with(&format!("{label},"))).count(), 10);
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("A-B") && stdout.contains("median"), "{stdout}");
    assert_eq!(code(&apixplore(&["bench", "--runs", "0"])), 2);
}
