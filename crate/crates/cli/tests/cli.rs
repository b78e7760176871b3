use std::path::Path;
use std::process::{Command, Output};

use ssb_squeezing::csv::Table;

fn ssbsq(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssbsq"))
        .args(args)
        .env("SSBSQ_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn same_seed_gives_byte_identical_csv_and_resolved_header() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "run",
        "dopo-spectrum",
        "n_traj=12",
        "t_end=60",
        "omegas=0,1",
        "--seed",
        "5",
    ];
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let o = ssbsq(
            &[&args[..], &["--out", out.to_str().unwrap()]].concat(),
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty(), "diagnostics go to standard error only");
    }
    let text = read(&a);
    assert_eq!(text, read(&b));
    let t = Table::parse(&text).unwrap();
    assert_eq!(
        t.columns,
        ["omega", "V_sim", "V_analytic", "stderr", "V_dB"]
    );
    assert_eq!(t.rows.len(), 2);
    for line in [
        "experiment = dopo-spectrum",
        "seed = 5",
        "n_traj = 12",
        "t_end = 60",
        "sigma = 1.4142135623730951",
    ] {
        assert!(t.header.iter().any(|h| h == line), "missing `{line}`");
    }
    let other = dir.path().join("c.csv");
    let o = ssbsq(
        &[
            &args[..5],
            &["--seed", "6", "--out", other.to_str().unwrap()],
        ]
        .concat(),
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    assert_ne!(read(&other), text);
}

#[test]
fn default_output_goes_to_the_environment_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = ssbsq(&["run", "dopo-seeded", "n_is=5"], dir.path());
    assert_eq!(code(&o), 0);
    let entries: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(entries, ["dopo-seeded.csv"]);
    let t = Table::parse(&read(&dir.path().join("dopo-seeded.csv"))).unwrap();
    let grid = t.column("I_s").unwrap();
    assert_eq!(grid.len(), 5);
    for (got, want) in grid.iter().zip([1e-4, 1e-3, 1e-2, 1e-1, 1.0]) {
        assert!((got / want - 1.0).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn config_file_and_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("seeded.cfg");
    std::fs::write(&cfg, "# seeded sweep\nsigma = 2\nn_is=3 # short\n").unwrap();
    let out = dir.path().join("s.csv");
    let o = ssbsq(
        &[
            "run",
            "dopo-seeded",
            "--config",
            cfg.to_str().unwrap(),
            "is_max=0.5",
            "--out",
            out.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0);
    let header = Table::parse(&read(&out)).unwrap().header;
    assert!(
        header.contains(&"sigma = 2".to_string()) && header.contains(&"is_max = 0.5".to_string())
    );

    let unknown = ssbsq(&["run", "dopo-seeded", "sigmaa=2"], dir.path());
    assert_eq!(code(&unknown), 2);
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("unknown key `sigmaa`"));
    assert_eq!(code(&ssbsq(&["run", "no-such-experiment"], dir.path())), 2);
    assert_eq!(
        code(&ssbsq(&["run", "dopo-seeded", "sigma=0.5"], dir.path())),
        2
    );
    // Grid too coarse for the pattern: the model rejects it.
    assert_eq!(
        code(&ssbsq(
            &["run", "spatial-diffusion", "n_grid=8", "n_traj=1"],
            dir.path()
        )),
        2
    );
}

#[test]
fn numerical_failure_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    // A huge step makes every trajectory blow up.
    let o = ssbsq(
        &[
            "run",
            "dopo-spectrum",
            "n_traj=4",
            "t_end=60",
            "dt=5",
            "stride=1",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!o.stderr.is_empty());
    assert!(
        std::fs::read_dir(dir.path()).unwrap().next().is_none(),
        "no partial output"
    );
}

#[test]
fn compare_reports_pass_fail_and_shape_errors() {
    let dir = tempfile::tempdir().unwrap();
    let modes = dir.path().join("modes.csv");
    let seeded = dir.path().join("seeded.csv");
    assert_eq!(
        code(&ssbsq(
            &[
                "run",
                "modes-check",
                "n_psi=3",
                "--out",
                modes.to_str().unwrap()
            ],
            dir.path()
        )),
        0
    );
    assert_eq!(
        code(&ssbsq(
            &["run", "dopo-seeded", "--out", seeded.to_str().unwrap()],
            dir.path()
        )),
        0
    );
    let (m, s) = (modes.to_str().unwrap(), seeded.to_str().unwrap());

    let same = ssbsq(&["compare", m, m], dir.path());
    assert_eq!(code(&same), 0);
    assert!(String::from_utf8_lossy(&same.stdout).ends_with("PASS\n"));

    let pass = ssbsq(
        &["compare", m, m, "--tol", "superposition_err:orth_err=1e-10"],
        dir.path(),
    );
    assert_eq!(code(&pass), 0);
    let fail = ssbsq(
        &["compare", m, m, "--tol", "superposition_err:dpsi_err=1e-10"],
        dir.path(),
    );
    assert_eq!(code(&fail), 1);
    assert!(String::from_utf8_lossy(&fail.stdout).contains("FAIL superposition_err:dpsi_err"));

    assert_eq!(code(&ssbsq(&["compare", m, s], dir.path())), 2);
    assert_eq!(
        code(&ssbsq(&["compare", m, m, "--tol", "missing=1"], dir.path())),
        2
    );
    assert_eq!(
        code(&ssbsq(&["compare", m, m, "--tol", "psi"], dir.path())),
        2
    );
}

#[test]
fn list_names_every_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let o = ssbsq(&["list"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for id in [
        "dopo-spectrum",
        "dopo-orientation",
        "dopo-fixed-lo",
        "dopo-seeded",
        "fwm-region",
        "spatial-diffusion",
        "jcm-variance",
        "modes-check",
    ] {
        assert!(text.contains(&format!("{id}: ")), "{id}");
    }
}
