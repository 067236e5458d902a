use std::process::Command;

fn thbfrac() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thbfrac"))
}

fn resolved(args: &[&str]) -> serde_json::Value {
    let out = thbfrac().arg("config").args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn flags_map_onto_the_configuration() {
    let base = resolved(&["--preset", "sen_shear"]);
    assert_eq!(base["material"]["length_scale"], 0.01);
    assert_eq!(base["mesh"]["base"], 25);
    assert_eq!(base["load_case"], "shear");

    let mut expected = base.clone();
    expected["model"]["order"] = "2".into();
    assert_eq!(resolved(&["--preset", "sen_shear", "--order", "2"]), expected);

    let cfg = resolved(&[
        "--preset", "sen-tensile", "--mesh", "tp", "--model", "at2", "--resolution", "coarse", "--stepping",
        "explicit", "--set", "material.length_scale=0.03", "--set", "model.family=at1",
    ]);
    assert_eq!(cfg["mesh"]["kind"], "tp");
    assert_eq!(cfg["mesh"]["max_level"], 3);
    assert_eq!(cfg["refinement"]["policy"], "explicit");
    assert_eq!(cfg["material"]["length_scale"], 0.03);
    // Explicit overrides win over the shorthand flags.
    assert_eq!(cfg["model"]["family"], "at1");
}

#[test]
fn bad_keys_fail_with_the_path() {
    let out = thbfrac().args(["config", "--set", "mesh.colour=red"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mesh"));
}

#[test]
fn zero_step_run_writes_initial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let status = thbfrac()
        .args(["run", "--resolution", "coarse", "--model", "at2", "--order", "2", "--set", "schedule=[]"])
        .args(["--set", "mesh.base=8", "--set", "mesh.max_level=2", "--set", "material.length_scale=0.05"])
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next(),
        Some("step,u,Fx,Fy,dissipation,dofs,elements,elAssemblyTime,elSolverTime,pfAssemblyTime,pfSolverTime,projectionTime")
    );
    assert!(lines.next().unwrap().starts_with("0,0,0,0,"));
    assert!(lines.next().is_none());
    assert!(dir.path().join("contour_0.csv").exists());
    assert!(dir.path().join("mesh_0.txt").exists());
}

#[test]
fn failing_step_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let status = thbfrac()
        .args(["run", "--model", "at2", "--order", "2", "--set", "schedule=[{\"target\": 0.002, \"step\": 0.001}]"])
        .args(["--set", "mesh.base=8", "--set", "mesh.max_level=2", "--set", "material.length_scale=0.05"])
        .args(["--set", "tolerances.max_staggered=1", "--set", "tolerances.staggered=1e-14"])
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(!status.success());
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
}
