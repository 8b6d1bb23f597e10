use super::*;
use crate::init::{P0Term, Trig};
use tempfile::tempdir;

fn config(out: &Path) -> RunConfig {
    RunConfig {
        grid: ChannelGrid::new(8, 8, 8, 1.0).unwrap(),
        eps: EpsSpec::One(0.1),
        t_end: 0.05,
        integrator: IntegratorConfig::default(),
        initial_data: InitialData::RandomSeeded {
            seed: 4,
            bandwidth: 2,
            amplitude: 0.3,
            vertical_modes: 2,
        },
        formulation: Formulation::Gpv,
        outputs: OutputConfig {
            out_dir: Some(out.to_path_buf()),
            ..Default::default()
        },
        samples: 2,
    }
}

#[test]
fn config_defaults_and_round_trip() {
    let text = r#"{
        "grid": {"nx": 8, "ny": 8, "nz": 8, "h": 1.0},
        "eps": [0.2, 0.1, 0.05],
        "initial_data": {"kind": "single_mode", "k": [1, 0], "m": 1, "amplitude": 0.5}
    }"#;
    let c = RunConfig::from_json(text).unwrap();
    assert_eq!(c.t_end, 0.5);
    assert_eq!(c.formulation, Formulation::Gpv);
    assert_eq!(c.eps.values(), vec![0.2, 0.1, 0.05]);
    assert_eq!(c.integrator, IntegratorConfig::default());
    assert_eq!(c.outputs.diagnostics_every, 1);
    c.validate().unwrap();
    assert!(c.eps.single().is_err());
    let back = RunConfig::from_json(&c.to_json_pretty()).unwrap();
    assert_eq!(back, c);

    let one = RunConfig::from_json(&text.replace("[0.2, 0.1, 0.05]", "0.1")).unwrap();
    assert_eq!(one.eps.single().unwrap(), 0.1);
}

#[test]
fn config_rejects_bad_values() {
    let dir = tempdir().unwrap();
    let mut c = config(dir.path());
    c.eps = EpsSpec::Many(vec![0.1, -0.1]);
    assert!(matches!(c.validate(), Err(Error::Config(_))));
    let mut c = config(dir.path());
    c.initial_data = InitialData::RandomSeeded {
        seed: 0,
        bandwidth: 3,
        amplitude: 1.0,
        vertical_modes: 2,
    };
    assert!(c.validate().is_err());
    assert!(RunConfig::from_json(
        r#"{"grid": {"nx": 8, "ny": 8, "nz": 8, "h": 1.0}, "eps": 0.1, "bogus": 1,
        "initial_data": {"kind": "single_mode", "k": [1, 0], "m": 1, "amplitude": 0.5}}"#
    )
    .is_err());
    assert!("spectral".parse::<Formulation>().is_err());
    assert_eq!("limit".parse::<Formulation>().unwrap(), Formulation::Limit);
}

#[test]
fn step_plan_hits_end_time() {
    let ch = Channel::new(ChannelGrid::new(8, 8, 8, 1.0).unwrap()).unwrap();
    let p = PrimitiveState::zeros(&ch.grid, 0.1);
    let cfg = IntegratorConfig {
        dt: TimeStep::Fixed(0.015),
        ..Default::default()
    };
    let (n, dt) = step_plan(&ch, &p, Some(0.1), &cfg, 0.1, 1).unwrap();
    assert_eq!(n, 7);
    assert!((n as f64 * dt - 0.1).abs() < 1e-15);
    let (n, dt) = step_plan(&ch, &p, Some(0.1), &cfg, 0.1, 4).unwrap();
    assert_eq!(n, 2);
    assert!((8.0 * dt - 0.1).abs() < 1e-15);
    assert_eq!(step_plan(&ch, &p, Some(0.1), &cfg, 0.0, 1).unwrap().0, 0);
    // ε-resolution bound is 0.05
    let big = IntegratorConfig {
        dt: TimeStep::Fixed(0.06),
        ..Default::default()
    };
    assert!(matches!(
        step_plan(&ch, &p, Some(0.1), &big, 1.0, 1),
        Err(Error::UnstableStep { .. })
    ));
    let (_, dt) = step_plan(&ch, &p, Some(0.1), &IntegratorConfig::default(), 1.0, 1).unwrap();
    assert_eq!(dt, 0.05);
}

#[test]
fn zero_end_time_writes_initial_snapshot_only() {
    let dir = tempdir().unwrap();
    let mut c = config(dir.path());
    c.t_end = 0.0;
    let out = run_simulation(&c).unwrap();
    assert_eq!(out.summary.steps, 0);
    assert_eq!(out.summary.snapshots, vec![dir.path().join("snapshot_000000.snap")]);
    let csv = std::fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn simulation_schedule_and_csv_round_trip() {
    let dir = tempdir().unwrap();
    let mut c = config(dir.path());
    c.integrator.dt = TimeStep::Fixed(0.01);
    c.outputs.diagnostics_every = 2;
    c.outputs.snapshot_every = 2;
    let out = run_simulation(&c).unwrap();
    assert_eq!(out.summary.steps, 5);
    let names: Vec<_> = out
        .summary
        .snapshots
        .iter()
        .map(|p| p.file_name().unwrap().to_owned())
        .collect();
    assert_eq!(
        names,
        [
            "snapshot_000000.snap",
            "snapshot_000002.snap",
            "snapshot_000004.snap",
            "snapshot_000005.snap"
        ]
    );
    let csv = std::fs::read_to_string(&out.summary.diagnostics_path).unwrap();
    let rows: Vec<DiagnosticsRecord> = csv
        .lines()
        .skip(1)
        .map(|l| DiagnosticsRecord::from_csv_row(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0], out.summary.initial);
    assert_eq!(*rows.last().unwrap(), out.summary.last);
    assert!((out.summary.last.t - 0.05).abs() < 1e-14);
    assert!(dir.path().join("summary.json").exists());
    let saved = RunConfig::load(dir.path().join("config.json")).unwrap();
    assert_eq!(saved, c);
}

#[test]
fn blowup_check() {
    let mut d = DiagnosticsRecord {
        t: 1.0,
        e_frak: 5.0,
        l2_energy: 1.0,
        h3_norm: 1.0,
        div_residual: 0.0,
        bc_residual: 0.0,
        mean_residual: 0.0,
        compat_residual: 0.0,
    };
    assert!(check_blowup(&d, 1.0).is_ok());
    d.e_frak = 10.5;
    assert!(matches!(check_blowup(&d, 1.0), Err(Error::Instability { .. })));
    d.e_frak = f64::NAN;
    assert!(check_blowup(&d, 1.0).is_err());
    d.e_frak = 3.0;
    assert!(check_blowup(&d, 0.0).is_ok());
}

#[test]
fn sweep_needs_three_eps() {
    let dir = tempdir().unwrap();
    let mut c = config(dir.path());
    c.eps = EpsSpec::Many(vec![0.2, 0.1]);
    assert!(matches!(run_eps_sweep(&c, 1), Err(Error::Config(_))));
    c.eps = EpsSpec::One(0.1);
    assert!(run_eps_sweep(&c, 1).is_err());
}

#[test]
fn qg_compare_needs_balanced_data() {
    let dir = tempdir().unwrap();
    let mut c = config(dir.path());
    c.eps = EpsSpec::Many(vec![0.2, 0.1, 0.05]);
    assert!(matches!(run_wellprepared_comparison(&c, 1), Err(Error::Config(_))));
}

#[test]
fn zero_balanced_data_gives_zero_errors() {
    let dir = tempdir().unwrap();
    let mut c = config(dir.path());
    c.eps = EpsSpec::Many(vec![0.2, 0.1]);
    c.initial_data = InitialData::Balanced {
        p0: vec![P0Term {
            amplitude: 0.0,
            kx: 1,
            ky: 1,
            m: 1,
            x: Trig::Sin,
            y: Trig::Sin,
            z: Trig::Sin,
        }],
    };
    let r = run_wellprepared_comparison(&c, 1).unwrap();
    for row in &r.sweep.rows {
        assert_eq!(
            row.err_phi_h1 + row.err_psi_h1 + row.err_z_h2 + row.err_theta_h2 + row.err_v_h2,
            0.0
        );
    }
    assert_eq!(r.phi_order, None);
    assert_eq!(r.fast_error_max, 0.0);
}

#[test]
fn slope_fit() {
    let x = [0.2, 0.1, 0.05];
    let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
    assert!((loglog_slope(&x, &y).unwrap() - 1.5).abs() < 1e-12);
    assert_eq!(loglog_slope(&x, &[1.0, 0.0, 1.0]), None);
    assert_eq!(loglog_slope(&[0.1], &[1.0]), None);
}

#[test]
fn sweep_row_csv_round_trip() {
    let r = SweepRow {
        eps: 0.1,
        err_phi_h1: 1.0 / 3.0,
        err_psi_h1: 2e-9,
        err_z_h2: std::f64::consts::PI,
        err_theta_h2: 1e-300,
        err_v_h2: 0.0,
        sup_e_frak: 12345.678,
        sup_err_phi_h1: 0.5,
        sup_err_psi_h1: 0.25,
        sup_err_z_h2: 0.125,
        dt: 0.01,
    };
    assert_eq!(SweepRow::from_csv_row(&r.to_csv_row()).unwrap(), r);
}
