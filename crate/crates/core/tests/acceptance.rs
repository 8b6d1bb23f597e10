//! Acceptance suite: one PASS/FAIL line per criterion, run at the
//! 32×32×33 reference resolution (criterion 6 also at 48×48×49).
//!
//! `cargo test -p gpvqg --test acceptance -- 4 7` runs a subset.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gpvqg::gpv::{extract_gpv, reconstruct_primitive};
use gpvqg::harness::{
    self, advance, initial_state, loglog_slope, run_eps_sweep, run_linear_validation, run_simulation,
    run_wellprepared_comparison, EpsSpec, Formulation, OutputConfig, RunConfig,
};
use gpvqg::init::{random_seeded, single_mode, InitialData, P0Term, Trig};
use gpvqg::integrate::{IntegratorConfig, TimeStep};
use gpvqg::norms::{boundary_norm, interpolant_sup_norm, sobolev_norm_sq, vector_sobolev_norm};
use gpvqg::snapshot::{named_arrays, read_snapshot, write_snapshot, AnyState};
use gpvqg::{BoundaryField, Channel, ChannelGrid, Error, GpvState, PrimitiveState, ScalarField};

// Tolerances.
const OP_IDENTITY_TOL: f64 = 1e-9;
const OP_ASYMMETRY_MIN: f64 = 1e-2;
const TRACE_TOL: f64 = 1e-13;
const BILINEAR_TOL: f64 = 1e-13;
const EXTENSION_SPREAD: f64 = 10.0;
const ROUND_TRIP_TOL: f64 = 1e-9;
const LINEAR_DRIFT_TOL: f64 = 1e-12;
const LINEAR_SOLUTION_TOL: f64 = 1e-10;
const ENERGY_DRIFT_TOL: f64 = 1e-7;
const H0_GROWTH_TOL: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-8;
const DUAL_TOL: f64 = 1e-4;
const DUAL_REFINEMENT: f64 = 8.0;
const UNIFORM_BOUND: f64 = 4.0;
const FAST_ERROR_TOL: f64 = 1e-8;
const QG_ORDER_MIN: f64 = 0.8;
const ORDER_RANGE: (f64, f64) = (3.7, 4.3);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn channel(n: usize, nz: usize) -> Channel {
    Channel::new(ChannelGrid::new(n, n, nz, 1.0).unwrap()).unwrap()
}

fn reference() -> Channel {
    channel(32, 32)
}

fn base_config(grid: ChannelGrid, out: &Path) -> RunConfig {
    RunConfig {
        grid,
        eps: EpsSpec::One(0.1),
        t_end: 0.5,
        integrator: IntegratorConfig::default(),
        initial_data: unbalanced_data(),
        formulation: Formulation::Gpv,
        outputs: OutputConfig {
            out_dir: Some(out.to_path_buf()),
            ..Default::default()
        },
        samples: 5,
    }
}

// amplitude 0.5 cascades past 32³ resolution by t ≈ 0.3; 0.2 stays resolved to t = 0.5
fn unbalanced_data() -> InitialData {
    InitialData::RandomSeeded {
        seed: 11,
        bandwidth: 3,
        amplitude: 0.2,
        vertical_modes: 3,
    }
}

fn rel_max(a: &ScalarField, b: &ScalarField) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(f64::MIN_POSITIVE)
}

fn interior_rel(a: &ScalarField, b: &ScalarField, nz: usize) -> f64 {
    let mut d: f64 = 0.0;
    for ((i, j, k), v) in a.data.indexed_iter() {
        if k > 0 && k < nz {
            d = d.max((v - b.data[(i, j, k)]).abs());
        }
    }
    d / b.max_abs()
}

/// Random field: Fourier modes up to `band` times polynomials in `z` of
/// degree ≤ `deg`, optionally multiplied by `z(h − z)`.
fn random_poly_field(ch: &Channel, rng: &mut ChaCha8Rng, band: i64, deg: usize, vanish: bool) -> ScalarField {
    let mut terms = Vec::new();
    for kx in -band..=band {
        for ky in -band..=band {
            let coef: Vec<f64> = (0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect();
            let phase: f64 = rng.random_range(0.0..2.0 * PI);
            terms.push((kx as f64, ky as f64, phase, coef));
        }
    }
    let h = ch.grid.h;
    ScalarField::from_fn(&ch.grid, |x, y, z| {
        let bump = if vanish { z * (h - z) } else { 1.0 };
        terms
            .iter()
            .map(|(kx, ky, ph, c)| {
                let p = c.iter().rev().fold(0.0, |acc, a| acc * z + a);
                (2.0 * PI * (kx * x + ky * y) + ph).cos() * p
            })
            .sum::<f64>()
            * bump
    })
}

fn criterion_1() -> Outcome {
    let ch = reference();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let u = random_poly_field(&ch, &mut rng, 8, 6, true);
        let back = ch.inv_laplace_dirichlet(&ch.laplace3(&u)).unwrap();
        e1 = e1.max(rel_max(&back, &u));
        let g = random_poly_field(&ch, &mut rng, 8, 6, false);
        let lap = ch.laplace3(&ch.inv_laplace_dirichlet(&g).unwrap());
        // the Dirichlet inverse imposes the equation at interior nodes only
        e2 = e2.max(interior_rel(&lap, &g, ch.grid.nz));
    }
    let u = random_poly_field(&ch, &mut rng, 4, 4, false);
    let asym = rel_max(&ch.inv_laplace_dirichlet(&ch.laplace3(&u)).unwrap(), &u);
    let pass = e1 <= OP_IDENTITY_TOL && e2 <= OP_IDENTITY_TOL && asym >= OP_ASYMMETRY_MIN;
    outcome(
        pass,
        format!("Δ_D⁻¹Δ on Dirichlet fields {e1:.2e}, ΔΔ_D⁻¹ {e2:.2e} (≤ {OP_IDENTITY_TOL:.0e}); nonzero-lid residual {asym:.2e} (≥ {OP_ASYMMETRY_MIN:.0e})"),
    )
}

fn random_lid(ch: &Channel, rng: &mut ChaCha8Rng, band: i64, decay: f64) -> BoundaryField {
    let mut terms = Vec::new();
    for kx in -band..=band {
        for ky in -band..=band {
            let k = ((kx * kx + ky * ky) as f64).sqrt();
            let a: f64 = rng.random_range(-1.0..1.0) / (1.0 + k).powf(decay);
            terms.push((kx as f64, ky as f64, rng.random_range(0.0..2.0 * PI), a));
        }
    }
    BoundaryField::from_fn(&ch.grid, |x, y| {
        terms
            .iter()
            .map(|(kx, ky, ph, a)| a * (2.0 * PI * (kx * x + ky * y) + ph).cos())
            .sum()
    })
}

fn criterion_2() -> Outcome {
    let ch = reference();
    let nz = ch.grid.nz;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut trace: f64 = 0.0;
    let mut bilin: f64 = 0.0;
    let mut ratios = Vec::new();
    for s in 0..20 {
        let band = 1 + (s % 10) as i64;
        let decay = rng.random_range(0.0..2.0);
        let a = random_lid(&ch, &mut rng, band, decay);
        let b = random_lid(&ch, &mut rng, band, decay);
        // the spectral lift itself, before the trace levels are overwritten
        let raw: ScalarField = ch.inv(&ch.s_extend_boundary(&ch.fwd2(&a), &ch.fwd2(&b)));
        let e = ch.extend_boundary(&a, &b).unwrap();
        let scale = a.max_abs().max(b.max_abs());
        for f in [&raw, &e] {
            trace = trace.max((&f.level(0) - &a.data).iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale);
            trace = trace.max((&f.level(nz) - &b.data).iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale);
        }
        let a2 = random_lid(&ch, &mut rng, band, decay);
        let (al, be) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let lhs = ch.extend_boundary(&a.scale(al).add(&a2.scale(be)), &b).unwrap();
        let rhs = e.scale(al).add(&ch.extend_boundary(&a2, &b).unwrap().scale(be)).add(
            &ch.extend_boundary(&BoundaryField::zeros(&ch.grid), &b)
                .unwrap()
                .scale(1.0 - al - be),
        );
        bilin = bilin.max(lhs.max_abs_diff(&rhs) / lhs.max_abs());
        let h1 = sobolev_norm_sq(&ch, &e, 1).sqrt();
        let half = boundary_norm(&ch, &a, 0.5) + boundary_norm(&ch, &b, 0.5);
        ratios.push(h1 / half);
    }
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    let spread = hi / lo;
    let pass = trace <= TRACE_TOL && bilin <= BILINEAR_TOL && spread <= EXTENSION_SPREAD;
    outcome(
        pass,
        format!(
            "trace error {trace:.2e} (≤ {TRACE_TOL:.0e}); bilinearity {bilin:.2e}; ‖E_b‖_H¹/‖A,B‖_H½ in [{lo:.3}, {hi:.3}], spread {spread:.2} (≤ {EXTENSION_SPREAD})"
        ),
    )
}

fn gpv_rel_diff(ch: &Channel, a: &GpvState, b: &GpvState) -> f64 {
    let n = |g: &GpvState| {
        sobolev_norm_sq(ch, &g.phi, 0).sqrt()
            + vector_sobolev_norm(ch, &g.psi, 0).unwrap()
            + g.h0.max_abs()
            + g.hh.max_abs()
            + g.z.max_abs()
    };
    let d = sobolev_norm_sq(ch, &a.phi.sub(&b.phi), 0).sqrt()
        + vector_sobolev_norm(ch, &a.psi.sub(&b.psi), 0).unwrap()
        + a.h0.max_abs_diff(&b.h0)
        + a.hh.max_abs_diff(&b.hh)
        + a.z.max_abs_diff(&b.z);
    d / n(b)
}

fn prim_rel_diff(ch: &Channel, a: &PrimitiveState, b: &PrimitiveState) -> f64 {
    let pairs = [(&a.v.x, &b.v.x), (&a.v.y, &b.v.y), (&a.w, &b.w), (&a.theta, &b.theta)];
    let d: f64 = pairs.iter().map(|(x, y)| sobolev_norm_sq(ch, &x.sub(y), 0)).sum();
    let n: f64 = pairs.iter().map(|(_, y)| sobolev_norm_sq(ch, y, 0)).sum();
    (d / n).sqrt()
}

fn criterion_3() -> Outcome {
    let ch = reference();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut er, mut eg) = (0.0f64, 0.0f64);
    for s in 0..20u64 {
        let band = rng.random_range(1..=10);
        let vm = rng.random_range(1..=4);
        let p = random_seeded(&ch, 100 + s, band, rng.random_range(0.1..2.0), vm, 0.1);
        let g = extract_gpv(&ch, &p).unwrap();
        er = er.max(prim_rel_diff(&ch, &reconstruct_primitive(&ch, &g).unwrap(), &p));
        // a consistent GPV state from an independent draw
        let q = random_seeded(&ch, 500 + s, band, 1.0, vm, 0.1);
        let gq = extract_gpv(&ch, &q).unwrap();
        let back = extract_gpv(&ch, &reconstruct_primitive(&ch, &gq).unwrap()).unwrap();
        eg = eg.max(gpv_rel_diff(&ch, &back, &gq));
    }
    outcome(
        er <= ROUND_TRIP_TOL && eg <= ROUND_TRIP_TOL,
        format!(
            "reconstruct∘extract {er:.2e}, extract∘reconstruct {eg:.2e} over 20 states each (≤ {ROUND_TRIP_TOL:.0e})"
        ),
    )
}

fn criterion_4() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let eps = 0.05;
    let cfg = RunConfig {
        eps: EpsSpec::One(eps),
        t_end: 1.0,
        integrator: IntegratorConfig {
            dt: TimeStep::Fixed(eps / 4.0),
            nonlinear: false,
            ..Default::default()
        },
        initial_data: InitialData::RandomSeeded {
            seed: 4,
            bandwidth: 4,
            amplitude: 1.0,
            vertical_modes: 3,
        },
        ..base_config(reference().grid, dir.path())
    };
    let r = run_linear_validation(&cfg).unwrap();
    let drift = r.phi_drift.max(r.h_drift);
    let fast = r.psi_plus_drift.max(r.z_plus_drift);
    let sol = r.primitive_error.max(r.w_error);
    outcome(
        drift <= LINEAR_DRIFT_TOL && fast <= LINEAR_DRIFT_TOL && sol <= LINEAR_SOLUTION_TOL,
        format!(
            "{} steps: Φ,H drift {drift:.2e}, Ψ₊,Z₊ drift {fast:.2e} (≤ {LINEAR_DRIFT_TOL:.0e}); (v,w,θ) and w vs Δ_D⁻¹divΨ_l {sol:.2e} (≤ {LINEAR_SOLUTION_TOL:.0e})",
            r.steps
        ),
    )
}

fn criterion_5() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        eps: EpsSpec::One(0.1),
        t_end: 1.0,
        integrator: IntegratorConfig {
            dt: TimeStep::Fixed(0.01),
            ..Default::default()
        },
        // weak enough that the cascade stays resolved over t = 1
        initial_data: InitialData::RandomSeeded {
            seed: 11,
            bandwidth: 3,
            amplitude: 0.1,
            vertical_modes: 3,
        },
        outputs: OutputConfig {
            out_dir: Some(dir.path().to_path_buf()),
            diagnostics_every: 1,
            snapshot_every: 5,
        },
        ..base_config(reference().grid, dir.path())
    };
    let out = run_simulation(&cfg).unwrap();
    let csv = std::fs::read_to_string(&out.summary.diagnostics_path).unwrap();
    let rows: Vec<_> = csv
        .lines()
        .skip(1)
        .map(|l| gpvqg::DiagnosticsRecord::from_csv_row(l).unwrap())
        .collect();
    let e0 = rows[0].l2_energy;
    let drift = rows.iter().map(|r| ((r.l2_energy - e0) / e0).abs()).fold(0.0, f64::max);
    let resid = rows
        .iter()
        .map(|r| r.div_residual.max(r.bc_residual))
        .fold(0.0, f64::max);
    // sup of the interpolant: nodal maxima of a moving trace wobble at O(Δx²)
    let ch = Channel::new(cfg.grid).unwrap();
    let mut h0_max = Vec::new();
    for p in &out.summary.snapshots {
        match read_snapshot(p).unwrap().1 {
            AnyState::Gpv(g) => h0_max.push(interpolant_sup_norm(&ch, &g.h0)),
            _ => unreachable!(),
        }
    }
    let growth = h0_max.iter().map(|m| m / h0_max[0] - 1.0).fold(0.0, f64::max);
    outcome(
        drift <= ENERGY_DRIFT_TOL && growth <= H0_GROWTH_TOL && resid <= RESIDUAL_TOL,
        format!(
            "{} steps: L² energy drift {drift:.2e} (≤ {ENERGY_DRIFT_TOL:.0e}); max|H₀| growth {growth:.2e} (≤ {H0_GROWTH_TOL:.0e}); div/lid residual {resid:.2e} (≤ {RESIDUAL_TOL:.0e})",
            out.summary.steps
        ),
    )
}

fn h1_prim_diff(ch: &Channel, a: &PrimitiveState, b: &PrimitiveState) -> f64 {
    [(&a.v.x, &b.v.x), (&a.v.y, &b.v.y), (&a.w, &b.w), (&a.theta, &b.theta)]
        .iter()
        .map(|(x, y)| sobolev_norm_sq(ch, &x.sub(y), 1))
        .sum::<f64>()
        .sqrt()
}

fn dual_run(n: usize, nz: usize, steps: usize) -> f64 {
    let ch = channel(n, nz);
    let eps = 0.1;
    let t_end = 0.25;
    let dt = t_end / steps as f64;
    let p0 = gpvqg::init::generate_initial(&ch, &unbalanced_data(), eps).unwrap();
    let cfg = IntegratorConfig {
        dt: TimeStep::Fixed(dt),
        ..Default::default()
    };
    let mut a = initial_state(&ch, p0.clone(), Formulation::Primitive).unwrap();
    let mut b = initial_state(&ch, p0, Formulation::Gpv).unwrap();
    for _ in 0..steps {
        a = advance(&ch, &a, dt, &cfg).unwrap().0;
        b = advance(&ch, &b, dt, &cfg).unwrap().0;
    }
    let p = a.into_primitive(&ch, eps).unwrap();
    let q = b.into_primitive(&ch, eps).unwrap();
    h1_prim_diff(&ch, &p, &q)
}

fn criterion_6() -> Outcome {
    let coarse = dual_run(32, 32, 25);
    let fine = dual_run(48, 48, 50);
    let ratio = coarse / fine;
    outcome(
        coarse <= DUAL_TOL && ratio >= DUAL_REFINEMENT,
        format!("‖gpv − primitive‖_H¹ = {coarse:.2e} at 32³, dt 0.01 (≤ {DUAL_TOL:.0e}); {fine:.2e} at 48³, dt 0.005; reduction {ratio:.1}× (≥ {DUAL_REFINEMENT})"),
    )
}

fn sweep_config(out: &Path) -> RunConfig {
    RunConfig {
        eps: EpsSpec::Many(vec![0.2, 0.1, 0.05, 0.025]),
        t_end: 0.5,
        integrator: IntegratorConfig {
            eps_resolution: 0.25,
            ..Default::default()
        },
        samples: 10,
        ..base_config(reference().grid, out)
    }
}

fn sweep_report() -> &'static harness::SweepReport {
    use std::sync::OnceLock;
    static REPORT: OnceLock<harness::SweepReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        run_eps_sweep(&sweep_config(dir.path()), 1).unwrap()
    })
}

fn criterion_7() -> Outcome {
    let r = sweep_report();
    let sup: Vec<f64> = r.rows.iter().map(|row| row.sup_e_frak).collect();
    let finite = sup.iter().all(|s| s.is_finite());
    let ratio = r.metadata.uniform_bound_ratio;
    outcome(
        finite && ratio <= UNIFORM_BOUND,
        format!(
            "sup_t 𝔈 per ε {:?}; max/min {ratio:.3} (≤ {UNIFORM_BOUND})",
            sup.iter().map(|s| format!("{s:.4e}")).collect::<Vec<_>>()
        ),
    )
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn criterion_8() -> Outcome {
    let r = sweep_report();
    let col = |f: fn(&harness::SweepRow) -> f64| r.rows.iter().map(f).collect::<Vec<f64>>();
    let phi = col(|x| x.err_phi_h1);
    let psi = col(|x| x.err_psi_h1);
    let z = col(|x| x.err_z_h2);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ");
    outcome(
        strictly_decreasing(&phi) && strictly_decreasing(&psi) && strictly_decreasing(&z),
        format!(
            "ε 0.2→0.025: Φ H¹ [{}], Ψ₊ H¹ [{}], Z₊ H² [{}]",
            fmt(&phi),
            fmt(&psi),
            fmt(&z)
        ),
    )
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    // peak velocity ≈ 0.2, the level of the unbalanced data; ten times stronger cascades past 32³
    let p0 = vec![
        P0Term {
            amplitude: 0.02,
            kx: 1,
            ky: 1,
            m: 1,
            x: Trig::Sin,
            y: Trig::Sin,
            z: Trig::Sin,
        },
        P0Term {
            amplitude: 0.01,
            kx: 2,
            ky: 1,
            m: 2,
            x: Trig::Cos,
            y: Trig::Sin,
            z: Trig::Cos,
        },
    ];
    let cfg = RunConfig {
        eps: EpsSpec::Many(vec![0.2, 0.1, 0.05]),
        initial_data: InitialData::Balanced { p0 },
        integrator: IntegratorConfig {
            eps_resolution: 0.25,
            ..Default::default()
        },
        ..base_config(reference().grid, dir.path())
    };
    let r = run_wellprepared_comparison(&cfg, 1).unwrap();
    let phi: Vec<f64> = r.sweep.rows.iter().map(|x| x.err_phi_h1).collect();
    let order = r.phi_order.unwrap_or(f64::NAN);
    outcome(
        r.fast_error_max <= FAST_ERROR_TOL && r.phi_error_decreasing && order >= QG_ORDER_MIN,
        format!(
            "fast errors ≤ {:.2e} (≤ {FAST_ERROR_TOL:.0e}); Φ H¹ errors {:?}; fitted order {order:.3} (≥ {QG_ORDER_MIN})",
            r.fast_error_max,
            phi.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>()
        ),
    )
}

/// Slope of the successive-difference norms `‖y_n − y_{2n}‖` against `dt`.
fn self_convergence(ch: &Channel, s0: &AnyState, t: f64, counts: &[usize]) -> f64 {
    let cfg = IntegratorConfig {
        dt: TimeStep::Auto,
        constraint_projection: false,
        cfl: 1.0,
        dt_max: f64::INFINITY,
        eps_resolution: 1.0,
        ..Default::default()
    };
    let run = |n: usize| {
        let dt = t / n as f64;
        let mut s = s0.clone();
        for _ in 0..n {
            s = advance(ch, &s, dt, &cfg).unwrap().0;
        }
        s
    };
    let finals: Vec<AnyState> = counts.iter().map(|&n| run(n)).collect();
    // all stored arrays of the state, so each stepper is judged in its own variables
    let diff = |a: &AnyState, b: &AnyState| {
        named_arrays(a)
            .iter()
            .zip(named_arrays(b).iter())
            .flat_map(|(x, y)| x.2.iter().zip(y.2.iter()).map(|(u, v)| (u - v).powi(2)))
            .sum::<f64>()
            .sqrt()
    };
    let dts: Vec<f64> = counts[..counts.len() - 1].iter().map(|&n| t / n as f64).collect();
    let d: Vec<f64> = finals.windows(2).map(|w| diff(&w[0], &w[1])).collect();
    loglog_slope(&dts, &d).unwrap_or(f64::NAN)
}

fn criterion_10() -> Outcome {
    let ch = reference();
    let eps = 0.1;
    let p = single_mode(&ch, [1, 1], 1, 0.1, eps);
    let counts = [4, 8, 16, 32, 64];
    let gpv = self_convergence(
        &ch,
        &initial_state(&ch, p.clone(), Formulation::Gpv).unwrap(),
        0.2,
        &counts,
    );
    let prim = self_convergence(
        &ch,
        &initial_state(&ch, p.clone(), Formulation::Primitive).unwrap(),
        0.2,
        &counts,
    );
    let lim = self_convergence(&ch, &initial_state(&ch, p, Formulation::Limit).unwrap(), 0.5, &counts);
    let ok = |s: f64| (ORDER_RANGE.0..=ORDER_RANGE.1).contains(&s);
    outcome(
        ok(gpv) && ok(prim) && ok(lim),
        format!(
            "slopes gpv {gpv:.3}, primitive {prim:.3}, limit {lim:.3} (in [{}, {}])",
            ORDER_RANGE.0, ORDER_RANGE.1
        ),
    )
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let ch = reference();
    let p = random_seeded(&ch, 21, 5, 0.7, 3, 0.1);
    let g = extract_gpv(&ch, &p).unwrap();
    let l = gpvqg::gpv::limit_from_gpv(&g);
    let mut exact = true;
    for (name, s) in [("p", AnyState::from(p)), ("g", g.into()), ("l", l.into())] {
        let path = dir.path().join(format!("{name}.snap"));
        let eps = (name != "l").then_some(0.1);
        write_snapshot(&path, &ch.grid, &s, eps).unwrap();
        let (_, back) = read_snapshot(&path).unwrap();
        exact &= back == s;
        let copy = dir.path().join(format!("{name}_copy.snap"));
        write_snapshot(&copy, &ch.grid, &back, eps).unwrap();
        exact &= std::fs::read(&path).unwrap() == std::fs::read(&copy).unwrap();
    }
    let path = dir.path().join("g.snap");
    let mut bytes = std::fs::read(&path).unwrap();
    let n = bytes.len();
    bytes[n - 100] ^= 0x10;
    std::fs::write(&path, &bytes).unwrap();
    let corrupt = matches!(read_snapshot(&path), Err(Error::Checksum { .. }));
    std::fs::write(&path, &bytes[..n - 8]).unwrap();
    let truncated = matches!(read_snapshot(&path), Err(Error::Checksum { .. }));

    let report_bytes = |jobs: usize| {
        let d = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            grid: ChannelGrid::new(16, 16, 16, 1.0).unwrap(),
            eps: EpsSpec::Many(vec![0.2, 0.1, 0.05]),
            t_end: 0.1,
            samples: 2,
            ..base_config(ch.grid, d.path())
        };
        run_eps_sweep(&cfg, jobs).unwrap();
        ["sweep.csv", "sweep.json", "sweep_plot.json"].map(|f| std::fs::read(d.path().join(f)).unwrap())
    };
    let deterministic = report_bytes(1) == report_bytes(1) && report_bytes(1) == report_bytes(3);
    outcome(
        exact && corrupt && truncated && deterministic,
        format!("bit-exact round trip {exact}; corrupted payload detected {corrupt}; truncation detected {truncated}; byte-identical reruns {deterministic}"),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "operator identities", criterion_1),
        (2, "extension operator", criterion_2),
        (3, "GPV round trips", criterion_3),
        (4, "linear regime", criterion_4),
        (5, "conservation", criterion_5),
        (6, "dual-solver cross-validation", criterion_6),
        (7, "uniform boundedness across ε", criterion_7),
        (8, "convergence to the limit system", criterion_8),
        (9, "well-prepared regime", criterion_9),
        (10, "integrator order", criterion_10),
        (11, "persistence", criterion_11),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (n, name, f) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2} [{name}]: {verdict} ({:.1}s) {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
