use std::sync::OnceLock;

use proptest::prelude::*;

use gpvqg::gpv::{extract_gpv, filter_vector, limit_from_gpv, reconstruct_primitive, unfilter_vector};
use gpvqg::harness::SweepRow;
use gpvqg::init::random_seeded;
use gpvqg::norms::{boundary_norm, interpolant_sup_norm};
use gpvqg::snapshot::{read_snapshot, write_snapshot, AnyState};
use gpvqg::{BoundaryField, Channel, ChannelGrid, DiagnosticsRecord};

fn ch() -> &'static Channel {
    static CH: OnceLock<Channel> = OnceLock::new();
    CH.get_or_init(|| Channel::new(ChannelGrid::new(12, 12, 16, 1.0).unwrap()).unwrap())
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1e3..1e3f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn gpv_round_trip(seed in any::<u64>(), amp in 0.01..1.0f64, eps in 0.02..1.0f64) {
        let p = random_seeded(ch(), seed, 3, amp, 3, eps);
        let q = reconstruct_primitive(ch(), &extract_gpv(ch(), &p).unwrap()).unwrap();
        let scale = p.v.max_abs().max(p.w.max_abs()).max(p.theta.max_abs());
        let err = p.v.max_abs_diff(&q.v).max(p.w.max_abs_diff(&q.w)).max(p.theta.max_abs_diff(&q.theta));
        prop_assert!(err <= 1e-9 * scale, "err {err:e}");
    }

    #[test]
    fn snapshots_are_bit_exact(seed in any::<u64>(), kind in 0..3usize, t in finite()) {
        let mut p = random_seeded(ch(), seed, 3, 0.3, 3, 0.1);
        p.t = t;
        let g = extract_gpv(ch(), &p).unwrap();
        let s = match kind {
            0 => AnyState::Primitive(p),
            1 => AnyState::Gpv(g),
            _ => AnyState::Limit(limit_from_gpv(&g)),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.snap");
        write_snapshot(&path, &ch().grid, &s, Some(0.1)).unwrap();
        let (h, back) = read_snapshot(&path).unwrap();
        prop_assert_eq!(h.t.to_bits(), t.to_bits());
        prop_assert_eq!(back, s);
    }

    #[test]
    fn same_seed_same_state(seed in any::<u64>()) {
        let a = random_seeded(ch(), seed, 3, 0.5, 3, 0.1);
        let b = random_seeded(ch(), seed, 3, 0.5, 3, 0.1);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn filter_inverts(seed in any::<u64>(), tau in -50.0..50.0f64) {
        let g = extract_gpv(ch(), &random_seeded(ch(), seed, 3, 0.3, 3, 0.1)).unwrap();
        let back = unfilter_vector(&filter_vector(&g.psi, tau), tau);
        prop_assert!(back.x.max_abs_diff(&g.psi.x).max(back.y.max_abs_diff(&g.psi.y)) < 1e-13);
    }

    #[test]
    fn boundary_norm_is_a_norm(a in -2.0..2.0f64, kx in -3..=3i32, ky in -3..=3i32, s in 0.0..2.0f64) {
        let f = BoundaryField::from_fn(&ch().grid, |x, y| (2.0 * std::f64::consts::PI * (kx as f64 * x + ky as f64 * y)).cos());
        let g = BoundaryField::from_fn(&ch().grid, |x, _| (2.0 * std::f64::consts::PI * x).sin());
        let scaled = BoundaryField { data: f.data.mapv(|v| a * v) };
        let sum = BoundaryField { data: &f.data + &g.data };
        prop_assert!((boundary_norm(ch(), &scaled, s) - a.abs() * boundary_norm(ch(), &f, s)).abs() < 1e-12);
        prop_assert!(boundary_norm(ch(), &sum, s) <= boundary_norm(ch(), &f, s) + boundary_norm(ch(), &g, s) + 1e-12);
    }

    #[test]
    fn interpolant_sup_bounds_nodes(phase in 0.0..1.0f64, a in 0.1..3.0f64) {
        let f = BoundaryField::from_fn(&ch().grid, |x, y| {
            a * (2.0 * std::f64::consts::PI * (x + phase)).sin() * (2.0 * std::f64::consts::PI * (2.0 * y - phase)).cos()
        });
        let m = interpolant_sup_norm(ch(), &f);
        prop_assert!(m >= f.max_abs() - 1e-15);
        prop_assert!((m - a).abs() < 1e-10, "{m} vs {a}");
    }

    #[test]
    fn csv_rows_round_trip(v in prop::array::uniform11(finite())) {
        let row = SweepRow {
            eps: v[0], err_phi_h1: v[1], err_psi_h1: v[2], err_z_h2: v[3], err_theta_h2: v[4], err_v_h2: v[5],
            sup_e_frak: v[6], sup_err_phi_h1: v[7], sup_err_psi_h1: v[8], sup_err_z_h2: v[9], dt: v[10],
        };
        prop_assert_eq!(SweepRow::from_csv_row(&row.to_csv_row()).unwrap(), row);
        let d = DiagnosticsRecord {
            t: v[0], e_frak: v[1], l2_energy: v[2], h3_norm: v[3], div_residual: v[4],
            bc_residual: v[5], mean_residual: v[6], compat_residual: v[7],
        };
        prop_assert_eq!(DiagnosticsRecord::from_csv_row(&d.to_csv_row()).unwrap(), d);
    }
}
