use compdof::simulator::{export, sweep, BeamScheme, EigenPolicy, ExportFormat, LinkBudget, SweepResult};

fn three_user_budget(trials: usize, seed: u64) -> LinkBudget {
    let mut b = LinkBudget::new(
        3,
        vec![
            BeamScheme::ZfBroadcast,
            BeamScheme::ClosedForm { policy: EigenPolicy::Fixed },
            BeamScheme::ClosedForm { policy: EigenPolicy::Best },
        ],
        seed,
    );
    b.trials = trials;
    b
}

#[test]
fn three_user_slopes_and_ordering() {
    let r = sweep(&three_user_budget(100, 7)).unwrap();
    for label in ["zf", "cf", "cf-best"] {
        let d = r.estimate_dof_slope(label, (40.0, 60.0)).unwrap();
        eprintln!("{label}: slope {d:.4}");
        assert!((2.7..=3.3).contains(&d), "{label}: {d}");
        let c = r.curve(label).unwrap();
        assert!(c.mean_sum_rate.windows(2).all(|w| w[0] <= w[1]));
    }
    let zf = r.curve("zf").unwrap();
    let cf = r.curve("cf").unwrap();
    let best = r.curve("cf-best").unwrap();
    for (g, snr) in r.snr_db.iter().enumerate() {
        assert!(best.mean_sum_rate[g] >= cf.mean_sum_rate[g]);
        if *snr >= 20.0 {
            assert!(zf.mean_sum_rate[g] > cf.mean_sum_rate[g], "{snr} dB");
        }
    }
    let gap = r.horizontal_gap_db("zf", "cf", (40.0, 60.0)).unwrap();
    let gap_best = r.horizontal_gap_db("zf", "cf-best", (40.0, 60.0)).unwrap();
    eprintln!("gap fixed {gap:.3} dB, best {gap_best:.3} dB");
    assert!((1.0..=5.0).contains(&gap), "{gap}");
    assert!(gap_best <= gap);
}

#[test]
fn sweeps_are_reproducible() {
    let b = three_user_budget(5, 3);
    let a = sweep(&b).unwrap();
    let c = sweep(&b).unwrap();
    assert_eq!(a, c);
    assert_eq!(a.to_csv(), c.to_csv());
    assert_ne!(a, sweep(&three_user_budget(5, 4)).unwrap());
}

#[test]
fn smd_scheme_runs_for_four_users() {
    let mut b = LinkBudget::new(4, vec![BeamScheme::FullDofSmd { mt: 2, mr: 3 }], 1);
    b.trials = 5;
    b.snr_db = vec![20.0, 40.0, 60.0];
    let r = sweep(&b).unwrap();
    let d = r.estimate_dof_slope("smd-2-3", (40.0, 60.0)).unwrap();
    assert!((d - 4.0).abs() < 0.5, "{d}");
}

#[test]
fn export_round_trip() {
    let r = sweep(&three_user_budget(3, 1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    export(&r, ExportFormat::from_path(&json), &json).unwrap();
    export(&r, ExportFormat::from_path(&csv), &csv).unwrap();
    let text = std::fs::read_to_string(&json).unwrap();
    let back = SweepResult::from_json(&text).unwrap();
    assert_eq!(back, r.rounded());
    assert_eq!(back.to_json().unwrap(), text);
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3 * 13);
    assert!(rows.starts_with("scheme,snr_db,mean_sum_rate,stddev,trials\n"));
    let bad = dir.path().join("missing").join("r.csv");
    assert!(matches!(export(&r, ExportFormat::Csv, &bad), Err(compdof::Error::Io { .. })));
}
