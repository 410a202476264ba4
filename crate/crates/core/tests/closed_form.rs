use compdof::channel::sample_matrix;
use compdof::closed_form::{alignment_report, ClosedForm};
use compdof::rng::derive_seed;

#[test]
fn closed_form_beams_align_for_up_to_eight_users() {
    let (mut worst_res, mut worst_leak) = (0.0_f64, 0.0_f64);
    for k in 3..=8 {
        for seed in 0..25 {
            let h = sample_matrix(k, derive_seed(seed, k as u64));
            let cf = ClosedForm::new(&h).unwrap();
            let sol = cf.beams(1).unwrap();
            worst_res = worst_res.max(sol.residual);
            worst_leak = worst_leak.max(sol.leakage);
            let report = alignment_report(&(&h * &sol.beams.v), 2).unwrap();
            assert!(report.holds(), "K = {k}, seed {seed}: {report:?}");
        }
    }
    eprintln!("worst residual {worst_res:e}, worst leakage {worst_leak:e}");
    assert!(worst_res < 1e-8 && worst_leak < 1e-8);
}

#[test]
fn column_and_row_forms_agree() {
    for n in 0..100u64 {
        let k = 3 + (n % 4) as usize;
        let h = sample_matrix(k, derive_seed(7, n));
        let m = if n % 2 == 0 {
            let sol = ClosedForm::new(&h).unwrap().beams(1).unwrap();
            &h * &sol.beams.v
        } else {
            h
        };
        let r = alignment_report(&m, 2).unwrap();
        assert_eq!(r.column_form_holds(), r.row_form_holds(), "case {n}: {r:?}");
        assert_eq!(r.holds(), n % 2 == 0);
    }
}
