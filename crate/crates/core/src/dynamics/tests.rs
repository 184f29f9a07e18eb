use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::params::preset;
use crate::statekit::{BasisConfig, KetState, SubsystemSpec};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rb() -> PhysicalParams {
    preset("rb85").unwrap().params
}

fn atom() -> AtomIds {
    AtomIds::of("a")
}

fn registry() -> Vec<SubsystemSpec> {
    vec![
        SubsystemSpec::atom_internal("a.int"),
        SubsystemSpec::atom_momentum("a.mom"),
        SubsystemSpec::cavity("c", 1).unwrap(),
    ]
}

fn cfg(int: &str, mom: &str, n: &str) -> BasisConfig {
    BasisConfig::new()
        .with("a.int", int)
        .with("a.mom", mom)
        .with("c", n)
}

fn ket(terms: &[(&str, &str, &str, Complex64)]) -> KetState {
    KetState::new(
        registry(),
        terms.iter().map(|(i, m, n, a)| (cfg(i, m, n), *a)).collect(),
        false,
    )
    .unwrap()
}

fn overlap_sqr(a: &KetState, b: &KetState) -> f64 {
    a.inner(b).unwrap().norm_sqr()
}

fn assert_same(a: &KetState, b: &KetState, tol: f64) {
    let d = b.inner(b).unwrap() + a.inner(a).unwrap() - a.inner(b).unwrap() - b.inner(a).unwrap();
    assert!(d.norm() < tol, "states differ by {d}\n{}\n{}", a.to_json(), b.to_json());
}

#[test]
fn ground_branch_transfer_at_bragg_time() {
    let p = rb();
    let h = FRAC_1_SQRT_2;
    let s = ket(&[("g", "P0", "0", c(h, 0.0)), ("g", "P0", "1", c(h, 0.0))]);
    let out = bragg_closed_form(&s, &atom(), "c", &p, p.bragg_time()).unwrap();
    let expected = ket(&[("g", "P0", "0", c(h, 0.0)), ("g", "P-2", "1", c(0.0, -h))]);
    assert!(1.0 - overlap_sqr(&out, &expected) < 1e-12);
    assert_same(&out, &expected, 1e-12);
}

#[test]
fn excited_branch_transfer_at_bragg_time() {
    let p = rb();
    let h = FRAC_1_SQRT_2;
    let s = ket(&[("e", "P-2", "0", c(h, 0.0)), ("e", "P-2", "1", c(h, 0.0))]);
    let out = bragg_closed_form(&s, &atom(), "c", &p, p.bragg_time()).unwrap();
    let expected = ket(&[("e", "P-2", "1", c(h, 0.0)), ("e", "P0", "0", c(0.0, -h))]);
    assert_same(&out, &expected, 1e-12);
}

#[test]
fn zero_duration_is_identity() {
    let p = rb();
    let s = ket(&[("g", "P0", "1", c(0.6, 0.0)), ("e", "P-2", "0", c(0.0, 0.8))]);
    let out = bragg_closed_form(&s, &atom(), "c", &p, 0.0).unwrap();
    assert_eq!(out, s);
}

#[test]
fn half_time_splits_evenly() {
    let p = rb();
    let s = ket(&[("g", "P0", "1", c(1.0, 0.0))]);
    let out = bragg_closed_form(&s, &atom(), "c", &p, p.bragg_time() / 2.0).unwrap();
    let a0 = out.amplitude(&cfg("g", "P0", "1")).unwrap();
    let a2 = out.amplitude(&cfg("g", "P-2", "1")).unwrap();
    assert!((a0.norm_sqr() - 0.5).abs() < 1e-12);
    assert!((a2.norm_sqr() - 0.5).abs() < 1e-12);
}

#[test]
fn closed_form_matches_matrix_exponential() {
    // effective sector Hamiltonian -β(2I + X) on (P0, P-2)
    let p = rb();
    let beta = p.beta();
    let h = DMatrix::from_row_slice(
        2,
        2,
        &[c(-2.0 * beta, 0.0), c(-beta, 0.0), c(-beta, 0.0), c(-2.0 * beta, 0.0)],
    );
    for i in 0..=200 {
        let bt = 4.0 * PI * i as f64 / 200.0;
        let t = bt / beta;
        let u = (h.clone() * c(0.0, -t)).exp();
        for (sector, labels) in [(("g", "1"), ["P0", "P-2"]), (("e", "0"), ["P0", "P-2"])] {
            for (col, from) in labels.iter().enumerate() {
                let s = ket(&[(sector.0, from, sector.1, c(1.0, 0.0))]);
                let out = bragg_closed_form(&s, &atom(), "c", &p, t).unwrap();
                for (row, to) in labels.iter().enumerate() {
                    let got = out.amplitude(&cfg(sector.0, to, sector.1)).unwrap();
                    assert!((got - u[(row, col)]).norm() < 1e-10, "bt={bt} {from}->{to}");
                }
            }
        }
    }
}

#[test]
fn idle_sectors_untouched() {
    let p = rb();
    let s = ket(&[("g", "P0", "0", c(0.6, 0.0)), ("e", "P-2", "1", c(0.0, 0.8))]);
    let out = bragg_closed_form(&s, &atom(), "c", &p, 0.37 * p.bragg_time()).unwrap();
    assert_eq!(out, s);
}

#[test]
fn routed_bragg_only_hits_selected_level() {
    let p = rb();
    let h = FRAC_1_SQRT_2;
    let s = ket(&[("g", "P0", "1", c(h, 0.0)), ("e", "P0", "0", c(h, 0.0))]);
    let out =
        bragg_closed_form_routed(&s, &atom(), "c", &p, p.bragg_time(), Some(InternalLevel::E))
            .unwrap();
    let expected = ket(&[("g", "P0", "1", c(h, 0.0)), ("e", "P-2", "0", c(0.0, -h))]);
    assert_same(&out, &expected, 1e-12);
}

#[test]
fn bragg_errors() {
    let p = rb();
    let reg = vec![
        SubsystemSpec::atom_internal("a.int"),
        SubsystemSpec::atom_momentum("a.mom"),
        SubsystemSpec::cavity("c", 2).unwrap(),
    ];
    let two = KetState::basis(reg, cfg("g", "P0", "2")).unwrap();
    assert!(matches!(
        bragg_closed_form(&two, &atom(), "c", &p, 1e-6),
        Err(DynamicsError::UnsupportedSector { .. })
    ));
    let reg = vec![
        SubsystemSpec::atom_internal("a.int"),
        SubsystemSpec::momentum_ladder("a.mom", 0, 4).unwrap(),
        SubsystemSpec::cavity("c", 1).unwrap(),
    ];
    let no_pm2 = KetState::basis(reg, cfg("g", "P0", "1")).unwrap();
    assert!(matches!(
        bragg_closed_form(&no_pm2, &atom(), "c", &p, 1e-6),
        Err(DynamicsError::MissingLabel { .. })
    ));
    let mut bad = p;
    bad.delta = bad.omega_r();
    let s = ket(&[("g", "P0", "1", c(1.0, 0.0))]);
    assert!(matches!(
        bragg_closed_form(&s, &atom(), "c", &bad, 1e-6),
        Err(DynamicsError::RegimeViolation { .. })
    ));
    bad.delta = 5.0 * bad.omega_r();
    assert!(bragg_closed_form(&s, &atom(), "c", &bad, 1e-6).is_ok());
    assert!(bragg_closed_form(&s, &atom(), "c", &p, -1.0).is_err());
    assert!(matches!(
        bragg_closed_form(&s, &AtomIds::new("a.mom", "a.int"), "c", &p, 1.0),
        Err(DynamicsError::WrongKind { .. })
    ));
}

#[test]
fn ladder_momenta_outside_pair_unchanged() {
    let p = rb();
    let reg = vec![
        SubsystemSpec::atom_internal("a.int"),
        SubsystemSpec::momentum_ladder("a.mom", -4, 2).unwrap(),
        SubsystemSpec::cavity("c", 1).unwrap(),
    ];
    let s = KetState::new(
        reg,
        vec![
            (cfg("g", "P2", "1"), c(0.6, 0.0)),
            (cfg("g", "P-4", "1"), c(0.0, 0.8)),
        ],
        false,
    )
    .unwrap();
    let out = bragg_closed_form(&s, &atom(), "c", &p, 0.3 * p.bragg_time()).unwrap();
    assert_eq!(out, s);
}

#[test]
fn jc_examples() {
    let p = rb();
    let t = p.jc_transfer_time();
    let s = ket(&[("g", "P0", "1", c(1.0, 0.0))]);
    let out = jc_resonant(&s, "a.int", "c", &p, t).unwrap();
    assert_same(&out, &ket(&[("e", "P0", "0", c(0.0, -1.0))]), 1e-12);
    let out = jc_resonant(&ket(&[("e", "P0", "0", c(1.0, 0.0))]), "a.int", "c", &p, t).unwrap();
    assert_same(&out, &ket(&[("g", "P0", "1", c(0.0, -1.0))]), 1e-12);
    let vac = ket(&[("g", "P-2", "0", c(1.0, 0.0))]);
    assert_eq!(jc_resonant(&vac, "a.int", "c", &p, 0.123).unwrap(), vac);
    let bad = ket(&[("e", "P0", "1", c(1.0, 0.0))]);
    assert!(matches!(
        jc_resonant(&bad, "a.int", "c", &p, t),
        Err(DynamicsError::UnsupportedSector { .. })
    ));
}

#[test]
fn pulse_conventions() {
    let a = atom();
    let g = ket(&[("g", "P0", "0", c(1.0, 0.0))]);
    let e = ket(&[("e", "P0", "0", c(1.0, 0.0))]);
    let p4 = PulseSpec::new(PI, 0.0, None, PulseConvention::Plus);
    assert_same(&classical_pulse(&g, &a, &p4).unwrap(), &ket(&[("e", "P0", "0", c(0.0, 1.0))]), 1e-12);
    assert_same(&classical_pulse(&e, &a, &p4).unwrap(), &ket(&[("g", "P0", "0", c(0.0, 1.0))]), 1e-12);
    let p2 = PulseSpec::new(PI, REAL_FLIP_PHI, None, PulseConvention::Minus);
    assert_same(&classical_pulse(&g, &a, &p2).unwrap(), &ket(&[("e", "P0", "0", c(1.0, 0.0))]), 1e-12);
    assert_same(&classical_pulse(&e, &a, &p2).unwrap(), &ket(&[("g", "P0", "0", c(-1.0, 0.0))]), 1e-12);
    // φ = +π/2 flips the sign of both images
    let p2b = PulseSpec::new(PI, PI / 2.0, None, PulseConvention::Minus);
    assert_same(&classical_pulse(&g, &a, &p2b).unwrap(), &ket(&[("e", "P0", "0", c(-1.0, 0.0))]), 1e-12);
    let zero = PulseSpec::new(0.0, 0.3, Some("P0"), PulseConvention::Minus);
    let s = ket(&[("g", "P0", "0", c(0.6, 0.0)), ("e", "P-2", "1", c(0.0, 0.8))]);
    assert_same(&classical_pulse(&s, &a, &zero).unwrap(), &s, 1e-15);
    let bad = PulseSpec::new(PI, 0.0, Some("P4"), PulseConvention::Plus);
    assert!(matches!(
        classical_pulse(&s, &a, &bad),
        Err(DynamicsError::MissingLabel { .. })
    ));
}

#[test]
fn real_flip_on_deflected_arm() {
    let h = FRAC_1_SQRT_2;
    let deflected = ket(&[("g", "P0", "0", c(h, 0.0)), ("g", "P-2", "1", c(0.0, -h))]);
    let out = classical_pulse(&deflected, &atom(), &PulseSpec::pi_real_flip("P-2")).unwrap();
    let flipped = ket(&[("g", "P0", "0", c(h, 0.0)), ("e", "P-2", "1", c(0.0, -h))]);
    assert_same(&out, &flipped, 1e-12);
}

#[test]
fn ramsey_and_momentum_hadamard() {
    let h = FRAC_1_SQRT_2;
    let g = ket(&[("g", "P0", "0", c(1.0, 0.0))]);
    let plus = ket(&[("g", "P0", "0", c(h, 0.0)), ("e", "P0", "0", c(h, 0.0))]);
    assert_same(&ramsey_zone(&g, "a.int").unwrap(), &plus, 1e-12);
    assert_same(&ramsey_zone(&plus, "a.int").unwrap(), &g, 1e-12);
    let e = ket(&[("e", "P0", "0", c(1.0, 0.0))]);
    let minus = ket(&[("g", "P0", "0", c(h, 0.0)), ("e", "P0", "0", c(-h, 0.0))]);
    assert_same(&ramsey_zone(&e, "a.int").unwrap(), &minus, 1e-12);

    let m_plus = ket(&[("g", "P0", "0", c(h, 0.0)), ("g", "P-2", "0", c(h, 0.0))]);
    assert_same(&momentum_hadamard(&g, "a.mom").unwrap(), &m_plus, 1e-12);
    let m_minus = ket(&[("g", "P0", "0", c(h, 0.0)), ("g", "P-2", "0", c(-h, 0.0))]);
    let pm2 = ket(&[("g", "P-2", "0", c(1.0, 0.0))]);
    assert_same(&momentum_hadamard(&m_minus, "a.mom").unwrap(), &pm2, 1e-12);
    assert!(ramsey_zone(&g, "a.mom").is_err());
}

fn two_mode_registry() -> Vec<SubsystemSpec> {
    vec![
        SubsystemSpec::atom_internal("x"),
        SubsystemSpec::cavity("m0", 1).unwrap(),
        SubsystemSpec::cavity("m1", 1).unwrap(),
    ]
}

fn modes(x: &str, n0: &str, n1: &str) -> BasisConfig {
    BasisConfig::new().with("x", x).with("m0", n0).with("m1", n1)
}

#[test]
fn beam_splitter_maps() {
    let s = KetState::basis(two_mode_registry(), modes("g", "1", "0")).unwrap();
    let out = beam_splitter(&s, "m0", "m1", "D1", "D2").unwrap();
    assert_eq!(out.ids(), ["x", "D1", "D2"]);
    let d = |a: &str, b: &str| BasisConfig::new().with("x", "g").with("D1", a).with("D2", b);
    assert!((out.amplitude(&d("1", "0")).unwrap() - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    assert!((out.amplitude(&d("0", "1")).unwrap() - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
    let s = KetState::basis(two_mode_registry(), modes("g", "0", "1")).unwrap();
    let out = beam_splitter(&s, "m0", "m1", "D1", "D2").unwrap();
    assert!((out.amplitude(&d("1", "0")).unwrap() - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
    assert!((out.amplitude(&d("0", "1")).unwrap() - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    let vac = KetState::basis(two_mode_registry(), modes("e", "0", "0")).unwrap();
    let out = beam_splitter(&vac, "m0", "m1", "D1", "D2").unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out.amplitude(&BasisConfig::new().with("x", "e").with("D1", "0").with("D2", "0")).unwrap(), c(1.0, 0.0));
    let two = KetState::basis(two_mode_registry(), modes("g", "1", "1")).unwrap();
    assert!(matches!(
        beam_splitter(&two, "m0", "m1", "D1", "D2"),
        Err(DynamicsError::UnsupportedSector { .. })
    ));
    assert!(beam_splitter(&s, "m0", "m1", "x", "D2").is_err());
}

#[test]
fn single_photon_detection_is_symmetric() {
    let s = KetState::basis(two_mode_registry(), modes("g", "1", "0")).unwrap();
    let out = beam_splitter(&s, "m0", "m1", "D1", "D2").unwrap();
    let det = detect_photons(&out, &["D1", "D2"]).unwrap();
    assert_eq!(det.len(), 2);
    for o in &det {
        assert!((o.probability - 0.5).abs() < 1e-15);
        assert!(o.success);
        let st = o.state.as_ref().unwrap();
        assert_eq!(st.ids(), ["x"]);
        assert!(st.is_normalized());
    }
    assert_eq!(det[0].label(), "D1=0,D2=1");
}

#[test]
fn vacuum_detection_is_a_failure() {
    let s = KetState::basis(two_mode_registry(), modes("g", "0", "0")).unwrap();
    let det = detect_photons(&s, &["m0", "m1"]).unwrap();
    assert_eq!(det.len(), 1);
    assert!((det[0].probability - 1.0).abs() < 1e-15);
    assert!(!det[0].success);
}

#[test]
fn oracle_zero_duration_returns_initial() {
    let start = AmplitudeLadder::ground_superposition(6).unwrap();
    let run = bragg_ode_oracle(&start, &rb(), 0.0, OracleOptions::default()).unwrap();
    assert_eq!(run.ladder, start);
    assert_eq!(run.steps, 0);
    assert!(AmplitudeLadder::new(Branch::GroundInitial, 2).is_err());
    let bad = OracleOptions {
        tol: 0.0,
        ..OracleOptions::default()
    };
    assert!(bragg_ode_oracle(&start, &rb(), 1e-6, bad).is_err());
}

#[test]
fn oracle_tracks_closed_form_at_moderate_detuning() {
    let p = rb().at_ratio(1e3);
    for branch in [Branch::GroundInitial, Branch::ExcitedInitial] {
        let pt = adiabatic_point(&p, PI / 2.0, branch, OracleOptions::default()).unwrap();
        assert!(pt.norm_drift < 1e-7, "{pt:?}");
        assert!(pt.infidelity < 5e-2, "{pt:?}");
        assert!((pt.transfer_probability - 1.0).abs() < 5e-2, "{pt:?}");
    }
}

#[test]
fn oracle_without_coupling_only_adds_kinetic_phase() {
    let mut p = rb();
    p.mu = 1e-30;
    let mut start = AmplitudeLadder::new(Branch::GroundInitial, 4).unwrap();
    start.set(LadderArray::Bright, 2, c(FRAC_1_SQRT_2, 0.0)).unwrap();
    start.set(LadderArray::Spectator, -4, c(0.0, FRAC_1_SQRT_2)).unwrap();
    let t = 1e-4;
    let run = bragg_ode_oracle(&start, &p, t, OracleOptions { l_max: 4, ..Default::default() }).unwrap();
    let wr = p.omega_r();
    let expect_b = c(FRAC_1_SQRT_2, 0.0) * Complex64::cis(-8.0 * wr * t);
    let expect_s = c(0.0, FRAC_1_SQRT_2) * Complex64::cis(-8.0 * wr * t);
    assert!((run.ladder.get(LadderArray::Bright, 2) - expect_b).norm() < 1e-12);
    assert!((run.ladder.get(LadderArray::Spectator, -4) - expect_s).norm() < 1e-12);
}

#[test]
fn ladder_ket_round_trip() {
    let mut x = AmplitudeLadder::excited_superposition(5).unwrap();
    x.set(LadderArray::Intermediate, -1, c(0.0, 0.1)).unwrap();
    let a = AtomIds::of("q");
    let k = x.to_ket(&a, "cav").unwrap();
    let back = AmplitudeLadder::from_ket(&k, Branch::ExcitedInitial, 5, &a, "cav").unwrap();
    assert_eq!(back, x);
    assert!(AmplitudeLadder::from_ket(&k, Branch::GroundInitial, 5, &a, "cav").is_err());
    assert_eq!(x.amplitude(InternalLevel::E, 1, -2), c(FRAC_1_SQRT_2, 0.0));
}

#[test]
fn sweep_csv_has_one_row_per_point() {
    let rows = adiabatic_sweep(&rb(), &[100.0, 300.0], PI / 2.0, Branch::GroundInitial, OracleOptions { tol: 1e-6, ..Default::default() }).unwrap();
    let csv = sweep_csv(&rows);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("delta_over_omega_r,beta_t,infidelity,norm_drift,leakage"));
    assert!((rows[0].delta_over_omega_r - 100.0).abs() < 1e-9);
    assert!((rows[1].delta_over_omega_r - 300.0).abs() < 1e-9);
}

// ---- property tests ----

fn wide_registry() -> Vec<SubsystemSpec> {
    vec![
        SubsystemSpec::atom_internal("a.int"),
        SubsystemSpec::momentum_ladder("a.mom", -4, 2).unwrap(),
        SubsystemSpec::cavity("c", 1).unwrap(),
        SubsystemSpec::cavity("d", 1).unwrap(),
        SubsystemSpec::atom_internal("b.int"),
    ]
}

fn all_configs(reg: &[SubsystemSpec]) -> Vec<BasisConfig> {
    let mut out = vec![BasisConfig::new()];
    for s in reg {
        out = out
            .into_iter()
            .flat_map(|c| s.basis().iter().map(move |l| c.clone().with(s.id(), l.clone())).collect::<Vec<_>>())
            .collect();
    }
    out
}

fn random_state(amps: &[(f64, f64)], keep: impl Fn(&BasisConfig) -> bool) -> KetState {
    let reg = wide_registry();
    let terms: Vec<_> = all_configs(&reg)
        .into_iter()
        .filter(|c| keep(c))
        .zip(amps.iter().cycle())
        .map(|(c, &(re, im))| (c, Complex64::new(re, im)))
        .collect();
    KetState::new(reg, terms, true).unwrap()
}

fn excitations(c: &BasisConfig) -> usize {
    usize::from(c.get("a.int") == Some("e")) + c.get("c").unwrap().parse::<usize>().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn every_unitary_op_preserves_norm(
        amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8..40),
        which in 0usize..7,
        x in 0.0f64..7.0,
        phi in -3.2f64..3.2,
    ) {
        let p = rb();
        let jc_ok = which == 1;
        let s = random_state(&amps, |c| !jc_ok || excitations(c) <= 1);
        let a = atom();
        let out = match which {
            0 => bragg_closed_form(&s, &a, "c", &p, x * p.bragg_time()).unwrap(),
            1 => jc_resonant(&s, "a.int", "c", &p, x * p.jc_transfer_time()).unwrap(),
            2 => classical_pulse(&s, &a, &PulseSpec::new(x, phi, Some("P-2"), PulseConvention::Minus)).unwrap(),
            3 => classical_pulse(&s, &a, &PulseSpec::new(x, phi, None, PulseConvention::Plus)).unwrap(),
            4 => ramsey_zone(&s, "b.int").unwrap(),
            5 => momentum_hadamard(&s, "a.mom").unwrap(),
            _ => bragg_closed_form_routed(&s, &a, "d", &p, x * p.bragg_time(), Some(InternalLevel::E)).unwrap(),
        };
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bragg_keeps_level_photons_and_far_momenta(
        amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8..40),
        x in 0.0f64..4.0,
    ) {
        let p = rb();
        let s = random_state(&amps, |_| true);
        let out = bragg_closed_form(&s, &atom(), "c", &p, x * p.bragg_time()).unwrap();
        for ids in [vec!["a.int", "c", "d", "b.int"]] {
            let before = s.reduced(&ids).unwrap();
            let after = out.reduced(&ids).unwrap();
            for i in 0..before.dim() {
                prop_assert!((before.matrix()[(i, i)] - after.matrix()[(i, i)]).norm() < 1e-12);
            }
        }
        for far in ["P-4", "P2"] {
            let pb = s.project_and_collapse(&BasisConfig::new().with("a.mom", far)).unwrap().probability();
            let pa = out.project_and_collapse(&BasisConfig::new().with("a.mom", far)).unwrap().probability();
            prop_assert!((pa - pb).abs() < 1e-12);
        }
    }

    #[test]
    fn jc_conserves_excitation_number(
        amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8..40),
        x in 0.0f64..6.0,
    ) {
        let p = rb();
        let s = random_state(&amps, |c| excitations(c) <= 1);
        let out = jc_resonant(&s, "a.int", "c", &p, x * p.jc_transfer_time()).unwrap();
        for n in 0..=1usize {
            let weight = |k: &KetState| -> f64 {
                k.iter()
                    .filter(|(c, _)| excitations(&c.to_basis_config()) == n)
                    .map(|(_, a)| a.norm_sqr())
                    .sum()
            };
            prop_assert!((weight(&s) - weight(&out)).abs() < 1e-12);
        }
        for (cfg, _) in out.iter() {
            prop_assert!(excitations(&cfg.to_basis_config()) <= 1);
        }
    }

    #[test]
    fn pulse_then_inverse_is_identity(
        amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8..40),
        theta in 0.0f64..7.0,
        phi in -3.2f64..3.2,
        s4 in any::<bool>(),
    ) {
        let conv = if s4 { PulseConvention::Plus } else { PulseConvention::Minus };
        let s = random_state(&amps, |_| true);
        let a = atom();
        let fwd = classical_pulse(&s, &a, &PulseSpec::new(theta, phi, Some("P0"), conv)).unwrap();
        let back = classical_pulse(&fwd, &a, &PulseSpec::new(-theta, phi, Some("P0"), conv)).unwrap();
        let d = back.inner(&back).unwrap() + s.inner(&s).unwrap() - back.inner(&s).unwrap() - s.inner(&back).unwrap();
        prop_assert!(d.norm() < 1e-12);
    }

    #[test]
    fn hadamards_are_involutions(
        amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8..40),
    ) {
        let s = random_state(&amps, |_| true);
        for twice in [
            ramsey_zone(&ramsey_zone(&s, "a.int").unwrap(), "a.int").unwrap(),
            momentum_hadamard(&momentum_hadamard(&s, "a.mom").unwrap(), "a.mom").unwrap(),
        ] {
            let d = twice.inner(&twice).unwrap() + s.inner(&s).unwrap() - twice.inner(&s).unwrap() - s.inner(&twice).unwrap();
            prop_assert!(d.norm() < 1e-12);
        }
    }

    #[test]
    fn detection_probabilities_sum_to_one(
        amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8..40),
    ) {
        let s = random_state(&amps, |_| true);
        let det = detect_photons(&s, &["c", "d"]).unwrap();
        let total: f64 = det.iter().map(|o| o.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for o in det {
            prop_assert_eq!(o.success, o.counts.iter().map(|(_, n)| n).sum::<usize>() == 1);
            prop_assert!(o.state.unwrap().is_normalized());
        }
    }
}
