use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use super::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn atom_cav_registry() -> Vec<SubsystemSpec> {
    vec![
        SubsystemSpec::atom_internal("a1.int"),
        SubsystemSpec::atom_momentum("a1.mom"),
        SubsystemSpec::cavity("cav", 1).unwrap(),
    ]
}

fn cfg(int: &str, mom: &str, n: &str) -> BasisConfig {
    BasisConfig::new().with("a1.int", int).with("a1.mom", mom).with("cav", n)
}

#[test]
fn make_state_initial_condition() {
    let s = KetState::new(
        atom_cav_registry(),
        vec![
            (cfg("g", "P0", "0"), c(FRAC_1_SQRT_2, 0.0)),
            (cfg("g", "P0", "1"), c(FRAC_1_SQRT_2, 0.0)),
        ],
        true,
    )
    .unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!(s.norm_tag(), NormTag::Normalized);
    assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
}

#[test]
fn make_state_single_and_complex() {
    let s = KetState::basis(atom_cav_registry(), cfg("g", "P0", "0")).unwrap();
    assert_eq!(s.len(), 1);
    assert_eq!(s.norm(), 1.0);

    let s = KetState::new(
        atom_cav_registry(),
        vec![
            (cfg("g", "P0", "0"), c(FRAC_1_SQRT_2, 0.0)),
            (cfg("e", "P0", "0"), c(0.0, FRAC_1_SQRT_2)),
        ],
        false,
    )
    .unwrap();
    assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
}

#[test]
fn make_state_errors() {
    let bad_label = KetState::basis(atom_cav_registry(), cfg("x", "P0", "0"));
    assert!(matches!(bad_label, Err(StateError::UnknownLabel { .. })));
    let bad_id = KetState::basis(
        atom_cav_registry(),
        BasisConfig::new().with("a1.int", "g").with("a1.mom", "P0").with("nope", "0"),
    );
    assert!(matches!(bad_id, Err(StateError::UnknownSubsystem(_))));
    let zero = KetState::new(atom_cav_registry(), vec![(cfg("g", "P0", "0"), c(0.0, 0.0))], false);
    assert_eq!(zero.unwrap_err(), StateError::ZeroState);
    let empty = KetState::new(atom_cav_registry(), vec![], true);
    assert_eq!(empty.unwrap_err(), StateError::EmptyTerms);
    let dup = KetState::basis(
        vec![SubsystemSpec::atom_internal("a"), SubsystemSpec::atom_internal("a")],
        BasisConfig::new().with("a", "g"),
    );
    assert!(matches!(dup, Err(StateError::DuplicateId(_))));
}

/// Dense vector over the full product basis, first subsystem most significant.
fn dense(state: &KetState) -> Vec<Complex64> {
    let dims: Vec<usize> = state.registry().iter().map(|s| s.dim()).collect();
    let mut v = vec![c(0.0, 0.0); dims.iter().product()];
    for (cfg, a) in state.iter() {
        let mut idx = 0;
        for (p, d) in dims.iter().enumerate() {
            idx = idx * d + cfg.index_at(p);
        }
        v[idx] = a;
    }
    v
}

fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

#[test]
fn tensor_matches_dense_kronecker() {
    let a = KetState::new(
        vec![SubsystemSpec::atom_internal("a")],
        vec![
            (BasisConfig::new().with("a", "g"), c(0.6, 0.0)),
            (BasisConfig::new().with("a", "e"), c(0.0, 0.8)),
        ],
        false,
    )
    .unwrap();
    let b = KetState::new(
        vec![SubsystemSpec::cavity("m", 2).unwrap()],
        vec![
            (BasisConfig::new().with("m", "0"), c(1.0, 1.0)),
            (BasisConfig::new().with("m", "2"), c(-0.5, 0.0)),
        ],
        false,
    )
    .unwrap();
    let t = a.tensor(&b).unwrap();
    assert_eq!(t.len(), 4);
    assert!((t.norm() - a.norm() * b.norm()).abs() < 1e-14);
    let expected = kron(&dense(&a), &dense(&b));
    for (x, y) in dense(&t).iter().zip(&expected) {
        assert!((x - y).norm() < 1e-15);
    }
    assert!(matches!(a.tensor(&a), Err(StateError::DuplicateId(_))));
}

#[test]
fn tensor_with_basis_ket_extends_configs() {
    let x = KetState::new(
        atom_cav_registry(),
        vec![
            (cfg("g", "P0", "0"), c(FRAC_1_SQRT_2, 0.0)),
            (cfg("e", "P-2", "1"), c(0.0, -FRAC_1_SQRT_2)),
        ],
        false,
    )
    .unwrap();
    let anc = KetState::basis(
        vec![SubsystemSpec::detector("d", 1).unwrap()],
        BasisConfig::new().with("d", "0"),
    )
    .unwrap();
    let t = x.tensor(&anc).unwrap();
    for (cfg, a) in x.iter() {
        let extended = cfg.to_basis_config().with("d", "0");
        assert_eq!(t.amplitude(&extended).unwrap(), a);
    }
}

fn pauli_x() -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

#[test]
fn unitary_identity_and_pauli_x() {
    let s = KetState::basis(atom_cav_registry(), cfg("g", "P0", "0")).unwrap();
    let same = s.apply_local_unitary(&["a1.int"], &DMatrix::identity(2, 2)).unwrap();
    assert_eq!(same, s);
    let flipped = s.apply_local_unitary(&["a1.int"], &pauli_x()).unwrap();
    assert_eq!(flipped.amplitude(&cfg("e", "P0", "0")).unwrap(), c(1.0, 0.0));
    assert_eq!(flipped.len(), 1);
}

#[test]
fn unitary_ramsey_matrix_on_ground() {
    let h = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)])
        * c(FRAC_1_SQRT_2, 0.0);
    let s = KetState::basis(atom_cav_registry(), cfg("g", "P0", "0")).unwrap();
    let r = s.apply_local_unitary(&["a1.int"], &h).unwrap();
    assert!((r.amplitude(&cfg("g", "P0", "0")).unwrap() - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    assert!((r.amplitude(&cfg("e", "P0", "0")).unwrap() - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
}

#[test]
fn unitary_errors() {
    let s = KetState::basis(atom_cav_registry(), cfg("g", "P0", "0")).unwrap();
    let not_unitary = DMatrix::from_element(2, 2, c(1.0, 0.0));
    assert!(matches!(
        s.apply_local_unitary(&["a1.int"], &not_unitary),
        Err(StateError::NotUnitary(_))
    ));
    assert!(matches!(
        s.apply_local_unitary(&["a1.int", "cav"], &pauli_x()),
        Err(StateError::DimensionMismatch { .. })
    ));
    assert!(matches!(
        s.apply_local_unitary(&["a1.int", "a1.int"], &DMatrix::identity(4, 4)),
        Err(StateError::DuplicateId(_))
    ));
    // the projector path accepts non-unitary maps
    let proj = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let p = s.apply_local_operator(&["a1.int"], &proj).unwrap();
    assert_eq!(p, s);
}

#[test]
fn project_basis_state_on_own_labels() {
    let s = KetState::basis(atom_cav_registry(), cfg("e", "P-2", "1")).unwrap();
    let p = s
        .project_and_collapse(&BasisConfig::new().with("a1.int", "e").with("cav", "1"))
        .unwrap();
    match p {
        Projection::Outcome { probability, state } => {
            assert!((probability - 1.0).abs() < 1e-15);
            assert_eq!(state.amplitude(&cfg("e", "P-2", "1")).unwrap(), c(1.0, 0.0));
            assert_eq!(state.norm_tag(), NormTag::PostSelected { probability: 1.0 });
        }
        Projection::Impossible => panic!("outcome is certain"),
    }
    let none = s.project_and_collapse(&BasisConfig::new().with("a1.int", "g")).unwrap();
    assert!(matches!(none, Projection::Impossible));
    assert!(s.project_and_collapse(&BasisConfig::new().with("zz", "g")).is_err());
}

#[test]
fn drop_untouched_ancilla() {
    let x = KetState::new(
        atom_cav_registry(),
        vec![
            (cfg("g", "P0", "0"), c(FRAC_1_SQRT_2, 0.0)),
            (cfg("e", "P-2", "1"), c(0.0, -FRAC_1_SQRT_2)),
        ],
        false,
    )
    .unwrap();
    let anc = KetState::basis(
        vec![SubsystemSpec::detector("d", 1).unwrap()],
        BasisConfig::new().with("d", "0"),
    )
    .unwrap();
    let back = x.tensor(&anc).unwrap().drop_product_subsystem("d").unwrap();
    assert_eq!(back, x);
}

#[test]
fn drop_entangled_subsystem_refused() {
    let x = KetState::new(
        atom_cav_registry(),
        vec![
            (cfg("g", "P0", "0"), c(FRAC_1_SQRT_2, 0.0)),
            (cfg("e", "P-2", "1"), c(0.0, -FRAC_1_SQRT_2)),
        ],
        false,
    )
    .unwrap();
    assert!(x.subsystem_purity("cav").unwrap() < 1.0 - 1e-3);
    assert!(matches!(
        x.drop_product_subsystem("cav"),
        Err(StateError::NotProduct { .. })
    ));
}

#[test]
fn trace_out_bell_pair_and_everything() {
    let reg = vec![
        SubsystemSpec::atom_internal("a1.int"),
        SubsystemSpec::atom_momentum("a1.mom"),
        SubsystemSpec::atom_internal("a4.int"),
        SubsystemSpec::atom_momentum("a4.mom"),
    ];
    let term = |i1: &str, m1: &str, i4: &str, m4: &str| {
        BasisConfig::new()
            .with("a1.int", i1)
            .with("a1.mom", m1)
            .with("a4.int", i4)
            .with("a4.mom", m4)
    };
    let bell = KetState::new(
        reg,
        vec![
            (term("e", "P-2", "g", "P0"), c(FRAC_1_SQRT_2, 0.0)),
            (term("g", "P0", "e", "P-2"), c(-FRAC_1_SQRT_2, 0.0)),
        ],
        false,
    )
    .unwrap();
    let rho = bell.trace_out(&["a4.int", "a4.mom"]).unwrap();
    let ev = rho.eigenvalues();
    assert_eq!(ev.len(), 2);
    assert!((ev[0] - 0.5).abs() < 1e-12 && (ev[1] - 0.5).abs() < 1e-12);

    let all = bell.scaled(c(2.0, 0.0));
    let rho = all.trace_out(&["a1.int", "a1.mom", "a4.int", "a4.mom"]).unwrap();
    assert_eq!(rho.dim(), 1);
    assert!((rho.matrix()[(0, 0)].re - all.norm_sqr()).abs() < 1e-12);
    assert!(bell.trace_out(&[]).is_err());
}

#[test]
fn json_round_trip_and_ordering() {
    let x = KetState::new(
        atom_cav_registry(),
        vec![
            (cfg("g", "P0", "0"), c(FRAC_1_SQRT_2, 0.0)),
            (cfg("g", "P-2", "1"), c(0.0, -FRAC_1_SQRT_2)),
        ],
        false,
    )
    .unwrap();
    let text = x.to_json();
    // P-2 sorts before P0 lexicographically
    let amps = &text[text.find("amplitudes").unwrap()..];
    let p2 = amps.find("\"P-2\"").unwrap();
    let p0 = amps.find("\"P0\"").unwrap();
    assert!(p2 < p0);
    assert!(text.starts_with("{\"registry\""));
    assert!(text.contains("{\"a1.int\":\"g\",\"a1.mom\":\"P-2\",\"cav\":\"1\"}"));
    let back = KetState::from_json(&text).unwrap();
    assert_eq!(back, x);
    assert_eq!(back.to_json(), text);
}

#[test]
fn canonical_phase_makes_first_entry_real_positive() {
    let x = KetState::new(
        atom_cav_registry(),
        vec![
            (cfg("g", "P0", "0"), c(0.0, 0.6)),
            (cfg("g", "P-2", "1"), c(-0.8, 0.0)),
        ],
        false,
    )
    .unwrap();
    let y = x.canonical_phase();
    let first = y.sorted_entries()[0].1;
    assert!(first.im.abs() < 1e-15 && first.re > 0.0);
    assert!((y.inner(&x).unwrap().norm() - 1.0).abs() < 1e-14);
}

// ---------- properties ----------

fn random_unitary(dim: usize, seed: &[f64]) -> DMatrix<Complex64> {
    let m = DMatrix::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        c(seed[k % seed.len()] + 0.1 * i as f64, seed[(k + 1) % seed.len()] - 0.05 * j as f64)
    });
    m.qr().q()
}

fn wide_registry() -> Vec<SubsystemSpec> {
    vec![
        SubsystemSpec::atom_internal("a.int"),
        SubsystemSpec::momentum_ladder("a.mom", -6, 4).unwrap(),
        SubsystemSpec::cavity("c", 2).unwrap(),
        SubsystemSpec::atom_internal("b.int"),
    ]
}

fn random_state(entries: &[(u8, u8, u8, u8, f64, f64)]) -> Option<KetState> {
    let reg = wide_registry();
    let terms: Vec<_> = entries
        .iter()
        .map(|&(i, m, n, j, re, im)| {
            let cfg = BasisConfig::new()
                .with("a.int", reg[0].label(i as usize % 2))
                .with("a.mom", reg[1].label(m as usize % 6))
                .with("c", reg[2].label(n as usize % 3))
                .with("b.int", reg[3].label(j as usize % 2));
            (cfg, c(re, im))
        })
        .collect();
    KetState::new(reg, terms, true).ok()
}

fn entry_strategy() -> impl Strategy<Value = Vec<(u8, u8, u8, u8, f64, f64)>> {
    prop::collection::vec(
        (any::<u8>(), any::<u8>(), any::<u8>(), any::<u8>(), -1.0..1.0f64, -1.0..1.0f64),
        1..40,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn unitary_preserves_norm(entries in entry_strategy(), seed in prop::collection::vec(-1.0..1.0f64, 8..32), pick in 0usize..4) {
        if let Some(s) = random_state(&entries) {
            let (targets, dim): (Vec<&str>, usize) = match pick {
                0 => (vec!["a.int"], 2),
                1 => (vec!["a.mom"], 6),
                2 => (vec!["c", "a.int"], 6),
                _ => (vec!["b.int", "a.mom", "c"], 36),
            };
            let u = random_unitary(dim, &seed);
            let out = s.apply_local_unitary(&targets, &u).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
            prop_assert!(out.iter().all(|(_, a)| a.norm() >= PRUNE_THRESHOLD));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tensor_then_trace_recovers_factor(a in entry_strategy(), b in prop::collection::vec((any::<u8>(), -1.0..1.0f64, -1.0..1.0f64), 1..6)) {
        if let Some(sa) = random_state(&a) {
            let terms: Vec<_> = b.iter().map(|&(n, re, im)| {
                (BasisConfig::new().with("x", (n % 4).to_string()), c(re, im))
            }).collect();
            if let Ok(sb) = KetState::new(vec![SubsystemSpec::cavity("x", 3).unwrap()], terms, true) {
                let t = sa.tensor(&sb).unwrap();
                let direct = sa.reduced(&["a.int", "a.mom", "c", "b.int"]).unwrap();
                let traced = t.trace_out(&["x"]).unwrap();
                prop_assert_eq!(direct.dim(), traced.dim());
                let diff = (direct.matrix() - traced.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
                prop_assert!(diff < 1e-12);
                let rho = t.trace_out(&["a.int", "a.mom", "c", "b.int"]).unwrap();
                prop_assert!(rho.hermiticity_defect() < 1e-10);
                prop_assert!(rho.eigenvalues()[0] > -1e-9);
                prop_assert!((rho.trace() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn projection_probabilities_complete(entries in entry_strategy(), which in 0usize..4) {
        if let Some(s) = random_state(&entries) {
            let spec = s.registry()[which].clone();
            let total: f64 = spec.basis().iter().map(|l| {
                s.project_and_collapse(&BasisConfig::new().with(spec.id(), l.as_str())).unwrap().probability()
            }).sum();
            prop_assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn drop_after_tensor_is_identity(entries in entry_strategy(), theta in 0.0..6.3f64) {
        if let Some(s) = random_state(&entries) {
            let anc = KetState::new(
                vec![SubsystemSpec::atom_internal("anc")],
                vec![
                    (BasisConfig::new().with("anc", "g"), c(theta.cos(), 0.0)),
                    (BasisConfig::new().with("anc", "e"), c(0.0, theta.sin())),
                ],
                true,
            ).unwrap();
            let back = s.tensor(&anc).unwrap().drop_product_subsystem("anc").unwrap();
            let ov = s.inner(&back).unwrap();
            prop_assert!((ov.norm() - 1.0).abs() < 1e-10);
        }
    }
}
