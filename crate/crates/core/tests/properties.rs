//! Randomized invariants promised by the module contracts: order axioms of
//! the exact phase comparison, K-group invariance of the cone rewrites,
//! degree-zero vanishing down the phase order, confluence of the collapse,
//! and the Smith-form identities.

use cobstab::base::{self, hom_dims, BaseObject, Brick, SemistableAtom};
use cobstab::cone::{
    flatten, reassociate, substitute_nested, swap_zero, unflatten, ConeExpr, LeafClass,
    MorphismTag, Step,
};
use cobstab::hn::{self, general_object_hn, HnFiltration, NormState, RewriteStep};
use cobstab::lift::{lifted_phase, validate_kappa, LiftedGenerator};
use cobstab::phase::{
    charge_of_shift, check_alignment, compare_phases, phase_of_charge, Angle, Charge,
};
use cobstab::sample::Rng;
use cobstab::snf::{smith_normal_form, IntMat};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use std::cmp::Ordering;

fn random_charge(rng: &mut Rng) -> Charge {
    loop {
        let c = Charge::from_ints(rng.range(-50, 50), rng.range(-50, 50));
        if !c.is_zero() {
            return c;
        }
    }
}

fn random_angle(rng: &mut Rng) -> Angle {
    let mut phi = phase_of_charge(&random_charge(rng)).unwrap();
    phi = phi.shifted(rng.range(-5, 5));
    phi
}

#[test]
fn phase_comparison_is_a_total_order() {
    let mut rng = Rng::new(21);
    for _ in 0..10_000 {
        let a = random_angle(&mut rng);
        let b = random_angle(&mut rng);
        let c = random_angle(&mut rng);
        // antisymmetry
        assert_eq!(compare_phases(&a, &b), compare_phases(&b, &a).reverse());
        // trichotomy: equality agrees with structural equality
        assert_eq!(compare_phases(&a, &b) == Ordering::Equal, a == b);
        // transitivity
        if compare_phases(&a, &b) != Ordering::Greater
            && compare_phases(&b, &c) != Ordering::Greater
        {
            assert_ne!(compare_phases(&a, &c), Ordering::Greater);
        }
    }
}

#[test]
fn cross_product_agrees_with_atan2_sanity() {
    // a float oracle, not ground truth: skip near-ties
    let mut rng = Rng::new(22);
    let mut compared = 0usize;
    while compared < 100_000 {
        let a = random_angle(&mut rng);
        let b = random_angle(&mut rng);
        let fa = a.approx();
        let fb = b.approx();
        if (fa - fb).abs() < 1e-9 {
            continue;
        }
        let expected = if fa < fb { Ordering::Less } else { Ordering::Greater };
        assert_eq!(compare_phases(&a, &b), expected, "{:?} vs {:?}", a, b);
        compared += 1;
    }
}

#[test]
fn shifted_charge_has_shifted_phase_mod_two() {
    let mut rng = Rng::new(23);
    for _ in 0..2_000 {
        let c = random_charge(&mut rng);
        let k = rng.range(-6, 6);
        let lhs = phase_of_charge(&charge_of_shift(&c, k)).unwrap();
        let rhs = phase_of_charge(&c).unwrap().shifted(k);
        // equal direction, winding difference even
        assert_eq!(lhs.dir(), rhs.dir());
        assert_eq!((lhs.winding() - rhs.winding()).rem_euclid(2), 0);
    }
}

#[test]
fn every_nonzero_charge_aligns_with_its_own_phase() {
    let mut rng = Rng::new(24);
    for _ in 0..2_000 {
        let c = random_charge(&mut rng);
        let w = check_alignment(&c, &phase_of_charge(&c).unwrap()).unwrap();
        assert!(w.is_positive());
        assert_eq!(w, c.norm_sq());
    }
}

// ---- cone rewrites ----

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Obj(u32);

impl LeafClass for Obj {
    type Key = u32;
    fn class(&self) -> std::collections::BTreeMap<u32, i64> {
        [(self.0, 1)].into_iter().collect()
    }
}

fn random_tree(rng: &mut Rng, depth: usize) -> ConeExpr<Obj> {
    if depth == 0 || rng.chance(2, 5) {
        if rng.chance(1, 8) {
            return ConeExpr::Zero;
        }
        return ConeExpr::leaf(Obj(rng.below(6) as u32), rng.range(-3, 3));
    }
    let tag = match rng.below(3) {
        0 => MorphismTag::Zero,
        1 => MorphismTag::Nonzero(format!("f{}", rng.below(4))),
        _ => MorphismTag::Unknown,
    };
    ConeExpr::cone(random_tree(rng, depth - 1), random_tree(rng, depth - 1), tag)
}

fn cone_positions(expr: &ConeExpr<Obj>, path: &mut Vec<Step>, out: &mut Vec<Vec<Step>>) {
    if let ConeExpr::Cone { source, target, .. } = expr {
        out.push(path.clone());
        path.push(Step::Source);
        cone_positions(source, path, out);
        path.pop();
        path.push(Step::Target);
        cone_positions(target, path, out);
        path.pop();
    }
}

fn leaf_positions(expr: &ConeExpr<Obj>, path: &mut Vec<Step>, out: &mut Vec<Vec<Step>>) {
    match expr {
        ConeExpr::Zero => {}
        ConeExpr::Leaf { .. } => out.push(path.clone()),
        ConeExpr::Cone { source, target, .. } => {
            path.push(Step::Source);
            leaf_positions(source, path, out);
            path.pop();
            path.push(Step::Target);
            leaf_positions(target, path, out);
            path.pop();
        }
    }
}

#[test]
fn k0_class_invariant_under_random_rewrites() {
    let mut rng = Rng::new(31);
    let mut rewrites = 0usize;
    for _ in 0..1_000 {
        let mut expr = random_tree(&mut rng, 6);
        let class = expr.k0_class_keys();
        let leaf_count = expr.leaves().len();
        for _ in 0..6 {
            let mut positions = Vec::new();
            cone_positions(&expr, &mut Vec::new(), &mut positions);
            if positions.is_empty() {
                break;
            }
            let next = if rng.chance(1, 4) {
                // substitute a leaf's trivial decomposition for itself
                let mut leaves = Vec::new();
                leaf_positions(&expr, &mut Vec::new(), &mut leaves);
                if leaves.is_empty() {
                    break;
                }
                let pos = &leaves[rng.below(leaves.len() as u64) as usize];
                let ConeExpr::Leaf { obj, shift } = expr.subtree(pos).unwrap().clone() else {
                    unreachable!()
                };
                let trivial = ConeExpr::cone(
                    ConeExpr::leaf(obj, shift - 1),
                    ConeExpr::Zero,
                    MorphismTag::Zero,
                );
                substitute_nested(&expr, pos, &trivial)
            } else {
                let pos = &positions[rng.below(positions.len() as u64) as usize];
                match rng.below(2) {
                    0 => reassociate(&expr, pos),
                    _ => swap_zero(&expr, pos),
                }
            };
            if let Ok(next) = next {
                expr = next;
                rewrites += 1;
            }
        }
        assert_eq!(expr.k0_class_keys(), class);
        // rewrites move shifts around but never change the leaf count
        assert_eq!(expr.leaves().len(), leaf_count);
    }
    assert!(rewrites > 500, "too few applicable rewrites: {}", rewrites);
}

#[test]
fn reassociate_preserves_leaf_multiset_up_to_shifts() {
    let mut rng = Rng::new(32);
    for _ in 0..500 {
        let expr = random_tree(&mut rng, 5);
        let mut positions = Vec::new();
        cone_positions(&expr, &mut Vec::new(), &mut positions);
        for pos in positions {
            let Ok(out) = reassociate(&expr, &pos) else { continue };
            let mut before: Vec<u32> = expr.leaves().iter().map(|(o, _)| o.0).collect();
            let mut after: Vec<u32> = out.leaves().iter().map(|(o, _)| o.0).collect();
            before.sort();
            after.sort();
            assert_eq!(before, after);
            // shift offsets across the move cancel in the class
            assert_eq!(out.k0_class_keys(), expr.k0_class_keys());
        }
    }
}

#[test]
fn flatten_unflatten_roundtrip_on_canonical_forms() {
    let mut rng = Rng::new(33);
    for _ in 0..500 {
        let expr = random_tree(&mut rng, 5);
        let flats = flatten(&expr);
        let canonical = unflatten(&flats);
        assert_eq!(flatten(&canonical), flats);
        assert_eq!(canonical.k0_class_keys(), expr.k0_class_keys());
    }
}

proptest! {
    #[test]
    fn prop_cross_product_total_order(ax in -40i64..40, ay in -40i64..40, bx in -40i64..40, by in -40i64..40) {
        prop_assume!((ax, ay) != (0, 0) && (bx, by) != (0, 0));
        let a = Angle::from_ray(0, BigInt::from(ax), BigInt::from(ay)).unwrap();
        let b = Angle::from_ray(0, BigInt::from(bx), BigInt::from(by)).unwrap();
        // comparison agrees with the real values
        let fa = a.approx();
        let fb = b.approx();
        if (fa - fb).abs() > 1e-9 {
            let expected = if fa < fb { Ordering::Less } else { Ordering::Greater };
            prop_assert_eq!(compare_phases(&a, &b), expected);
        }
    }

    #[test]
    fn prop_swap_zero_is_an_involution(x in 0u32..5, y in 0u32..5, sx in -3i64..3, sy in -3i64..3) {
        let e = ConeExpr::cone(
            ConeExpr::leaf(Obj(x), sx),
            ConeExpr::leaf(Obj(y), sy),
            MorphismTag::Zero,
        );
        let once = swap_zero(&e, &[]).unwrap();
        prop_assert_eq!(swap_zero(&once, &[]).unwrap(), e.clone());
        prop_assert_eq!(once.k0_class_keys(), e.k0_class_keys());
    }
}

// ---- base model ----

#[test]
fn degree_zero_hom_vanishes_down_the_phase_order() {
    let mut rng = Rng::new(41);
    let mut checked = 0usize;
    while checked < 1_000 {
        let a = cobstab::sample::random_atom(&mut rng, 5, 4, 3);
        let b = cobstab::sample::random_atom(&mut rng, 5, 4, 3);
        if compare_phases(&base::atom_phase(&a), &base::atom_phase(&b)) != Ordering::Greater {
            continue;
        }
        assert_eq!(hom_dims(&a, &b).get(&0).copied().unwrap_or(0), 0);
        checked += 1;
    }
}

#[test]
fn hn_factors_align_with_their_charges() {
    let mut rng = Rng::new(42);
    for _ in 0..300 {
        let obj = cobstab::sample::random_object(&mut rng, 4, 5, 4);
        let hn = base::hn_filtration(&obj).unwrap();
        let mut total = Charge::zero();
        for (phi, factor) in &hn {
            let witness = check_alignment(&base::central_charge(factor), phi).unwrap();
            assert!(witness.is_positive());
            total = total.add(&base::central_charge(factor));
        }
        assert_eq!(total, base::central_charge(&obj));
    }
}

// ---- collapse through the base and its confluence ----

fn filtration_of(g: &LiftedGenerator, kappa: cobstab::lift::Kappa) -> HnFiltration {
    HnFiltration {
        factors: vec![(lifted_phase(g, kappa).unwrap(), vec![g.canonical()])],
    }
}

#[test]
fn general_cone_collapse_is_the_jordan_extension() {
    let kappa = validate_kappa(4).unwrap();
    let o = BaseObject::single(SemistableAtom::new(Brick::new(1, 0, 0, 0).unwrap(), 1, 0));
    // e1's factor sits one phase below e2's after the concatenation shift:
    // a tie at the junction
    let low = LiftedGenerator::new(2, -1, o.clone()).unwrap();
    let high = LiftedGenerator::new(2, 0, o.clone()).unwrap();
    let e1 = filtration_of(&low, kappa);
    let e2 = filtration_of(&high, kappa);
    let (f, trace) =
        general_object_hn(&e1, &e2, MorphismTag::Nonzero("e".into()), kappa).unwrap();
    assert!(matches!(trace.steps.as_slice(), [RewriteStep::Collapse { .. }]));
    assert_eq!(f.factors.len(), 1);
    let parts = &f.factors[0].1;
    assert_eq!(parts.len(), 1);
    assert_eq!(parts[0].base.atoms()[0].jordan, 2);
    // zero junction: the same input merges into a direct sum instead
    let (f0, trace0) = general_object_hn(&e1, &e2, MorphismTag::Zero, kappa).unwrap();
    assert!(matches!(trace0.steps.as_slice(), [RewriteStep::Merge { .. }]));
    assert_eq!(f0.factors[0].1.len(), 2);
}

#[test]
fn collapse_confluence_under_all_orders() {
    // a state with one collapse site and one swap site: every order reaches
    // the same terminal
    let kappa = validate_kappa(4).unwrap();
    let o = BaseObject::single(SemistableAtom::new(Brick::new(1, 0, 0, 0).unwrap(), 1, 0));
    let k = BaseObject::single(SemistableAtom::new(Brick::new(0, 1, 0, 0).unwrap(), 1, 0));
    let a = LiftedGenerator::new(2, 0, o.clone()).unwrap();
    let b = LiftedGenerator::new(2, 0, o.clone()).unwrap();
    let c = LiftedGenerator::new(3, 0, k).unwrap();
    // flattened: [a, b, c] with a tie at (a, b) tagged nonzero and a strict
    // inversion at (b, c) tagged zero
    let expr = ConeExpr::cone(
        ConeExpr::leaf(a, -1),
        ConeExpr::cone(
            ConeExpr::leaf(b, -1),
            ConeExpr::cone(ConeExpr::leaf(c, -1), ConeExpr::Zero, MorphismTag::Zero),
            MorphismTag::Zero,
        ),
        MorphismTag::Nonzero("e".into()),
    );
    let state = NormState::from_expr(&expr, kappa).unwrap();
    // breadth-first over all legal orders
    let mut terminals = std::collections::BTreeSet::new();
    let mut queue = vec![state.clone()];
    let mut seen = std::collections::BTreeSet::new();
    while let Some(s) = queue.pop() {
        if !seen.insert(s.canonical_key()) {
            continue;
        }
        let moves = s.legal_moves().unwrap();
        if moves.is_empty() {
            terminals.insert(format!("{:?}", s.filtration()));
        }
        for mv in moves {
            queue.push(s.apply(mv).unwrap());
        }
    }
    assert_eq!(terminals.len(), 1, "collapse orders disagree");
    let (f, _) = hn::normalize(&expr, kappa).unwrap();
    assert!(terminals.contains(&format!("{:?}", f)));
}

#[test]
fn cross_inverted_zero_cone_interleaves_both_filtrations() {
    // two-factor filtrations whose phases cross after the concatenation
    // shift: the zero-tagged reshuffle must produce the sorted interleaving,
    // and every legal rewrite order agrees
    let kappa = validate_kappa(4).unwrap();
    let o = |s: i64| BaseObject::single(SemistableAtom::new(Brick::new(1, 0, 0, 0).unwrap(), 1, s));
    let gen = |s: i64| LiftedGenerator::new(2, 0, o(s)).unwrap();
    let phi = |g: &LiftedGenerator| lifted_phase(g, kappa).unwrap();
    // e1 factors at phases -5.5 > -7.5; shifted they sit at -4.5 and -6.5
    let e1 = HnFiltration {
        factors: vec![
            (phi(&gen(2)), vec![gen(2).canonical()]),
            (phi(&gen(0)), vec![gen(0).canonical()]),
        ],
    };
    // e2 factors at -3.5 > -5.5: interleaving with the shifted e1
    let e2 = HnFiltration {
        factors: vec![
            (phi(&gen(4)), vec![gen(4).canonical()]),
            (phi(&gen(2)), vec![gen(2).canonical()]),
        ],
    };
    let (f, _) = general_object_hn(&e1, &e2, MorphismTag::Zero, kappa).unwrap();
    let expected: Vec<Vec<LiftedGenerator>> = vec![
        vec![gen(4).canonical()],
        vec![gen(3).canonical()], // e1's top, shifted by one
        vec![gen(2).canonical()],
        vec![gen(1).canonical()],
    ];
    let got: Vec<Vec<LiftedGenerator>> = f.factors.iter().map(|(_, p)| p.clone()).collect();
    assert_eq!(got, expected);
    // brute force over all legal orders finds the same single terminal
    let state = NormState::from_filtrations(&e1, &e2, MorphismTag::Zero, kappa).unwrap();
    let mut terminals = std::collections::BTreeSet::new();
    let mut queue = vec![state];
    let mut seen = std::collections::BTreeSet::new();
    while let Some(s) = queue.pop() {
        if !seen.insert(s.canonical_key()) {
            continue;
        }
        let moves = s.legal_moves().unwrap();
        if moves.is_empty() {
            terminals.insert(format!("{:?}", s.filtration()));
        }
        for mv in moves {
            queue.push(s.apply(mv).unwrap());
        }
    }
    assert_eq!(terminals.len(), 1);
    assert!(terminals.contains(&format!("{:?}", f)));
}

#[test]
fn normalize_equals_sort_and_merge_when_no_collapse_fires() {
    // independent oracle: when every consulted tag resolves to zero, the
    // filtration must be the phase-sorted grouping of the leaf factors -
    // computed here by plain sorting, with none of the rewrite machinery
    let kappa = validate_kappa(4).unwrap();
    let mut rng = Rng::new(77);
    let mut checked = 0usize;
    for i in 0..300 {
        let shape = cobstab::sample::SpecShape {
            balanced: i % 2 == 0,
            with_bottom: i % 3 != 0,
            ..cobstab::sample::SpecShape::default()
        };
        let spec = cobstab::sample::random_spec(&mut rng, &shape);
        let expr = cobstab::lift::cone_decomposition(&spec).unwrap();
        let refined = hn::refine_by_base_hn(&expr).unwrap();
        let decorated = cobstab::sample::decorate_tags(&refined, &mut rng);
        let (filtration, trace) = hn::normalize(&decorated, kappa).unwrap();
        if trace
            .steps
            .iter()
            .any(|s| matches!(s, RewriteStep::Collapse { .. }))
        {
            continue;
        }
        // closed form: group the leaf factors by phase, descending
        let mut groups: std::collections::BTreeMap<cobstab::Angle, Vec<LiftedGenerator>> =
            std::collections::BTreeMap::new();
        for (gen, shift) in flatten(&decorated).entries {
            let factor = gen.shifted(shift + 1);
            let phi = lifted_phase(&factor, kappa).unwrap();
            groups.entry(phi).or_default().push(factor.canonical());
        }
        let expected = HnFiltration {
            factors: groups
                .into_iter()
                .rev()
                .map(|(phi, mut parts)| {
                    parts.sort();
                    (phi, parts)
                })
                .collect(),
        };
        assert_eq!(filtration, expected, "sort-and-merge oracle differs on entry {}", i);
        checked += 1;
    }
    assert!(checked > 250, "too few collapse-free entries: {}", checked);
}

#[test]
fn underdetermined_composite_is_surfaced_not_invented() {
    // three tied same-brick factors with tags only on the adjacent pairs:
    // after one step the remaining connecting morphism is unknown data, and
    // the engine must say so rather than guess
    let kappa = validate_kappa(4).unwrap();
    let o = BaseObject::single(SemistableAtom::new(Brick::new(1, 0, 0, 0).unwrap(), 1, 0));
    let g = || LiftedGenerator::new(2, 0, o.clone()).unwrap();
    let expr = ConeExpr::cone(
        ConeExpr::leaf(g(), -1),
        ConeExpr::cone(
            ConeExpr::leaf(g(), -1),
            ConeExpr::cone(ConeExpr::leaf(g(), -1), ConeExpr::Zero, MorphismTag::Zero),
            MorphismTag::Zero,
        ),
        MorphismTag::Nonzero("e".into()),
    );
    assert!(matches!(
        hn::normalize(&expr, kappa),
        Err(hn::HnError::UnresolvedTag { .. })
    ));
}

// ---- smith normal form ----

#[test]
fn smith_form_identities_on_a_thousand_matrices() {
    let mut rng = Rng::new(51);
    for _ in 0..1_000 {
        let r = 1 + rng.below(8) as usize;
        let c = 1 + rng.below(8) as usize;
        let rows: Vec<Vec<i64>> = (0..r)
            .map(|_| (0..c).map(|_| rng.range(-9, 9)).collect())
            .collect();
        let m = IntMat::from_rows(rows);
        let s = smith_normal_form(&m);
        assert_eq!(s.u.mul(&m).mul(&s.v), s.d);
        assert_eq!(s.u.determinant().abs(), BigInt::one());
        assert_eq!(s.v.determinant().abs(), BigInt::one());
        let diag = s.d.diagonal();
        for i in 0..diag.len().saturating_sub(1) {
            if diag[i].is_zero() {
                assert!(diag[i + 1].is_zero());
            } else {
                assert!((&diag[i + 1] % &diag[i]).is_zero());
            }
        }
    }
}
