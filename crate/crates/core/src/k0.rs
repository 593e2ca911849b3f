//! Finitely presented abelian groups for the discretized model: the
//! Grothendieck group and the cobordism class group share one generator set
//! (indecomposable branes with bounded slope, Jordan size up to two, and a
//! shift bit) and draw their relations from a common catalog of short exact
//! sequences realized by cobordisms:
//!
//! * shift rows `[X[1]] + [X] = 0`,
//! * local-system rows reducing a rank-two system to its two rank-one factors,
//! * point sequences `O(D-Q) -> O(D) -> k(Q)`,
//! * rank sequences splitting a rank-r stable into twisted line bundles and
//!   structure sheaves (instantiated for every twist that stays in bound).
//!
//! The class map between the two presentations is the identity on
//! generators; it is an isomorphism exactly when the relation lattices
//! coincide, which the Smith/Hermite machinery decides exactly.

use crate::base::{Brick, SemistableAtom};
use crate::snf::{self, InvariantFactors, RowBasis, SparseRow};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum K0Error {
    /// The model modulus must be at least two.
    BadModulus(u32),
    /// The two presentations do not share a generator basis.
    GeneratorMismatch,
}

impl fmt::Display for K0Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            K0Error::BadModulus(n) => write!(f, "modulus {} is below 2", n),
            K0Error::GeneratorMismatch => write!(f, "generator bases differ"),
        }
    }
}

impl std::error::Error for K0Error {}

/// Parameters of the finite model: point/monodromy modulus, slope bound,
/// the degree of the twisting class, and the largest Jordan size carried as
/// a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelParams {
    pub modulus: u32,
    pub bound: i64,
    /// Degree shift of one hyperplane twist (a plane cubic has three).
    pub twist_degree: i64,
    pub max_jordan: i64,
}

impl ModelParams {
    pub fn new(modulus: u32, bound: i64) -> ModelParams {
        ModelParams { modulus, bound, twist_degree: 3, max_jordan: 2 }
    }
}

/// A generator of the presentations: an indecomposable brane with a shift bit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenKey {
    pub brick: Brick,
    pub jordan: i64,
    pub shift: u8,
}

impl GenKey {
    pub fn label(&self, modulus: u32) -> String {
        format!(
            "brick(r={},d={},x={}/{},m={})[{}]^{}",
            self.brick.r, self.brick.d, self.brick.point, modulus, self.brick.monodromy,
            self.shift, self.jordan
        )
    }
}

/// Which catalog family a relation row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationKind {
    Shift,
    LocalSystem,
    PointSequence,
    RankSequence,
}

#[derive(Debug, Clone)]
pub struct Relation {
    pub kind: RelationKind,
    pub row: SparseRow,
}

/// A finitely presented abelian group: named generators and integer relation
/// rows.
#[derive(Debug, Clone)]
pub struct PresentedGroup {
    pub params: ModelParams,
    pub generators: Vec<GenKey>,
    index: BTreeMap<GenKey, usize>,
    pub relations: Vec<Relation>,
}

/// Toggles for the relation families, used to probe which families carry
/// which assumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelationToggles {
    pub shift: bool,
    pub local_system: bool,
    pub point_sequences: bool,
    pub rank_sequences: bool,
}

impl RelationToggles {
    pub fn all() -> RelationToggles {
        RelationToggles {
            shift: true,
            local_system: true,
            point_sequences: true,
            rank_sequences: true,
        }
    }
}

/// Every stable slope within the bound: the skyscraper class plus all
/// coprime (r, d) with `1 <= r <= bound`, `|d| <= bound`.
pub fn stable_slopes(bound: i64) -> Vec<(i64, i64)> {
    use num_integer::Integer;
    let mut out = vec![(0, 1)];
    for r in 1..=bound {
        for d in -bound..=bound {
            if r.gcd(&d) == 1 {
                out.push((r, d));
            }
        }
    }
    out
}

fn enumerate_generators(params: &ModelParams) -> Vec<GenKey> {
    let mut gens = Vec::new();
    for (r, d) in stable_slopes(params.bound) {
        for x in 0..params.modulus {
            for m in 0..params.modulus {
                let brick = Brick::new(r, d, x, m).expect("slope is coprime");
                for jordan in 1..=params.max_jordan {
                    for shift in 0..2u8 {
                        gens.push(GenKey { brick: brick.clone(), jordan, shift });
                    }
                }
            }
        }
    }
    gens.sort();
    gens
}

impl PresentedGroup {
    fn build(params: ModelParams, toggles: RelationToggles) -> Result<PresentedGroup, K0Error> {
        if params.modulus < 2 {
            return Err(K0Error::BadModulus(params.modulus));
        }
        let generators = enumerate_generators(&params);
        let index: BTreeMap<GenKey, usize> =
            generators.iter().cloned().enumerate().map(|(i, g)| (g, i)).collect();
        let mut group = PresentedGroup { params, generators, index, relations: Vec::new() };
        group.fill_relations(toggles);
        Ok(group)
    }

    pub fn gen_index(&self, key: &GenKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    fn idx(&self, r: i64, d: i64, x: i64, m: i64, jordan: i64, shift: u8) -> usize {
        let n = self.params.modulus as i64;
        let key = GenKey {
            brick: Brick::new(r, d, x.rem_euclid(n) as u32, m.rem_euclid(n) as u32)
                .expect("catalog slope is coprime"),
            jordan,
            shift,
        };
        *self.index.get(&key).unwrap_or_else(|| panic!("generator out of catalog: {:?}", key))
    }

    fn push(&mut self, kind: RelationKind, entries: Vec<(usize, i64)>) {
        let row = snf::sparse_row(&entries);
        if !row.is_empty() {
            self.relations.push(Relation { kind, row });
        }
    }

    fn fill_relations(&mut self, toggles: RelationToggles) {
        let n = self.params.modulus as i64;
        let bound = self.params.bound;
        let twist = self.params.twist_degree;
        let slopes = stable_slopes(bound);
        if toggles.shift {
            // [X] + [X[1]] = 0 for every unshifted generator
            for g in self.generators.clone() {
                if g.shift != 0 {
                    continue;
                }
                let a = self.gen_index(&g).unwrap();
                let b = self
                    .gen_index(&GenKey { shift: 1, ..g.clone() })
                    .unwrap();
                self.push(RelationKind::Shift, vec![(a, 1), (b, 1)]);
            }
        }
        if toggles.local_system {
            // a rank-(j) system is an extension of rank-one systems on the
            // same brane: [E_j] = [E_{j-1}] + [E_1]
            for g in self.generators.clone() {
                if g.jordan < 2 {
                    continue;
                }
                let whole = self.gen_index(&g).unwrap();
                let sub = self
                    .gen_index(&GenKey { jordan: g.jordan - 1, ..g.clone() })
                    .unwrap();
                let quot = self.gen_index(&GenKey { jordan: 1, ..g.clone() }).unwrap();
                self.push(
                    RelationKind::LocalSystem,
                    vec![(sub, 1), (whole, -1), (quot, 1)],
                );
            }
        }
        if toggles.point_sequences {
            // O(D-Q) -> O(D) -> k(Q): degrees d and d-1 both in bound
            for d in (-bound + 1)..=bound {
                for xd in 0..n {
                    for md in 0..n {
                        for xq in 0..n {
                            for mq in 0..n {
                                let left = self.idx(1, d - 1, xd - xq, md - mq, 1, 0);
                                let mid = self.idx(1, d, xd, md, 1, 0);
                                let sky = self.idx(0, 1, xq, mq, 1, 0);
                                self.push(
                                    RelationKind::PointSequence,
                                    vec![(left, 1), (mid, -1), (sky, 1)],
                                );
                            }
                        }
                    }
                }
            }
        }
        if toggles.rank_sequences {
            // (O^{r-1})(-t) -> E -> (det E)((r-1) t) for stable E of rank >= 2,
            // for every twist t keeping both line bundles in bound
            for &(r, d) in &slopes {
                if r < 2 {
                    continue;
                }
                for t in -bound..=bound {
                    let tw = twist * t;
                    if tw.abs() > bound {
                        continue;
                    }
                    let det_deg = d + tw * (r - 1);
                    if det_deg.abs() > bound {
                        continue;
                    }
                    for x in 0..n {
                        for m in 0..n {
                            let o_twisted = self.idx(1, -tw, 0, 0, 1, 0);
                            let e = self.idx(r, d, x, m, 1, 0);
                            let det = self.idx(1, det_deg, x, m, 1, 0);
                            self.push(
                                RelationKind::RankSequence,
                                vec![(o_twisted, r - 1), (e, -1), (det, 1)],
                            );
                        }
                    }
                }
            }
        }
    }

    pub fn relation_rows(&self) -> impl Iterator<Item = SparseRow> + '_ {
        self.relations.iter().map(|r| r.row.clone())
    }

    /// Plain-text export: the generator labels, then one sparse integer row
    /// per relation as `kind: col:coeff ...`.
    pub fn export_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "generators {}", self.generators.len());
        for g in &self.generators {
            let _ = writeln!(out, "{}", g.label(self.params.modulus));
        }
        let _ = writeln!(out, "relations {}", self.relations.len());
        for rel in &self.relations {
            let kind = match rel.kind {
                RelationKind::Shift => "shift",
                RelationKind::LocalSystem => "local-system",
                RelationKind::PointSequence => "point-sequence",
                RelationKind::RankSequence => "rank-sequence",
            };
            let entries: Vec<String> =
                rel.row.iter().map(|(c, v)| format!("{}:{}", c, v)).collect();
            let _ = writeln!(out, "{}: {}", kind, entries.join(" "));
        }
        out
    }

    pub fn basis(&self) -> RowBasis {
        RowBasis::new(self.relation_rows(), self.generators.len())
    }

    /// Invariant factors of the presented group.
    pub fn invariants(&self) -> InvariantFactors {
        snf::invariant_factors(self.relation_rows(), self.generators.len())
    }

    /// The class row of an atom that is itself a generator (the shift enters
    /// through its parity bit).
    pub fn atom_unit_row(&self, atom: &SemistableAtom) -> Option<SparseRow> {
        let key = GenKey {
            brick: atom.brick.clone(),
            jordan: atom.jordan,
            shift: atom.shift.rem_euclid(2) as u8,
        };
        let idx = self.gen_index(&key)?;
        Some(snf::sparse_row(&[(idx, 1)]))
    }

    /// `[atom] - sum of its stable factors`: the row whose membership in the
    /// relation lattice expresses that the class decomposes into its
    /// Jordan-Hoelder factors.
    pub fn jordan_sum_row(&self, atom: &SemistableAtom) -> Option<SparseRow> {
        let parity = atom.shift.rem_euclid(2) as u8;
        let whole = self.gen_index(&GenKey {
            brick: atom.brick.clone(),
            jordan: atom.jordan,
            shift: parity,
        })?;
        let stable = self.gen_index(&GenKey {
            brick: atom.brick.clone(),
            jordan: 1,
            shift: parity,
        })?;
        Some(snf::sparse_row(&[(whole, 1), (stable, -atom.jordan)]))
    }
}

/// The Grothendieck-group presentation of the model: all four relation
/// families (the sequences among stables plus the shift and local-system
/// rows extending them to indecomposables).
pub fn k0_presentation(params: ModelParams) -> Result<PresentedGroup, K0Error> {
    PresentedGroup::build(params, RelationToggles::all())
}

/// The cobordism class group of the model: the same generator basis, with
/// relations ingested from the surgery catalog (point and rank sequences),
/// shift cobordisms, and local-system sequences.
pub fn omega_lag_presentation(params: ModelParams) -> Result<PresentedGroup, K0Error> {
    PresentedGroup::build(params, RelationToggles::all())
}

/// A presentation with selected relation families removed; the negative
/// probes of the assumption checks use this.
pub fn presentation_with(
    params: ModelParams,
    toggles: RelationToggles,
) -> Result<PresentedGroup, K0Error> {
    PresentedGroup::build(params, toggles)
}

/// A homomorphism given on generator bases by sparse rows (the image of each
/// source generator).
#[derive(Debug, Clone)]
pub struct GroupHom {
    pub rows: Vec<SparseRow>,
}

impl GroupHom {
    pub fn identity(n: usize) -> GroupHom {
        GroupHom {
            rows: (0..n).map(|i| snf::sparse_row(&[(i, 1)])).collect(),
        }
    }

    /// Pushes a row of the source group through the map.
    pub fn apply(&self, row: &SparseRow) -> SparseRow {
        use num_traits::Zero;
        let mut out: BTreeMap<usize, num_bigint::BigInt> = BTreeMap::new();
        for (c, v) in row {
            for (c2, v2) in &self.rows[*c] {
                let e = out.entry(*c2).or_insert_with(num_bigint::BigInt::zero);
                *e += v * v2;
            }
        }
        out.retain(|_, v| !v.is_zero());
        out.into_iter().collect()
    }
}

/// The verdict on the generator-identity map between the two presentations.
#[derive(Debug, Clone)]
pub struct ThetaVerdict {
    /// Every source relation maps into the target relation lattice.
    pub well_defined: bool,
    pub src_invariants: InvariantFactors,
    pub dst_invariants: InvariantFactors,
    /// Isomorphism: equal invariants and equal relation lattices.
    pub iso: bool,
}

/// The class map on the shared generator basis, with its isomorphism
/// verdict: well-defined iff relations map into relations, bijective on the
/// quotients iff the two relation lattices coincide.
pub fn theta_map(
    src: &PresentedGroup,
    dst: &PresentedGroup,
) -> Result<(GroupHom, ThetaVerdict), K0Error> {
    if src.generators != dst.generators {
        return Err(K0Error::GeneratorMismatch);
    }
    let hom = GroupHom::identity(src.generators.len());
    let dst_basis = dst.basis();
    let well_defined = src
        .relation_rows()
        .all(|row| dst_basis.contains(&hom.apply(&row)));
    let src_invariants = src.invariants();
    let dst_invariants = dst.invariants();
    // equal lattices by mutual containment of the generating rows
    let iso = well_defined && src_invariants == dst_invariants && {
        let src_basis = src.basis();
        dst.relation_rows().all(|row| src_basis.contains(&row))
    };
    Ok((hom, ThetaVerdict { well_defined, src_invariants, dst_invariants, iso }))
}

/// Report of the three assumptions behind the inverse of the class map.
#[derive(Debug, Clone)]
pub struct AssumptionsReport {
    /// Every stable object is geometric: affirmed by the classification,
    /// with a witness count of classified stable generators.
    pub s1_stable_generators: usize,
    pub s1: bool,
    /// Every Grothendieck relation lies in the cobordism relation lattice;
    /// on failure, the label of the first relation outside it.
    pub s2: Result<usize, String>,
    /// Every sampled brane decomposes into its stable factors inside the
    /// cobordism group; on failure, the label of the first witness.
    pub s3: Result<usize, String>,
}

impl AssumptionsReport {
    pub fn passed(&self) -> bool {
        self.s1 && self.s2.is_ok() && self.s3.is_ok()
    }
}

/// Checks the assumptions on a pair of presentations sharing a basis.
pub fn check_assumptions(
    k0: &PresentedGroup,
    omega: &PresentedGroup,
) -> Result<AssumptionsReport, K0Error> {
    if k0.generators != omega.generators {
        return Err(K0Error::GeneratorMismatch);
    }
    let s1_stable_generators = k0
        .generators
        .iter()
        .filter(|g| g.jordan == 1 && g.shift == 0)
        .count();
    let omega_basis = omega.basis();
    let mut s2 = Ok(0usize);
    let mut checked = 0;
    for rel in &k0.relations {
        if omega_basis.contains(&rel.row) {
            checked += 1;
        } else {
            s2 = Err(format!("{:?} relation outside the cobordism lattice", rel.kind));
            break;
        }
    }
    if s2.is_ok() {
        s2 = Ok(checked);
    }
    // sample: every bounded indecomposable with a nontrivial Jordan size
    let mut s3 = Ok(0usize);
    let mut s3_checked = 0;
    for g in &k0.generators {
        if g.jordan < 2 {
            continue;
        }
        let atom = SemistableAtom::new(g.brick.clone(), g.jordan, g.shift as i64);
        let row = omega.jordan_sum_row(&atom).expect("generator atom");
        if omega_basis.contains(&row) {
            s3_checked += 1;
        } else {
            s3 = Err(atom_label(&atom, omega.params.modulus));
            break;
        }
    }
    if s3.is_ok() {
        s3 = Ok(s3_checked);
    }
    Ok(AssumptionsReport { s1_stable_generators, s1: true, s2, s3 })
}

fn atom_label(atom: &SemistableAtom, modulus: u32) -> String {
    format!(
        "brick(r={},d={},x={}/{},m={})[{}]^{}",
        atom.brick.r, atom.brick.d, atom.brick.point, modulus, atom.brick.monodromy,
        atom.shift, atom.jordan
    )
}

/// Bases of the charge kernel and the Euler radical over a sampled class
/// set, with the verdict that they coincide.
#[derive(Debug, Clone)]
pub struct RadicalReport {
    pub kernel_basis: Vec<Vec<num_bigint::BigInt>>,
    pub radical_basis: Vec<Vec<num_bigint::BigInt>>,
    pub equal: bool,
    /// Rank of the image of the charge map on the sampled classes.
    pub quotient_rank: usize,
}

/// On the subgroup generated by the sampled atoms, the kernel of the charge
/// map and the radical of the Euler pairing; they agree whenever the sample
/// spans both charge directions.
pub fn euler_radical(atoms: &[SemistableAtom]) -> RadicalReport {
    use num_bigint::BigInt;
    let n = atoms.len();
    let charge_rows: Vec<Vec<BigInt>> = atoms
        .iter()
        .map(|a| {
            let z = a.charge();
            vec![z.re.numer().clone(), z.im.numer().clone()]
        })
        .collect();
    let kernel_basis = snf::left_kernel(&charge_rows, 2);
    let euler_rows: Vec<Vec<BigInt>> = atoms
        .iter()
        .map(|a| {
            atoms
                .iter()
                .map(|b| BigInt::from(crate::base::euler_form(a, b)))
                .collect()
        })
        .collect();
    let radical_basis = snf::left_kernel(&euler_rows, n);
    let hk = snf::hermite_rows(kernel_basis.clone(), n);
    let hr = snf::hermite_rows(radical_basis.clone(), n);
    let equal = hk == hr;
    let quotient_rank = n - hk.len();
    RadicalReport { kernel_basis, radical_basis, equal, quotient_rank }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bad_modulus_rejected() {
        assert!(matches!(
            k0_presentation(ModelParams::new(1, 2)),
            Err(K0Error::BadModulus(1))
        ));
    }

    #[test]
    fn point_sequence_row_shape() {
        let g = k0_presentation(ModelParams::new(2, 2)).unwrap();
        // some point-sequence row: [O(D-Q)] - [O(D)] + [k(Q)] = 0
        let rel = g
            .relations
            .iter()
            .find(|r| r.kind == RelationKind::PointSequence)
            .unwrap();
        assert_eq!(rel.row.len(), 3);
        let mut coeffs: Vec<num_bigint::BigInt> =
            rel.row.iter().map(|(_, v)| v.clone()).collect();
        coeffs.sort();
        let expect: Vec<num_bigint::BigInt> =
            [-1, 1, 1].iter().map(|&v| num_bigint::BigInt::from(v)).collect();
        assert_eq!(coeffs, expect);
    }

    #[test]
    fn shift_row_shape() {
        let g = k0_presentation(ModelParams::new(2, 2)).unwrap();
        let rel = g.relations.iter().find(|r| r.kind == RelationKind::Shift).unwrap();
        assert_eq!(rel.row.len(), 2);
        assert!(rel.row.iter().all(|(_, v)| v == &num_bigint::BigInt::from(1)));
    }

    #[test]
    fn untwisted_rank_row_is_the_surgery_relation() {
        // the twist-zero instance reads [E] = (r-1)[O] + [det E]: a rank-two
        // stable against the structure class and its determinant line
        let g = k0_presentation(ModelParams::new(2, 2)).unwrap();
        let e = g
            .gen_index(&GenKey {
                brick: Brick::new(2, 1, 0, 0).unwrap(),
                jordan: 1,
                shift: 0,
            })
            .unwrap();
        let o = g
            .gen_index(&GenKey { brick: Brick::new(1, 0, 0, 0).unwrap(), jordan: 1, shift: 0 })
            .unwrap();
        let det = g
            .gen_index(&GenKey { brick: Brick::new(1, 1, 0, 0).unwrap(), jordan: 1, shift: 0 })
            .unwrap();
        let expected = snf::sparse_row(&[(o, 1), (e, -1), (det, 1)]);
        assert!(
            g.relations
                .iter()
                .any(|r| r.kind == RelationKind::RankSequence && r.row == expected),
            "missing surgery-shaped rank row"
        );
    }

    #[test]
    fn invariants_are_two_free_two_torsion() {
        for n in [2u32, 3] {
            let g = k0_presentation(ModelParams::new(n, n as i64)).unwrap();
            let inv = g.invariants();
            assert_eq!(inv.free_rank, 2, "modulus {}", n);
            let expect = vec![num_bigint::BigInt::from(n), num_bigint::BigInt::from(n)];
            assert_eq!(inv.torsion, expect, "modulus {}", n);
        }
    }

    #[test]
    fn invariants_stable_under_bound_growth() {
        // once saturated (bound >= modulus), enlarging the bound cannot
        // change the quotient
        let a = k0_presentation(ModelParams::new(2, 2)).unwrap().invariants();
        let b = k0_presentation(ModelParams::new(2, 3)).unwrap().invariants();
        let c = k0_presentation(ModelParams::new(2, 4)).unwrap().invariants();
        assert_eq!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn theta_is_iso_on_matching_presentations() {
        let params = ModelParams::new(3, 3);
        let k0 = k0_presentation(params).unwrap();
        let omega = omega_lag_presentation(params).unwrap();
        let (_, verdict) = theta_map(&omega, &k0).unwrap();
        assert!(verdict.well_defined);
        assert!(verdict.iso);
        // an extra independent relation on the target breaks injectivity
        let mut bigger = k0.clone();
        bigger.relations.push(Relation {
            kind: RelationKind::PointSequence,
            row: snf::sparse_row(&[(0, 7)]),
        });
        let (_, verdict) = theta_map(&omega, &bigger).unwrap();
        assert!(verdict.well_defined);
        assert!(!verdict.iso);
        // mismatched generator sets are rejected up front
        let other = k0_presentation(ModelParams::new(3, 4)).unwrap();
        assert!(matches!(theta_map(&omega, &other), Err(K0Error::GeneratorMismatch)));
    }

    #[test]
    fn assumptions_hold_and_break_as_expected() {
        let params = ModelParams::new(2, 2);
        let k0 = k0_presentation(params).unwrap();
        let omega = omega_lag_presentation(params).unwrap();
        let report = check_assumptions(&k0, &omega).unwrap();
        assert!(report.passed());
        assert!(report.s1_stable_generators > 0);
        // dropping the local-system family breaks the factor decomposition
        let crippled = presentation_with(
            params,
            RelationToggles { local_system: false, ..RelationToggles::all() },
        )
        .unwrap();
        let report = check_assumptions(&k0, &crippled).unwrap();
        assert!(report.s3.is_err(), "expected a named witness");
        // dropping the rank sequences breaks membership of a rank row
        let crippled = presentation_with(
            params,
            RelationToggles { rank_sequences: false, ..RelationToggles::all() },
        )
        .unwrap();
        let report = check_assumptions(&k0, &crippled).unwrap();
        assert!(matches!(&report.s2, Err(msg) if msg.contains("RankSequence")));
    }

    #[test]
    fn radical_equals_charge_kernel() {
        let o = SemistableAtom::new(Brick::new(1, 0, 0, 0).unwrap(), 1, 0);
        let k = SemistableAtom::new(Brick::new(0, 1, 0, 0).unwrap(), 1, 0);
        let op = SemistableAtom::new(Brick::new(1, 1, 0, 0).unwrap(), 1, 0);
        // {O, k(p)}: trivial radical and a rank-two quotient
        let rep = euler_radical(&[o.clone(), k.clone()]);
        assert!(rep.equal);
        assert!(rep.kernel_basis.is_empty());
        assert_eq!(rep.quotient_rank, 2);
        // {O, k(p), O(p)}: [O(p)] - [O] - [k(p)] generates the radical
        let rep = euler_radical(&[o, k, op]);
        assert!(rep.equal);
        assert_eq!(rep.quotient_rank, 2);
        let h = snf::hermite_rows(rep.kernel_basis.clone(), 3);
        use num_bigint::BigInt;
        assert!(snf::row_in_span(
            &[BigInt::from(-1), BigInt::from(-1), BigInt::from(1)],
            &h
        ));
    }

    #[test]
    fn point_and_monodromy_variations_land_in_radical() {
        let k1 = SemistableAtom::new(Brick::new(0, 1, 0, 0).unwrap(), 1, 0);
        let k2 = SemistableAtom::new(Brick::new(0, 1, 1, 1).unwrap(), 1, 0);
        let o = SemistableAtom::new(Brick::new(1, 0, 0, 0).unwrap(), 1, 0);
        let rep = euler_radical(&[k1, k2, o]);
        assert!(rep.equal);
        use num_bigint::BigInt;
        let h = snf::hermite_rows(rep.kernel_basis.clone(), 3);
        // difference of the two skyscrapers is in the kernel
        assert!(snf::row_in_span(
            &[BigInt::from(1), BigInt::from(-1), BigInt::from(0)],
            &h
        ));
    }
}
