//! A finite desk model of the base category: every object is a direct sum of
//! shifted indecomposable semistables, and every indecomposable semistable is
//! classified by a coprime (rank, degree) brick, a point, a monodromy, and a
//! Jordan size.
//!
//! Points live in `(1/N)Z/Z` and monodromies in `Z/N` for a configurable
//! modulus `N`; both are stored as residues and the modulus is a parameter of
//! the operations that need it, never ambient state. Charges are the exact
//! Gaussian integers `-deg + i*rk`.

use crate::phase::{phase_of_charge, Angle, Charge};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseError {
    /// Rank/degree data violating the brick normal form.
    InvalidBrick(String),
    /// The empty object has no filtration.
    EmptyObject,
    /// The acting matrix does not have determinant one.
    NotUnimodular,
    /// Gradings with parallel directions have no transverse intersection.
    ParallelDirections,
}

impl fmt::Display for BaseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseError::InvalidBrick(msg) => write!(f, "invalid brick: {}", msg),
            BaseError::EmptyObject => write!(f, "empty object"),
            BaseError::NotUnimodular => write!(f, "matrix is not in SL(2,Z)"),
            BaseError::ParallelDirections => write!(f, "directions are parallel"),
        }
    }
}

impl std::error::Error for BaseError {}

/// Canonical coordinates of a stable object: coprime rank and degree, a point
/// and a monodromy. Rank zero forces degree one (skyscraper normal form);
/// torsion of length `l` at a point is the skyscraper brick with Jordan size
/// `l`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Brick {
    pub r: i64,
    pub d: i64,
    pub point: u32,
    pub monodromy: u32,
}

impl Brick {
    pub fn new(r: i64, d: i64, point: u32, monodromy: u32) -> Result<Brick, BaseError> {
        if r < 0 {
            return Err(BaseError::InvalidBrick("rank must be nonnegative".into()));
        }
        if r == 0 && d != 1 {
            return Err(BaseError::InvalidBrick(
                "rank zero requires degree one (skyscraper normal form)".into(),
            ));
        }
        if r > 0 && r.gcd(&d) != 1 {
            return Err(BaseError::InvalidBrick(format!(
                "rank {} and degree {} are not coprime",
                r, d
            )));
        }
        Ok(Brick { r, d, point, monodromy })
    }

    /// Structure-sheaf brick `(1, 0)` at the base point.
    pub fn structure() -> Brick {
        Brick { r: 1, d: 0, point: 0, monodromy: 0 }
    }

    /// Skyscraper brick `(0, 1)` at the given point.
    pub fn skyscraper(point: u32, monodromy: u32) -> Brick {
        Brick { r: 0, d: 1, point, monodromy }
    }

    /// Same rank and degree, ignoring point and monodromy.
    pub fn same_slope(&self, other: &Brick) -> bool {
        self.r == other.r && self.d == other.d
    }

    /// The charge of the unshifted stable object: `-d + i*r`.
    pub fn charge(&self) -> Charge {
        Charge::from_ints(-self.d, self.r)
    }

    /// Phase of the unshifted stable object, in `(0, 1]`.
    pub fn phase(&self) -> Angle {
        phase_of_charge(&self.charge()).expect("brick charge is nonzero")
    }
}

/// An indecomposable semistable object: `jordan` successive extensions of the
/// stable brick by itself, shifted. Total rank and degree are `jordan` times
/// the brick's; `jordan == 1` iff the object is stable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SemistableAtom {
    pub brick: Brick,
    pub jordan: i64,
    pub shift: i64,
}

impl SemistableAtom {
    pub fn new(brick: Brick, jordan: i64, shift: i64) -> SemistableAtom {
        assert!(jordan >= 1, "jordan size must be positive");
        SemistableAtom { brick, jordan, shift }
    }

    pub fn stable(brick: Brick) -> SemistableAtom {
        SemistableAtom::new(brick, 1, 0)
    }

    pub fn shifted(&self, k: i64) -> SemistableAtom {
        SemistableAtom {
            brick: self.brick.clone(),
            jordan: self.jordan,
            shift: self.shift + k,
        }
    }

    pub fn charge(&self) -> Charge {
        let sign = if self.shift.rem_euclid(2) == 0 { 1 } else { -1 };
        self.brick.charge().scaled(sign * self.jordan)
    }

    pub fn phase(&self) -> Angle {
        atom_phase(self)
    }
}

/// `true` iff the atom is a stable object (trivial Jordan size).
pub fn is_stable(a: &SemistableAtom) -> bool {
    a.jordan == 1
}

/// Phase of the unshifted brick charge, then shifted: `phi(E[k]) = phi(E) + k`.
pub fn atom_phase(a: &SemistableAtom) -> Angle {
    a.brick.phase().shifted(a.shift)
}

/// The Jordan-Hoelder refinement: `jordan` copies of the underlying stable
/// brick at the same shift.
pub fn jordan_holder(a: &SemistableAtom) -> Vec<SemistableAtom> {
    (0..a.jordan)
        .map(|_| SemistableAtom::new(a.brick.clone(), 1, a.shift))
        .collect()
}

/// A formal direct sum of shifted indecomposable semistables; the multiset is
/// kept sorted so equality is isomorphism in the model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BaseObject {
    atoms: Vec<SemistableAtom>,
}

impl BaseObject {
    pub fn new(mut atoms: Vec<SemistableAtom>) -> BaseObject {
        atoms.sort();
        BaseObject { atoms }
    }

    pub fn empty() -> BaseObject {
        BaseObject { atoms: Vec::new() }
    }

    pub fn single(atom: SemistableAtom) -> BaseObject {
        BaseObject { atoms: vec![atom] }
    }

    pub fn atoms(&self) -> &[SemistableAtom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn shifted(&self, k: i64) -> BaseObject {
        BaseObject::new(self.atoms.iter().map(|a| a.shifted(k)).collect())
    }

    pub fn sum(&self, other: &BaseObject) -> BaseObject {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        BaseObject::new(atoms)
    }

    /// All atoms share one phase (the zero object is not semistable here).
    pub fn is_semistable(&self) -> bool {
        self.common_phase().is_some()
    }

    pub fn common_phase(&self) -> Option<Angle> {
        let first = self.atoms.first()?;
        let phi = atom_phase(first);
        for a in &self.atoms[1..] {
            if atom_phase(a) != phi {
                return None;
            }
        }
        Some(phi)
    }
}

/// `Z = sum over atoms of (-1)^shift * jordan * (-d + i*r)`.
pub fn central_charge(obj: &BaseObject) -> Charge {
    let mut z = Charge::zero();
    for a in obj.atoms() {
        z = z.add(&a.charge());
    }
    z
}

/// Formal K-group sums over stable classes: an atom contributes
/// `(-1)^shift * jordan` times its brick.
pub type K0Sum = BTreeMap<Brick, i64>;

pub fn atom_k0(a: &SemistableAtom) -> K0Sum {
    let sign = if a.shift.rem_euclid(2) == 0 { 1 } else { -1 };
    [(a.brick.clone(), sign * a.jordan)].into_iter().collect()
}

pub fn object_k0(obj: &BaseObject) -> K0Sum {
    let mut sum = K0Sum::new();
    for a in obj.atoms() {
        for (k, c) in atom_k0(a) {
            *sum.entry(k).or_insert(0) += c;
        }
    }
    sum.retain(|_, c| *c != 0);
    sum
}

/// Builds an object realizing a formal stable class: positive coefficients as
/// unshifted stables, negative ones as once-shifted stables.
pub fn realize_k0(sum: &K0Sum) -> BaseObject {
    let mut atoms = Vec::new();
    for (brick, &coeff) in sum {
        let (copies, shift) = if coeff >= 0 { (coeff, 0) } else { (-coeff, 1) };
        for _ in 0..copies {
            atoms.push(SemistableAtom::new(brick.clone(), 1, shift));
        }
    }
    BaseObject::new(atoms)
}

/// The antisymmetric Euler form `rk * deg' - rk' * deg` on classes, with the
/// `(-1)^shift` signs of the K-group.
pub fn euler_form(a: &SemistableAtom, b: &SemistableAtom) -> i64 {
    let sa = if a.shift.rem_euclid(2) == 0 { 1 } else { -1 };
    let sb = if b.shift.rem_euclid(2) == 0 { 1 } else { -1 };
    let (ra, da) = (a.jordan * a.brick.r, a.jordan * a.brick.d);
    let (rb, db) = (b.jordan * b.brick.r, b.jordan * b.brick.d);
    sa * sb * (ra * db - rb * da)
}

/// Graded hom dimensions between two atoms, as a map degree -> dimension.
///
/// For distinct slopes the space is concentrated in one degree: degree 0 when
/// the source phase is below the target phase, degree 1 otherwise, with
/// dimension `|r*d' - r'*d| * h * h'`; the Serre-dual space shows up one
/// degree up on the reversed pair. Same brick with differing point or
/// monodromy has no morphisms at all. Identical atoms have a one-dimensional
/// space in degrees 0 and 1; equal bricks of different Jordan sizes have
/// `min(h, h')` in degrees 0 and 1. Shifts translate the degrees.
pub fn hom_dims(a: &SemistableAtom, b: &SemistableAtom) -> BTreeMap<i64, u64> {
    let delta = a.shift - b.shift;
    let mut out = BTreeMap::new();
    let mut put = |deg: i64, dim: u64| {
        if dim > 0 {
            *out.entry(deg + delta).or_insert(0) += dim;
        }
    };
    if a.brick == b.brick {
        if a.jordan == b.jordan {
            put(0, 1);
            put(1, 1);
        } else {
            let m = a.jordan.min(b.jordan) as u64;
            put(0, m);
            put(1, m);
        }
    } else if a.brick.same_slope(&b.brick) {
        // same slope, different point or monodromy: nothing survives
    } else {
        // cross of the charge vectors (-d, r); positive iff phi_a < phi_b
        let cross = a.brick.r * b.brick.d - b.brick.r * a.brick.d;
        let dim = cross.unsigned_abs() * (a.jordan as u64) * (b.jordan as u64);
        if cross > 0 {
            put(0, dim);
        } else {
            put(1, dim);
        }
    }
    out
}

/// Hom dimensions between direct sums: additive in both arguments.
pub fn hom_dims_objects(a: &BaseObject, b: &BaseObject) -> BTreeMap<i64, u64> {
    let mut out = BTreeMap::new();
    for x in a.atoms() {
        for y in b.atoms() {
            for (deg, dim) in hom_dims(x, y) {
                *out.entry(deg).or_insert(0) += dim;
            }
        }
    }
    out.retain(|_, d| *d > 0);
    out
}

pub fn hom_dim_objects(a: &BaseObject, b: &BaseObject, degree: i64) -> u64 {
    hom_dims_objects(a, b).get(&degree).copied().unwrap_or(0)
}

/// Groups the atoms by phase, strictly decreasing: the Harder-Narasimhan
/// filtration of a formal direct sum. Deterministic in the multiset.
pub fn hn_filtration(obj: &BaseObject) -> Result<Vec<(Angle, BaseObject)>, BaseError> {
    if obj.is_empty() {
        return Err(BaseError::EmptyObject);
    }
    let mut groups: BTreeMap<Angle, Vec<SemistableAtom>> = BTreeMap::new();
    for a in obj.atoms() {
        groups.entry(atom_phase(a)).or_default().push(a.clone());
    }
    Ok(groups
        .into_iter()
        .rev()
        .map(|(phi, atoms)| (phi, BaseObject::new(atoms)))
        .collect())
}

/// Acts by a matrix in SL(2,Z) on each atom's charge vector `(-d, r)` and
/// renormalizes to brick form, recording a sign flip as a shift. Point and
/// monodromy are classification data and ride along unchanged.
pub fn sl2_act(m: [[i64; 2]; 2], obj: &BaseObject) -> Result<BaseObject, BaseError> {
    if m[0][0] * m[1][1] - m[0][1] * m[1][0] != 1 {
        return Err(BaseError::NotUnimodular);
    }
    let mut atoms = Vec::new();
    for a in obj.atoms() {
        let v = (-a.brick.d, a.brick.r);
        let x = m[0][0] * v.0 + m[0][1] * v.1;
        let y = m[1][0] * v.0 + m[1][1] * v.1;
        // (x, y) is primitive; fold the ray sign into a shift
        let (r, d, parity) = if y > 0 {
            (y, -x, 0)
        } else if y < 0 {
            (-y, x, 1)
        } else if x < 0 {
            (0, -x, 0)
        } else {
            (0, x, 1)
        };
        let brick = Brick::new(r, d, a.brick.point, a.brick.monodromy)?;
        atoms.push(SemistableAtom::new(brick, a.jordan, a.shift + parity));
    }
    Ok(BaseObject::new(atoms))
}

/// A graded direction: `theta = winding + (doubled angle of dir) / 2pi`. The
/// direction is primitive and sign-canonical; the doubled angle does not see
/// the sign.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grading {
    pub winding: i64,
    dir: (i64, i64),
}

impl Grading {
    pub fn new(winding: i64, a: i64, b: i64) -> Result<Grading, BaseError> {
        if a == 0 && b == 0 {
            return Err(BaseError::ParallelDirections);
        }
        let g = a.gcd(&b);
        let (mut a, mut b) = (a / g, b / g);
        if b < 0 || (b == 0 && a < 0) {
            a = -a;
            b = -b;
        }
        Ok(Grading { winding, dir: (a, b) })
    }

    pub fn dir(&self) -> (i64, i64) {
        self.dir
    }

    pub fn shifted(&self, k: i64) -> Grading {
        Grading { winding: self.winding + k, dir: self.dir }
    }

    /// The squared direction vector, whose angle is the doubled angle.
    fn squared(&self) -> (i64, i64) {
        let (a, b) = self.dir;
        (a * a - b * b, 2 * a * b)
    }
}

// Rank of a nonzero vector's angle within [0, 2pi): even ranks are the axes.
fn angle_rank(v: (i64, i64)) -> u8 {
    match (v.0.signum(), v.1.signum()) {
        (1, 0) => 0,
        (1, 1) => 1,
        (0, 1) => 2,
        (-1, 1) => 3,
        (-1, 0) => 4,
        (-1, -1) => 5,
        (0, -1) => 6,
        (1, -1) => 7,
        _ => unreachable!("zero vector"),
    }
}

fn doubled_angle_cmp(g1: &Grading, g2: &Grading) -> Ordering {
    let s1 = g1.squared();
    let s2 = g2.squared();
    match angle_rank(s1).cmp(&angle_rank(s2)) {
        Ordering::Equal => {
            let cross =
                BigInt::from(s1.0) * BigInt::from(s2.1) - BigInt::from(s1.1) * BigInt::from(s2.0);
            if cross.is_positive() {
                Ordering::Less
            } else if cross.is_negative() {
                Ordering::Greater
            } else {
                Ordering::Equal
            }
        }
        ord => ord,
    }
}

/// The degree of the transverse intersection of two graded directions: the
/// unique integer strictly between `theta2 - theta1` and `theta2 - theta1 + 1`,
/// computed exactly as `(w2 - w1) +` (1 if the doubled-angle fraction of `g2`
/// exceeds that of `g1`, else 0).
pub fn degree_at_intersection(g1: &Grading, g2: &Grading) -> Result<i64, BaseError> {
    match doubled_angle_cmp(g2, g1) {
        Ordering::Equal => Err(BaseError::ParallelDirections),
        Ordering::Greater => Ok(g2.winding - g1.winding + 1),
        Ordering::Less => Ok(g2.winding - g1.winding),
    }
}
