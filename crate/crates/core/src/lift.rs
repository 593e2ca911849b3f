//! Lifting the base model to the category of cobordisms: generators are base
//! objects included at integer heights, the slicing offsets phases by
//! `kappa * height`, and a cobordism's ends give it an iterated cone
//! decomposition over the included ends of height above one.

use crate::base::{self, hom_dim_objects, hom_dims_objects, BaseObject, Grading, K0Sum};
use crate::cone::{ConeExpr, FormalSum, LeafClass, MorphismTag};
use crate::phase::{Angle, Charge};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LiftError {
    /// kappa must be an even integer of size at least four.
    BadKappa { value: i64, reason: KappaReason },
    /// Slicing generators live at heights strictly above one.
    BadHeight(i64),
    /// The base object of the generator is not semistable.
    NotSemistable,
    /// End data that is not a cobordism: unsorted or duplicated heights,
    /// or an empty object away from the bottom end.
    MalformedSpec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaReason {
    Odd,
    TooSmall,
}

impl fmt::Display for LiftError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiftError::BadKappa { value, reason } => match reason {
                KappaReason::Odd => write!(f, "kappa = {} is odd", value),
                KappaReason::TooSmall => write!(f, "kappa = {} is smaller than 4", value),
            },
            LiftError::BadHeight(h) => write!(f, "height {} is not above 1", h),
            LiftError::NotSemistable => write!(f, "base object is not semistable"),
            LiftError::MalformedSpec(msg) => write!(f, "malformed cobordism: {}", msg),
        }
    }
}

impl std::error::Error for LiftError {}

/// The slicing parameter: an even integer at least four.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kappa(i64);

impl Kappa {
    pub fn value(&self) -> i64 {
        self.0
    }

    /// Bypasses validation, for demonstrating what breaks below the legal
    /// range. Not part of the supported surface.
    #[doc(hidden)]
    pub fn unchecked(value: i64) -> Kappa {
        Kappa(value)
    }
}

/// Accepts exactly the even integers `>= 4` (that is, `2k` with `k > 1`).
pub fn validate_kappa(k: i64) -> Result<Kappa, LiftError> {
    if k.rem_euclid(2) != 0 {
        return Err(LiftError::BadKappa { value: k, reason: KappaReason::Odd });
    }
    if k < 4 {
        return Err(LiftError::BadKappa { value: k, reason: KappaReason::TooSmall });
    }
    Ok(Kappa(k))
}

/// A base object included at a height `> 1` and shifted: the building block
/// of the lifted slicing. Height one never carries a generator; it only
/// occurs as the bottom end of a cobordism.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LiftedGenerator {
    height: i64,
    pub shift: i64,
    pub base: BaseObject,
}

impl LiftedGenerator {
    pub fn new(height: i64, shift: i64, base: BaseObject) -> Result<LiftedGenerator, LiftError> {
        if height < 2 {
            return Err(LiftError::BadHeight(height));
        }
        Ok(LiftedGenerator { height, shift, base })
    }

    pub fn height(&self) -> i64 {
        self.height
    }

    pub fn shifted(&self, k: i64) -> LiftedGenerator {
        LiftedGenerator {
            height: self.height,
            shift: self.shift + k,
            base: self.base.clone(),
        }
    }

    /// Absorbs the generator shift into the base atoms, so isomorphic
    /// generators compare equal.
    pub fn canonical(&self) -> LiftedGenerator {
        LiftedGenerator {
            height: self.height,
            shift: 0,
            base: self.base.shifted(self.shift),
        }
    }

    /// The charge of the generator equals the base charge of its own-height
    /// restriction: `(-1)^shift * Z(base)`.
    pub fn charge(&self) -> Charge {
        base::central_charge(&self.base.shifted(self.shift))
    }
}

/// Stable classes of the lifted K-group basis are keyed by height.
pub type LiftedK0Sum = FormalSum<(i64, base::Brick)>;

impl LeafClass for LiftedGenerator {
    type Key = (i64, base::Brick);
    fn class(&self) -> LiftedK0Sum {
        let mut out = BTreeMap::new();
        for (brick, coeff) in base::object_k0(&self.base.shifted(self.shift)) {
            *out.entry((self.height, brick)).or_insert(0) += coeff;
        }
        out
    }
}

/// `Phi(I^h X [r]) = Phi(X) + r - kappa * h`, exact on the winding.
pub fn lifted_phase(g: &LiftedGenerator, kappa: Kappa) -> Result<Angle, LiftError> {
    let phi = g.base.common_phase().ok_or(LiftError::NotSemistable)?;
    Ok(phi.shifted(g.shift - kappa.value() * g.height))
}

/// Hom dimension between lifted generators in a single degree: zero whenever
/// the source height is below the target height, otherwise the base
/// dimension between the shifted base objects.
pub fn hom_dim_lifted(src: &LiftedGenerator, tgt: &LiftedGenerator, degree: i64) -> u64 {
    if src.height < tgt.height {
        return 0;
    }
    hom_dim_objects(
        &src.base.shifted(src.shift),
        &tgt.base.shifted(tgt.shift),
        degree,
    )
}

/// All hom dimensions between lifted generators.
pub fn hom_dims_lifted(src: &LiftedGenerator, tgt: &LiftedGenerator) -> BTreeMap<i64, u64> {
    if src.height < tgt.height {
        return BTreeMap::new();
    }
    hom_dims_objects(&src.base.shifted(src.shift), &tgt.base.shifted(tgt.shift))
}

/// One horizontal end of a cobordism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CobordismEnd {
    pub height: i64,
    pub object: BaseObject,
    pub grading: Option<Grading>,
}

/// The end data of a positively ended cobordism: strictly increasing heights,
/// the bottom end at height one when present (it may be explicitly empty).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CobordismSpec {
    ends: Vec<CobordismEnd>,
}

impl CobordismSpec {
    pub fn new(ends: Vec<CobordismEnd>) -> Result<CobordismSpec, LiftError> {
        for w in ends.windows(2) {
            if w[0].height == w[1].height {
                return Err(LiftError::MalformedSpec(format!(
                    "duplicate height {}",
                    w[0].height
                )));
            }
            if w[0].height > w[1].height {
                return Err(LiftError::MalformedSpec("heights are not increasing".into()));
            }
        }
        for e in &ends {
            if e.height < 1 {
                return Err(LiftError::MalformedSpec(format!("height {} below 1", e.height)));
            }
            if e.object.is_empty() && e.height != 1 {
                return Err(LiftError::MalformedSpec(
                    "only the bottom end may be empty".into(),
                ));
            }
        }
        Ok(CobordismSpec { ends })
    }

    pub fn ends(&self) -> &[CobordismEnd] {
        &self.ends
    }

    /// The end at height one, if any.
    pub fn bottom(&self) -> Option<&CobordismEnd> {
        self.ends.first().filter(|e| e.height == 1)
    }

    pub fn upper_ends(&self) -> impl Iterator<Item = &CobordismEnd> {
        self.ends.iter().filter(|e| e.height > 1)
    }
}

/// The decomposition of a cobordism as an iterated cone over its included
/// upper ends, from the top height down, every leaf shifted by `-1` and the
/// spine ending in zero. Adjacent tags are unknown unless the hom oracle
/// forces them to zero.
pub fn cone_decomposition(spec: &CobordismSpec) -> Result<ConeExpr<LiftedGenerator>, LiftError> {
    let mut gens = Vec::new();
    for end in spec.upper_ends() {
        gens.push(LiftedGenerator::new(end.height, 0, end.object.clone())?);
    }
    // descending height: top end first
    gens.reverse();
    let mut expr = ConeExpr::Zero;
    for (i, gen) in gens.iter().enumerate().rev() {
        let tag = if i + 1 < gens.len() {
            adjacency_tag(gen, &gens[i + 1])
        } else {
            MorphismTag::Zero
        };
        expr = ConeExpr::cone(ConeExpr::leaf(gen.clone(), -1), expr, tag);
    }
    Ok(expr)
}

/// Default tag for the adjacency of two consecutive flattened leaves with
/// shifts `[-1]`: the connecting morphism lives in `Hom^1(upper, lower)`, so
/// a vanishing space forces the zero tag.
pub fn adjacency_tag(upper: &LiftedGenerator, lower: &LiftedGenerator) -> MorphismTag {
    if hom_dim_lifted(upper, lower, 1) == 0 {
        MorphismTag::Zero
    } else {
        MorphismTag::Unknown
    }
}

/// Restriction of a generator to a height: the base object at the
/// generator's own height, the once-down-shifted base at height one, zero
/// elsewhere; an extra shift `r` applies on top.
pub fn restrict_generator(g: &LiftedGenerator, height: i64, r: i64) -> BaseObject {
    if height == g.height {
        g.base.shifted(g.shift + r)
    } else if height == 1 {
        g.base.shifted(g.shift + r - 1)
    } else {
        BaseObject::empty()
    }
}

/// Restriction extends leafwise over cones (it is a triangulated functor).
pub fn restrict_expr(
    expr: &ConeExpr<LiftedGenerator>,
    height: i64,
    r: i64,
) -> ConeExpr<BaseObject> {
    match expr {
        ConeExpr::Zero => ConeExpr::Zero,
        ConeExpr::Leaf { obj, shift } => {
            let restricted = restrict_generator(obj, height, r);
            if restricted.is_empty() {
                ConeExpr::Zero
            } else {
                ConeExpr::leaf(restricted, *shift)
            }
        }
        ConeExpr::Cone { source, target, tag } => ConeExpr::cone(
            restrict_expr(source, height, r),
            restrict_expr(target, height, r),
            tag.clone(),
        ),
    }
}

impl LeafClass for BaseObject {
    type Key = base::Brick;
    fn class(&self) -> K0Sum {
        base::object_k0(self)
    }
}

/// The lifted K-group class of an expression over generators.
pub fn lifted_k0(expr: &ConeExpr<LiftedGenerator>) -> LiftedK0Sum {
    expr.k0_class_keys()
}

/// The lifted central charge: the sum over heights `>= 2` of the base charge
/// of the restriction to that height, combined through the signs of the
/// K-group class. Height is invisible to the charge, so this is the base
/// charge of the formal class.
pub fn central_charge_lifted(expr: &ConeExpr<LiftedGenerator>) -> Charge {
    let mut z = Charge::zero();
    for ((_, brick), coeff) in lifted_k0(expr) {
        z = z.add(&brick.charge().scaled(coeff));
    }
    z
}

/// Membership in the slicing at phase `phi`: every summand of the direct sum
/// must be a generator of lifted phase exactly `phi`.
pub fn slicing_member(summands: &[LiftedGenerator], phi: &Angle, kappa: Kappa) -> bool {
    summands.iter().all(|g| match lifted_phase(g, kappa) {
        Ok(p) => p == *phi,
        Err(_) => false,
    })
}
