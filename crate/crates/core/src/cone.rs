//! Iterated cones as finite binary trees, and the structural identities used
//! to rewrite them: re-association, zero-morphism swap, nested substitution,
//! and the K-group class of a decomposition.
//!
//! A cone node `(X -> Y)` carries a tag describing its morphism. In the
//! flattened right-nested form `(F_m[s_m] -> ... -> F_1[s_1] -> 0)` the tag on
//! each node is read as the connecting morphism between a factor and the next
//! factor down the spine, which is what the normalization engine consults.
//! Rewrites never invent a composite morphism: a tag that cannot be carried
//! through an identity degrades to `Unknown`.

use std::collections::BTreeMap;
use std::fmt;

/// What is known about the morphism a cone is taken over.
///
/// `Nonzero` is only legal when the hom oracle of the ambient model reports a
/// nonzero space in the relevant degree; the normalizer enforces this.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MorphismTag {
    Zero,
    Nonzero(String),
    Unknown,
}

impl fmt::Display for MorphismTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MorphismTag::Zero => write!(f, "zero"),
            MorphismTag::Nonzero(label) => write!(f, "nonzero:{}", label),
            MorphismTag::Unknown => write!(f, "unknown"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConeError {
    /// The position does not address a subtree of the required shape.
    BadPosition,
    /// swap_zero was applied at a cone whose tag is not Zero.
    TagNotZero,
    /// The inner decomposition does not decompose the addressed leaf's object
    /// (checked on K-group classes).
    ObjectMismatch,
    /// The expression is not in flattened form where one was required.
    NotFlattened,
}

impl fmt::Display for ConeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeError::BadPosition => write!(f, "position does not address the required shape"),
            ConeError::TagNotZero => write!(f, "addressed cone is not tagged zero"),
            ConeError::ObjectMismatch => write!(f, "inner expression does not decompose the leaf"),
            ConeError::NotFlattened => write!(f, "expression is not a flattened decomposition"),
        }
    }
}

impl std::error::Error for ConeError {}

/// A step into a cone tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Source,
    Target,
}

/// An iterated cone over leaves of type `L`, each leaf carrying a shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConeExpr<L> {
    Zero,
    Leaf { obj: L, shift: i64 },
    Cone {
        source: Box<ConeExpr<L>>,
        target: Box<ConeExpr<L>>,
        tag: MorphismTag,
    },
}

/// A formal integer combination of leaf objects; leaf shifts contribute the
/// sign `(-1)^shift`.
pub type FormalSum<L> = BTreeMap<L, i64>;

/// Maps a leaf object to its class in a common K-group basis, so that two
/// decompositions with different leaves can be compared. The engine uses the
/// multiset of stable constituents as the basis.
pub trait LeafClass {
    type Key: Ord + Clone;
    fn class(&self) -> FormalSum<Self::Key>;
}

impl<L: Clone> ConeExpr<L> {
    pub fn leaf(obj: L, shift: i64) -> Self {
        ConeExpr::Leaf { obj, shift }
    }

    pub fn cone(source: ConeExpr<L>, target: ConeExpr<L>, tag: MorphismTag) -> Self {
        ConeExpr::Cone {
            source: Box::new(source),
            target: Box::new(target),
            tag,
        }
    }

    /// `(X -> Y)[k] = (X[k] -> Y[k])`: shift distributes over the tree.
    pub fn shifted(&self, k: i64) -> Self {
        match self {
            ConeExpr::Zero => ConeExpr::Zero,
            ConeExpr::Leaf { obj, shift } => ConeExpr::Leaf {
                obj: obj.clone(),
                shift: shift + k,
            },
            ConeExpr::Cone { source, target, tag } => ConeExpr::Cone {
                source: Box::new(source.shifted(k)),
                target: Box::new(target.shifted(k)),
                tag: tag.clone(),
            },
        }
    }

    pub fn subtree(&self, pos: &[Step]) -> Result<&ConeExpr<L>, ConeError> {
        let mut cur = self;
        for step in pos {
            match cur {
                ConeExpr::Cone { source, target, .. } => {
                    cur = match step {
                        Step::Source => source,
                        Step::Target => target,
                    };
                }
                _ => return Err(ConeError::BadPosition),
            }
        }
        Ok(cur)
    }

    fn replace(&self, pos: &[Step], new: ConeExpr<L>) -> Result<ConeExpr<L>, ConeError> {
        if pos.is_empty() {
            return Ok(new);
        }
        match self {
            ConeExpr::Cone { source, target, tag } => {
                let (step, rest) = (pos[0], &pos[1..]);
                match step {
                    Step::Source => Ok(ConeExpr::Cone {
                        source: Box::new(source.replace(rest, new)?),
                        target: target.clone(),
                        tag: tag.clone(),
                    }),
                    Step::Target => Ok(ConeExpr::Cone {
                        source: source.clone(),
                        target: Box::new(target.replace(rest, new)?),
                        tag: tag.clone(),
                    }),
                }
            }
            _ => Err(ConeError::BadPosition),
        }
    }

    pub fn leaves(&self) -> Vec<(&L, i64)> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<(&'a L, i64)>) {
        match self {
            ConeExpr::Zero => {}
            ConeExpr::Leaf { obj, shift } => out.push((obj, *shift)),
            ConeExpr::Cone { source, target, .. } => {
                source.collect_leaves(out);
                target.collect_leaves(out);
            }
        }
    }
}

impl<L: Clone + Ord> ConeExpr<L> {
    /// The K-group class as a formal combination of leaf objects: for a cone,
    /// `[(X -> Y)] = [Y] - [X]`; a leaf with shift `s` contributes
    /// `(-1)^s [obj]`. For the flattened form `(X_1 -> ... -> X_m)` this
    /// expands to `[X_m] - sum_{i<m} [X_i]`.
    pub fn k0_class(&self) -> FormalSum<L> {
        let mut sum = BTreeMap::new();
        self.fold_signed(1, &mut |obj, sign, sum: &mut FormalSum<L>| {
            *sum.entry(obj.clone()).or_insert(0) += sign;
        }, &mut sum);
        sum.retain(|_, c| *c != 0);
        sum
    }
}

impl<L: Clone> ConeExpr<L> {
    fn fold_signed<A>(
        &self,
        sign: i64,
        visit: &mut impl FnMut(&L, i64, &mut A),
        acc: &mut A,
    ) {
        match self {
            ConeExpr::Zero => {}
            ConeExpr::Leaf { obj, shift } => {
                let s = if shift.rem_euclid(2) == 0 { sign } else { -sign };
                visit(obj, s, acc);
            }
            ConeExpr::Cone { source, target, .. } => {
                target.fold_signed(sign, visit, acc);
                source.fold_signed(-sign, visit, acc);
            }
        }
    }
}

impl<L: Clone + LeafClass> ConeExpr<L> {
    /// The K-group class mapped through [`LeafClass`] into the common basis.
    pub fn k0_class_keys(&self) -> FormalSum<L::Key> {
        let mut sum: FormalSum<L::Key> = BTreeMap::new();
        self.fold_signed(1, &mut |obj: &L, sign, sum: &mut FormalSum<L::Key>| {
            for (key, coeff) in obj.class() {
                *sum.entry(key).or_insert(0) += sign * coeff;
            }
        }, &mut sum);
        sum.retain(|_, c| *c != 0);
        sum
    }
}

/// Re-associates at `pos`: `(X -> (Y -> Z))` becomes `((X[-1] -> Y) -> Z)`,
/// and the mirrored shape rewrites back. Tags are carried along the
/// adjacencies they describe; a tag that has no counterpart degrades to
/// `Unknown`.
pub fn reassociate<L: Clone>(e: &ConeExpr<L>, pos: &[Step]) -> Result<ConeExpr<L>, ConeError> {
    let sub = e.subtree(pos)?;
    let new = match sub {
        ConeExpr::Cone { source, target, tag } => match target.as_ref() {
            // (X -> (Y -> Z)) ~ ((X[-1] -> Y) -> Z)
            ConeExpr::Cone {
                source: y,
                target: z,
                tag: inner_tag,
            } => ConeExpr::Cone {
                source: Box::new(ConeExpr::Cone {
                    source: Box::new(source.shifted(-1)),
                    target: y.clone(),
                    tag: tag.clone(),
                }),
                target: z.clone(),
                tag: inner_tag.clone(),
            },
            _ => match source.as_ref() {
                // ((X -> Y) -> Z) ~ (X[1] -> (Y -> Z))
                ConeExpr::Cone {
                    source: x,
                    target: y,
                    tag: inner_tag,
                } => ConeExpr::Cone {
                    source: Box::new(x.shifted(1)),
                    target: Box::new(ConeExpr::Cone {
                        source: y.clone(),
                        target: target.clone(),
                        tag: tag.clone(),
                    }),
                    tag: inner_tag.clone(),
                },
                _ => return Err(ConeError::BadPosition),
            },
        },
        _ => return Err(ConeError::BadPosition),
    };
    e.replace(pos, new)
}

/// Swaps the two sides of a zero-tagged cone: `(X ->0 Y) ~ (Y[-1] ->0 X[1])`.
/// Both readings are the direct sum `X[1] + Y`, so leaves only acquire the
/// compensating shifts.
pub fn swap_zero<L: Clone>(e: &ConeExpr<L>, pos: &[Step]) -> Result<ConeExpr<L>, ConeError> {
    let sub = e.subtree(pos)?;
    let new = match sub {
        ConeExpr::Cone { source, target, tag } => {
            if *tag != MorphismTag::Zero {
                return Err(ConeError::TagNotZero);
            }
            ConeExpr::Cone {
                source: Box::new(target.shifted(-1)),
                target: Box::new(source.shifted(1)),
                tag: MorphismTag::Zero,
            }
        }
        _ => return Err(ConeError::BadPosition),
    };
    e.replace(pos, new)
}

/// Substitutes a nested decomposition for a leaf. `inner` must be a flattened
/// decomposition of the addressed leaf's object (with its shift) ending in
/// zero; the check is on K-group classes. When the leaf sits in source
/// position its replacement factors are spliced in shifted by `+1`; a leaf in
/// final target position takes the inner decomposition as is.
pub fn substitute_nested<L: Clone + LeafClass>(
    outer: &ConeExpr<L>,
    leaf_pos: &[Step],
    inner: &ConeExpr<L>,
) -> Result<ConeExpr<L>, ConeError> {
    let leaf = outer.subtree(leaf_pos)?;
    let leaf = match leaf {
        ConeExpr::Leaf { .. } => leaf.clone(),
        _ => return Err(ConeError::BadPosition),
    };
    if !ends_in_zero(inner) {
        return Err(ConeError::NotFlattened);
    }
    if inner.k0_class_keys() != leaf.k0_class_keys() {
        return Err(ConeError::ObjectMismatch);
    }
    let source_position = leaf_pos.last().map(|s| *s == Step::Source).unwrap_or(false);
    if source_position {
        // factors of the inner decomposition, shifted by +1, spliced as a
        // chain in place of the leaf
        let rest = parent_target(outer, leaf_pos)?;
        let mut chain = rest;
        let factors = spine_factors(inner);
        for (expr, tag) in factors.into_iter().rev() {
            chain = ConeExpr::Cone {
                source: Box::new(expr.shifted(1)),
                target: Box::new(chain),
                tag,
            };
        }
        outer.replace(&leaf_pos[..leaf_pos.len() - 1], chain)
    } else {
        // final target: plug the decomposition in directly
        outer.replace(leaf_pos, inner.clone())
    }
}

fn parent_target<L: Clone>(outer: &ConeExpr<L>, leaf_pos: &[Step]) -> Result<ConeExpr<L>, ConeError> {
    let parent = outer.subtree(&leaf_pos[..leaf_pos.len() - 1])?;
    match parent {
        ConeExpr::Cone { target, .. } => Ok(target.as_ref().clone()),
        _ => Err(ConeError::BadPosition),
    }
}

fn ends_in_zero<L>(e: &ConeExpr<L>) -> bool {
    match e {
        ConeExpr::Zero => true,
        ConeExpr::Leaf { .. } => false,
        ConeExpr::Cone { target, .. } => ends_in_zero(target),
    }
}

/// The factors along the right spine, each with the tag of its cone node.
fn spine_factors<L: Clone>(e: &ConeExpr<L>) -> Vec<(ConeExpr<L>, MorphismTag)> {
    let mut out = Vec::new();
    let mut cur = e;
    loop {
        match cur {
            ConeExpr::Zero => break,
            ConeExpr::Leaf { .. } => break,
            ConeExpr::Cone { source, target, tag } => {
                out.push((source.as_ref().clone(), tag.clone()));
                cur = target;
            }
        }
    }
    out
}

/// A flattened decomposition `(F_1[s_1] -> ... -> F_k[s_k] -> 0)`: the list of
/// leaf factors with their shifts, plus the tag of each adjacency. `tags[i]`
/// describes the connecting morphism between entry `i` and entry `i+1` (the
/// last tag is the map to the zero object and is always `Zero`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flats<L> {
    pub entries: Vec<(L, i64)>,
    pub tags: Vec<MorphismTag>,
}

/// Rewrites an arbitrary cone expression into the canonical flattened form by
/// repeated re-association, accumulating the shifts the identities demand.
/// Cones over the zero object simplify away; a final leaf `T` becomes
/// `(... -> T[-1] -> 0)`.
/// Tag placement: a node whose source flattens to a single factor keeps its
/// tag on the junction adjacency; a composite source leaves an `Unknown`
/// junction, since re-association does not specify the composite morphism.
pub fn flatten<L: Clone>(e: &ConeExpr<L>) -> Flats<L> {
    let mut items = flatten_rec(e, 0);
    if let Some(last) = items.last_mut() {
        // the final adjacency is into the zero object
        last.2 = MorphismTag::Zero;
    }
    let mut entries = Vec::with_capacity(items.len());
    let mut tags = Vec::with_capacity(items.len());
    for (obj, shift, tag) in items {
        entries.push((obj, shift));
        tags.push(tag);
    }
    Flats { entries, tags }
}

fn flatten_rec<L: Clone>(e: &ConeExpr<L>, shift: i64) -> Vec<(L, i64, MorphismTag)> {
    match e {
        ConeExpr::Zero => Vec::new(),
        ConeExpr::Leaf { obj, shift: s } => {
            // a bare object X is the cone (X[-1] -> 0)
            vec![(obj.clone(), s + shift - 1, MorphismTag::Zero)]
        }
        ConeExpr::Cone { source, target, tag } => {
            // with A ~ (A_1 -> ... -> A_p -> 0), B ~ (B_1 -> ... -> B_q -> 0),
            // the cone (A -> B) is (A_1[1] -> ... -> A_p[1] -> B_1 -> ... -> B_q -> 0)
            let mut a = flatten_rec(source, shift + 1);
            let b = flatten_rec(target, shift);
            let junction = if b.is_empty() {
                MorphismTag::Zero
            } else if a.len() == 1 {
                tag.clone()
            } else {
                MorphismTag::Unknown
            };
            if let Some(last) = a.last_mut() {
                last.2 = junction;
            }
            a.extend(b);
            a
        }
    }
}

/// Rebuilds the canonical right-nested expression ending in zero.
pub fn unflatten<L: Clone>(flats: &Flats<L>) -> ConeExpr<L> {
    let mut expr = ConeExpr::Zero;
    for (i, (obj, shift)) in flats.entries.iter().enumerate().rev() {
        let tag = flats.tags.get(i).cloned().unwrap_or(MorphismTag::Unknown);
        expr = ConeExpr::Cone {
            source: Box::new(ConeExpr::Leaf {
                obj: obj.clone(),
                shift: *shift,
            }),
            target: Box::new(expr),
            tag,
        };
    }
    expr
}
