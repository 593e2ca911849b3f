//! Deterministic sample generation for the test corpus and the command-line
//! axiom suite. The generator is a small splitmix so byte-identical runs do
//! not depend on an external crate's stream.

use crate::base::{BaseObject, Brick, SemistableAtom};
use crate::cone::{ConeExpr, MorphismTag};
use crate::lift::{self, CobordismEnd, CobordismSpec, LiftedGenerator};
use num_integer::Integer;

/// splitmix64
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Rng {
        Rng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, n)`.
    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }

    /// Uniform in `[lo, hi]`.
    pub fn range(&mut self, lo: i64, hi: i64) -> i64 {
        lo + self.below((hi - lo + 1) as u64) as i64
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }
}

/// A random stable brick with `|r|, |d| <= bound` (skyscraper included),
/// point and monodromy below the modulus.
pub fn random_brick(rng: &mut Rng, bound: i64, modulus: u32) -> Brick {
    let point = rng.below(modulus as u64) as u32;
    let monodromy = rng.below(modulus as u64) as u32;
    if rng.chance(1, 4) {
        return Brick::skyscraper(point, monodromy);
    }
    loop {
        let r = rng.range(1, bound);
        let d = rng.range(-bound, bound);
        if r.gcd(&d) == 1 {
            return Brick::new(r, d, point, monodromy).unwrap();
        }
    }
}

pub fn random_atom(rng: &mut Rng, bound: i64, modulus: u32, shift_range: i64) -> SemistableAtom {
    let brick = random_brick(rng, bound, modulus);
    let jordan = if rng.chance(1, 5) { 2 } else { 1 };
    let shift = rng.range(-shift_range, shift_range);
    SemistableAtom::new(brick, jordan, shift)
}

pub fn random_object(rng: &mut Rng, atoms: usize, bound: i64, modulus: u32) -> BaseObject {
    let n = 1 + rng.below(atoms as u64) as usize;
    BaseObject::new((0..n).map(|_| random_atom(rng, bound, modulus, 3)).collect())
}

pub fn random_generator(rng: &mut Rng, bound: i64, modulus: u32) -> LiftedGenerator {
    let height = rng.range(2, 8);
    let shift = rng.range(-4, 4);
    let base = BaseObject::single(random_atom(rng, bound, modulus, 3));
    LiftedGenerator::new(height, shift, base).unwrap()
}

/// Knobs of the random cobordism generator.
#[derive(Debug, Clone, Copy)]
pub struct SpecShape {
    pub max_ends: usize,
    pub max_height: i64,
    pub brick_bound: i64,
    pub modulus: u32,
    pub max_atoms_per_end: usize,
    /// Force the class balance of a genuine cobordism: one end becomes the
    /// anti-sum of the others.
    pub balanced: bool,
    /// Whether a bottom end at height one is present.
    pub with_bottom: bool,
}

impl Default for SpecShape {
    fn default() -> SpecShape {
        SpecShape {
            max_ends: 6,
            max_height: 8,
            brick_bound: 4,
            modulus: 4,
            max_atoms_per_end: 2,
            balanced: false,
            with_bottom: true,
        }
    }
}

/// A random cobordism spec: distinct increasing heights, random end objects.
/// With `balanced` the lowest end is replaced by a realization of minus the
/// sum of the other end classes, as on an honest cobordism.
pub fn random_spec(rng: &mut Rng, shape: &SpecShape) -> CobordismSpec {
    let upper = 1 + rng.below((shape.max_ends - 1) as u64) as usize;
    let mut heights = Vec::new();
    while heights.len() < upper {
        let h = rng.range(2, shape.max_height);
        if !heights.contains(&h) {
            heights.push(h);
        }
    }
    heights.sort();
    let mut ends = Vec::new();
    let mut upper_objects: Vec<BaseObject> = Vec::new();
    for &h in &heights {
        let obj = random_object(rng, shape.max_atoms_per_end, shape.brick_bound, shape.modulus);
        upper_objects.push(obj.clone());
        ends.push(CobordismEnd { height: h, object: obj, grading: None });
    }
    // occasionally align two ends' phases so ties are reachable
    if ends.len() >= 2 && rng.chance(1, 3) {
        let i = rng.below(ends.len() as u64) as usize;
        let j = rng.below(ends.len() as u64) as usize;
        if i != j {
            let dh = ends[j].height - ends[i].height;
            // giving end j the end i's object shifted by kappa*dh creates a
            // phase tie at kappa = 4
            let obj = ends[i].object.shifted(4 * dh);
            ends[j].object = obj;
        }
    }
    if shape.with_bottom {
        let bottom = if shape.balanced {
            let mut total = crate::base::K0Sum::new();
            for e in &ends {
                for (k, c) in crate::base::object_k0(&e.object) {
                    *total.entry(k).or_insert(0) += c;
                }
            }
            // the bottom end carries minus the sum of the upper classes
            for c in total.values_mut() {
                *c = -*c;
            }
            total.retain(|_, c| *c != 0);
            crate::base::realize_k0(&total)
        } else {
            random_object(rng, shape.max_atoms_per_end, shape.brick_bound, shape.modulus)
        };
        ends.insert(0, CobordismEnd { height: 1, object: bottom, grading: None });
    } else if shape.balanced {
        // no bottom end: the upper classes must sum to zero themselves;
        // cancel the running sum against the top end
        let mut total = crate::base::K0Sum::new();
        for e in &ends[..ends.len() - 1] {
            for (k, c) in crate::base::object_k0(&e.object) {
                *total.entry(k).or_insert(0) += c;
            }
        }
        for c in total.values_mut() {
            *c = -*c;
        }
        total.retain(|_, c| *c != 0);
        let top = crate::base::realize_k0(&total);
        let h = ends.last().unwrap().height;
        if top.is_empty() {
            // a zero class cannot sit on a cobordism end; fall back to a
            // cancelling pair on the top end
            let brick = random_brick(rng, shape.brick_bound, shape.modulus);
            let pair = BaseObject::new(vec![
                SemistableAtom::new(brick.clone(), 1, 0),
                SemistableAtom::new(brick, 1, 1),
            ]);
            ends.last_mut().unwrap().object = pair;
            let _ = h;
        } else {
            ends.last_mut().unwrap().object = top;
        }
    }
    CobordismSpec::new(ends).expect("generated ends are sorted and nonempty")
}

/// Upgrades eligible adjacency tags of a flattened decomposition to explicit
/// data: where the hom oracle reports a nonzero space the tag may become
/// `Nonzero`, otherwise it is pinned to `Zero`. This models the geometry
/// choosing actual connecting morphisms.
pub fn decorate_tags(
    expr: &ConeExpr<LiftedGenerator>,
    rng: &mut Rng,
) -> ConeExpr<LiftedGenerator> {
    let mut flats = crate::cone::flatten(expr);
    let n = flats.entries.len();
    for i in 0..n.saturating_sub(1) {
        let (ref lg, ls) = flats.entries[i];
        let (ref rg, rs) = flats.entries[i + 1];
        let left = lg.shifted(ls + 1);
        let right = rg.shifted(rs + 1);
        let dim = lift::hom_dims_lifted(&left, &right)
            .get(&1)
            .copied()
            .unwrap_or(0);
        flats.tags[i] = if dim == 0 {
            MorphismTag::Zero
        } else if rng.chance(1, 2) {
            MorphismTag::Nonzero(format!("m{}", i))
        } else {
            MorphismTag::Zero
        };
    }
    crate::cone::unflatten(&flats)
}
