//! Exact arithmetic for central charges and phases.
//!
//! Charges are Gaussian rationals. A phase is a real number `phi` with the
//! charge lying on the ray `exp(i*pi*phi) * R_{>0}`; we store it as an integer
//! winding plus a primitive integer direction vector, so that comparison and
//! shift arithmetic never touch a float.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use std::cmp::Ordering;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhaseError {
    /// The zero charge has no phase.
    ZeroCharge,
    /// Direction vector (0,0) is not a direction.
    ZeroDirection,
    /// The charge does not lie on the ray of the given phase.
    Misaligned,
}

impl fmt::Display for PhaseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseError::ZeroCharge => write!(f, "zero charge has no phase"),
            PhaseError::ZeroDirection => write!(f, "(0,0) is not a direction"),
            PhaseError::Misaligned => write!(f, "charge is not aligned with the phase ray"),
        }
    }
}

impl std::error::Error for PhaseError {}

/// An exact complex number, the value of a central charge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Charge {
    pub re: BigRational,
    pub im: BigRational,
}

impl Charge {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Charge { re, im }
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        Charge {
            re: BigRational::from_integer(BigInt::from(re)),
            im: BigRational::from_integer(BigInt::from(im)),
        }
    }

    pub fn zero() -> Self {
        Charge::from_ints(0, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, other: &Charge) -> Charge {
        Charge {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    pub fn neg(&self) -> Charge {
        Charge {
            re: -&self.re,
            im: -&self.im,
        }
    }

    pub fn scaled(&self, k: i64) -> Charge {
        let k = BigRational::from_integer(BigInt::from(k));
        Charge {
            re: &self.re * &k,
            im: &self.im * &k,
        }
    }

    /// Squared modulus, exact.
    pub fn norm_sq(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// Serializes as `{"re": "p/q", "im": "p/q"}` with decimal-free strings.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"re\": \"{}\", \"im\": \"{}\"}}",
            fmt_rational(&self.re),
            fmt_rational(&self.im)
        )
    }
}

impl fmt::Display for Charge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i", fmt_rational(&self.re), fmt_rational(&self.im))
    }
}

/// Renders a rational without decimals: `3`, `-2`, `5/7`.
pub fn fmt_rational(r: &BigRational) -> String {
    if r.denom() == &BigInt::from(1) {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// The class `[X[k]] = (-1)^k [X]` acts on charges by sign.
pub fn charge_of_shift(c: &Charge, k: i64) -> Charge {
    if k.rem_euclid(2) == 0 {
        c.clone()
    } else {
        c.neg()
    }
}

/// An exact phase `phi = winding + phi0`, with `phi0` in `(0, 1]` determined
/// by a primitive direction vector.
///
/// The direction is kept in the canonical half plane: `b > 0`, or `b = 0` and
/// `a < 0`. With that convention `exp(i*pi*phi0)` is parallel to `a + ib` and
/// `phi0` ranges over `(0, 1]`, so the pair `(winding, dir)` determines the
/// real number `phi` uniquely and two angles are equal iff their fields are.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Angle {
    winding: i64,
    dir: (BigInt, BigInt),
}

fn primitive(a: BigInt, b: BigInt) -> Result<(BigInt, BigInt), PhaseError> {
    if a.is_zero() && b.is_zero() {
        return Err(PhaseError::ZeroDirection);
    }
    let g = a.gcd(&b);
    Ok((a / &g, b / &g))
}

fn is_canonical_half(a: &BigInt, b: &BigInt) -> bool {
    b.is_positive() || (b.is_zero() && a.is_negative())
}

impl Angle {
    /// Builds the angle `winding + angle(a+ib)/pi` with `angle(v)` in `(0, 2]`
    /// half-turns. The vector is reduced to a primitive one, and a direction
    /// in the lower half plane (or on the positive real axis) is folded into
    /// an extra winding.
    pub fn from_ray(winding: i64, a: BigInt, b: BigInt) -> Result<Angle, PhaseError> {
        let (a, b) = primitive(a, b)?;
        if is_canonical_half(&a, &b) {
            Ok(Angle { winding, dir: (a, b) })
        } else {
            Ok(Angle {
                winding: winding + 1,
                dir: (-a, -b),
            })
        }
    }

    pub fn winding(&self) -> i64 {
        self.winding
    }

    pub fn dir(&self) -> (&BigInt, &BigInt) {
        (&self.dir.0, &self.dir.1)
    }

    /// `P(phi + k) = P(phi)[k]`: shifting adds an integer to the phase.
    pub fn shifted(&self, k: i64) -> Angle {
        Angle {
            winding: self.winding + k,
            dir: self.dir.clone(),
        }
    }

    /// Exact quarter shift `phi + j/4`. Quarter turns of integer vectors stay
    /// integer, so phase-window bounds of width `1/2` are exactly comparable.
    pub fn quarter_shifted(&self, j: i64) -> Angle {
        let whole = j.div_euclid(4);
        let frac = j.rem_euclid(4);
        let mut a = self.dir.0.clone();
        let mut b = self.dir.1.clone();
        // rotate by +45 degrees `frac` times
        for _ in 0..frac {
            let (na, nb) = (&a - &b, &a + &b);
            a = na;
            b = nb;
        }
        // the canonical dir has angle in (0, pi], so after at most three
        // eighth-turns the rotated vector has angle in (0, 2pi] and from_ray
        // reads off exactly phi + whole + frac/4
        Angle::from_ray(self.winding + whole, a, b).expect("rotation is nonzero")
    }

    /// Serializes as `{"winding": w, "dir": [a, b]}`.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"winding\": {}, \"dir\": [{}, {}]}}",
            self.winding, self.dir.0, self.dir.1
        )
    }

    /// Floating approximation of the represented real number (diagnostics only).
    pub fn approx(&self) -> f64 {
        use num_traits::ToPrimitive;
        let a = self.dir.0.to_f64().unwrap_or(0.0);
        let b = self.dir.1.to_f64().unwrap_or(0.0);
        let mut t = b.atan2(a) / std::f64::consts::PI;
        if t <= 0.0 {
            t += 2.0;
        }
        self.winding as f64 + t
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + ang({}, {})", self.winding, self.dir.0, self.dir.1)
    }
}

/// The phase of a nonzero charge, with winding in `{0, 1}` so the represented
/// value lies in `(0, 2]` and `c` lies on `exp(i*pi*phi) * R_{>0}`.
pub fn phase_of_charge(c: &Charge) -> Result<Angle, PhaseError> {
    if c.is_zero() {
        return Err(PhaseError::ZeroCharge);
    }
    // (re, im) = (p1/q1, p2/q2) is a positive multiple of (p1*q2, p2*q1)
    let a = c.re.numer() * c.im.denom();
    let b = c.im.numer() * c.re.denom();
    Angle::from_ray(0, a, b)
}

/// Total order on phases as real numbers. Within equal winding the fractional
/// parts are compared by the sign of the cross product of the direction
/// vectors: positive cross means the first phase is smaller.
pub fn compare_phases(x: &Angle, y: &Angle) -> Ordering {
    // phi lies in (winding, winding + 1], so distinct windings decide
    match x.winding.cmp(&y.winding) {
        Ordering::Equal => {}
        ord => return ord,
    }
    let cross = &x.dir.0 * &y.dir.1 - &x.dir.1 * &y.dir.0;
    if cross.is_positive() {
        Ordering::Less
    } else if cross.is_negative() {
        Ordering::Greater
    } else {
        Ordering::Equal
    }
}

impl PartialOrd for Angle {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Angle {
    fn cmp(&self, other: &Self) -> Ordering {
        compare_phases(self, other)
    }
}

/// Checks `Z([E]) = m(E) exp(i*pi*phi)` for `m(E) > 0`: the charge ray must
/// equal the ray of the claimed phase, i.e. the two angles must differ by an
/// even winding. Returns the exact squared modulus as the positivity witness.
pub fn check_alignment(c: &Charge, claimed: &Angle) -> Result<BigRational, PhaseError> {
    let actual = phase_of_charge(c)?;
    if actual.dir == claimed.dir && (actual.winding - claimed.winding).rem_euclid(2) == 0 {
        Ok(c.norm_sq())
    } else {
        Err(PhaseError::Misaligned)
    }
}
