//! Shifted power forms and separable polynomial systems.
//!
//! Coefficients are exact elements of `Q(c)` for a single whitelisted constant
//! `c`, stored as rational coordinates on the power basis `1, c, c^2, ...`.
//! For the quadratic irrationals the basis is reduced to `{1, c}`; for `pi`
//! and `e` higher powers are kept as independent coordinates. This makes the
//! irrationality condition decidable: two elements of the same field have a
//! rational ratio exactly when their coordinate vectors are proportional.

use std::fmt;
use std::ops::{Add, Mul, Neg};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{parse_rational, rational_to_string};
use crate::precision::Dd;

pub type Rational = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constant {
    Sqrt2,
    Sqrt3,
    Pi,
    E,
    Golden,
}

impl Constant {
    pub const ALL: [Constant; 5] =
        [Constant::Sqrt2, Constant::Sqrt3, Constant::Pi, Constant::E, Constant::Golden];

    pub fn name(self) -> &'static str {
        match self {
            Constant::Sqrt2 => "sqrt2",
            Constant::Sqrt3 => "sqrt3",
            Constant::Pi => "pi",
            Constant::E => "e",
            Constant::Golden => "golden",
        }
    }

    pub fn value(self) -> Dd {
        match self {
            Constant::Sqrt2 => Dd::new(std::f64::consts::SQRT_2, -9.667293313452913e-17),
            Constant::Sqrt3 => Dd::new(1.7320508075688772, 1.0035084221806903e-16),
            Constant::Pi => Dd::new(std::f64::consts::PI, 1.2246467991473532e-16),
            Constant::E => Dd::new(std::f64::consts::E, 1.4456468917292502e-16),
            Constant::Golden => Dd::new(1.618033988749895, -5.432115203682506e-17),
        }
    }

    /// `c^2 = a + b c` for the quadratic irrationals.
    fn square_rule(self) -> Option<(i64, i64)> {
        match self {
            Constant::Sqrt2 => Some((2, 0)),
            Constant::Sqrt3 => Some((3, 0)),
            Constant::Golden => Some((1, 1)),
            Constant::Pi | Constant::E => None,
        }
    }
}

impl FromStr for Constant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Constant::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown constant '{s}' (allowed: sqrt2, sqrt3, pi, e, golden)")))
    }
}

/// An exact element of `Q(c)` together with its double-double value.
#[derive(Clone, Debug, PartialEq)]
pub struct RealCoefficient {
    constant: Option<Constant>,
    /// Coordinates on `1, c, c^2, ...`; trailing zeros are trimmed, index 0 always present.
    coords: Vec<Rational>,
    value: Dd,
}

impl RealCoefficient {
    pub fn rational(r: Rational) -> Self {
        Self::from_coords(None, vec![r])
    }

    pub fn integer(n: i64) -> Self {
        Self::rational(Rational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    /// `rational_part + multiplier * c`.
    pub fn tagged(rational_part: Rational, constant: Constant, multiplier: Rational) -> Self {
        Self::from_coords(Some(constant), vec![rational_part, multiplier])
    }

    fn from_coords(constant: Option<Constant>, mut coords: Vec<Rational>) -> Self {
        if coords.is_empty() {
            coords.push(Rational::zero());
        }
        while coords.len() > 1 && coords.last().is_some_and(|c| c.is_zero()) {
            coords.pop();
        }
        let constant = if coords.len() > 1 { constant } else { None };
        let value = match constant {
            None => Dd::from_rational(&coords[0]),
            Some(c) => {
                // Horner in c
                let cv = c.value();
                coords.iter().rev().fold(Dd::ZERO, |acc, a| acc * cv + Dd::from_rational(a))
            }
        };
        RealCoefficient { constant, coords, value }
    }

    pub fn rational_part(&self) -> &Rational {
        &self.coords[0]
    }

    pub fn constant(&self) -> Option<Constant> {
        self.constant
    }

    /// The `(constant, multiplier)` tag when the coefficient is `r + m c`.
    pub fn irrational_tag(&self) -> Option<(Constant, &Rational)> {
        match (self.constant, self.coords.len()) {
            (Some(c), 2) => Some((c, &self.coords[1])),
            _ => None,
        }
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }

    pub fn value(&self) -> Dd {
        self.value
    }

    pub fn is_irrational(&self) -> bool {
        self.coords.len() > 1
    }

    pub fn is_zero(&self) -> bool {
        self.coords.len() == 1 && self.coords[0].is_zero()
    }

    pub fn signum(&self) -> i32 {
        match self.value.total_cmp(&Dd::ZERO) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => -1,
            std::cmp::Ordering::Equal => 0,
        }
    }

    fn try_mul(&self, other: &Self) -> Result<Self> {
        let constant = merge_constants(self.constant, other.constant)?;
        let mut coords = vec![Rational::zero(); self.coords.len() + other.coords.len() - 1];
        for (i, a) in self.coords.iter().enumerate() {
            for (j, b) in other.coords.iter().enumerate() {
                coords[i + j] += a * b;
            }
        }
        if let Some((a, b)) = constant.and_then(Constant::square_rule) {
            reduce_quadratic(&mut coords, a, b);
        }
        Ok(Self::from_coords(constant, coords))
    }

    fn try_add(&self, other: &Self) -> Result<Self> {
        let constant = merge_constants(self.constant, other.constant)?;
        let n = self.coords.len().max(other.coords.len());
        let coords = (0..n)
            .map(|i| {
                let a = self.coords.get(i).cloned().unwrap_or_else(Rational::zero);
                let b = other.coords.get(i).cloned().unwrap_or_else(Rational::zero);
                a + b
            })
            .collect();
        Ok(Self::from_coords(constant, coords))
    }

    /// Whether `self / other` is irrational. `other` must be nonzero.
    pub fn ratio_is_irrational(&self, other: &Self) -> bool {
        if self.is_zero() {
            return false;
        }
        match (self.constant, other.constant) {
            (None, None) => false,
            (Some(_), None) | (None, Some(_)) => true,
            (Some(a), Some(b)) if a != b => true,
            _ => !proportional(&self.coords, &other.coords),
        }
    }
}

fn merge_constants(a: Option<Constant>, b: Option<Constant>) -> Result<Option<Constant>> {
    match (a, b) {
        (Some(x), Some(y)) if x != y => Err(Error::Domain(format!(
            "cannot combine coefficients over {} and {}",
            x.name(),
            y.name()
        ))),
        (Some(x), _) | (_, Some(x)) => Ok(Some(x)),
        (None, None) => Ok(None),
    }
}

// Rewrite c^n for n >= 2 using c^2 = a + b c, from the top down.
fn reduce_quadratic(coords: &mut Vec<Rational>, a: i64, b: i64) {
    let a = Rational::from_integer(BigInt::from(a));
    let b = Rational::from_integer(BigInt::from(b));
    for n in (2..coords.len()).rev() {
        let top = std::mem::replace(&mut coords[n], Rational::zero());
        if top.is_zero() {
            continue;
        }
        coords[n - 2] += &top * &a;
        coords[n - 1] += &top * &b;
    }
    coords.truncate(2.min(coords.len()));
}

fn proportional(x: &[Rational], y: &[Rational]) -> bool {
    if x.len() != y.len() {
        return false;
    }
    // x_i y_j == x_j y_i for all i, j
    let pivot = match y.iter().position(|v| !v.is_zero()) {
        Some(p) => p,
        None => return false,
    };
    let r = &x[pivot] / &y[pivot];
    x.iter().zip(y).all(|(a, b)| *a == &r * b)
}

impl Add for &RealCoefficient {
    type Output = RealCoefficient;
    fn add(self, rhs: &RealCoefficient) -> RealCoefficient {
        self.try_add(rhs).expect("coefficients over different constants")
    }
}

impl Mul for &RealCoefficient {
    type Output = RealCoefficient;
    fn mul(self, rhs: &RealCoefficient) -> RealCoefficient {
        self.try_mul(rhs).expect("coefficients over different constants")
    }
}

impl Neg for &RealCoefficient {
    type Output = RealCoefficient;
    fn neg(self) -> RealCoefficient {
        RealCoefficient::from_coords(self.constant, self.coords.iter().map(|c| -c).collect())
    }
}

impl fmt::Display for RealCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", rational_to_string(&self.coords[0]))?;
        if let Some(c) = self.constant {
            for (i, a) in self.coords.iter().enumerate().skip(1) {
                if a.is_zero() {
                    continue;
                }
                let sign = if a.is_negative() { "-" } else { "+" };
                let pow = if i == 1 { String::new() } else { format!("^{i}") };
                write!(f, " {sign} {}*{}{pow}", rational_to_string(&a.abs()), c.name())?;
            }
        }
        Ok(())
    }
}

/// `F(x) = sum_i (x_i - mu_i)^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedForm {
    pub k: u32,
    pub shifts: Vec<RealCoefficient>,
}

impl ShiftedForm {
    pub fn new(k: u32, shifts: Vec<RealCoefficient>) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("degree must be >= 2, got {k}")));
        }
        if shifts.is_empty() {
            return Err(Error::Domain("a shifted form needs at least one variable".into()));
        }
        Ok(ShiftedForm { k, shifts })
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        ShiftedForm { k: self.k, shifts: perm.iter().map(|&i| self.shifts[i].clone()).collect() }
    }
}

/// `H(x) = sum_i h_i(x_i)` with every `h_i` of exact degree `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialSystem {
    pub k: u32,
    /// `polys[i][j]` is the coefficient of `x^j` in `h_i`.
    pub polys: Vec<Vec<RealCoefficient>>,
}

impl PolynomialSystem {
    pub fn new(k: u32, polys: Vec<Vec<RealCoefficient>>) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("degree must be >= 2, got {k}")));
        }
        if polys.is_empty() {
            return Err(Error::Domain("a polynomial system needs at least one member".into()));
        }
        for (i, p) in polys.iter().enumerate() {
            if p.len() != k as usize + 1 {
                return Err(Error::Domain(format!(
                    "member {i} has {} coefficients, expected {}",
                    p.len(),
                    k + 1
                )));
            }
            if p[k as usize].is_zero() {
                return Err(Error::Domain(format!("member {i} has zero leading coefficient")));
            }
        }
        Ok(PolynomialSystem { k, polys })
    }

    pub fn leading_coefficients(&self) -> impl Iterator<Item = &RealCoefficient> {
        self.polys.iter().map(move |p| &p[self.k as usize])
    }

    /// Same system with every member negated.
    pub fn negated(&self) -> Self {
        PolynomialSystem {
            k: self.k,
            polys: self.polys.iter().map(|p| p.iter().map(|c| -c).collect()).collect(),
        }
    }

    /// Concatenation of two systems of equal degree.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.k != other.k {
            return Err(Error::Domain("cannot concatenate systems of different degree".into()));
        }
        let mut polys = self.polys.clone();
        polys.extend(other.polys.iter().cloned());
        Ok(PolynomialSystem { k: self.k, polys })
    }
}

/// Anything of the shape `sum_i f_i(x_i)` that can be evaluated term by term.
pub trait SeparableForm: Sync {
    fn arity(&self) -> usize;
    fn degree(&self) -> u32;
    /// `f_i(x)` in double-double precision.
    fn term(&self, i: usize, x: i64) -> Dd;

    fn evaluate(&self, x: &[i64]) -> Result<Dd> {
        if x.len() != self.arity() {
            return Err(Error::Dimension { expected: self.arity(), got: x.len() });
        }
        Ok(x.iter().enumerate().fold(Dd::ZERO, |acc, (i, &xi)| acc + self.term(i, xi)))
    }
}

impl SeparableForm for ShiftedForm {
    fn arity(&self) -> usize {
        self.shifts.len()
    }
    fn degree(&self) -> u32 {
        self.k
    }
    fn term(&self, i: usize, x: i64) -> Dd {
        (Dd::from_i64(x) - self.shifts[i].value()).powi(self.k)
    }
}

impl SeparableForm for PolynomialSystem {
    fn arity(&self) -> usize {
        self.polys.len()
    }
    fn degree(&self) -> u32 {
        self.k
    }
    fn term(&self, i: usize, x: i64) -> Dd {
        horner_dd(&self.polys[i], x)
    }
}

/// `h(x)` for coefficients in ascending order.
pub fn horner_dd(coeffs: &[RealCoefficient], x: i64) -> Dd {
    let xv = Dd::from_i64(x);
    coeffs.iter().rev().fold(Dd::ZERO, |acc, c| acc * xv + c.value())
}

/// Coefficients of `x^k`.
pub fn monomial(k: u32) -> Vec<RealCoefficient> {
    let mut c = vec![RealCoefficient::zero(); k as usize + 1];
    c[k as usize] = RealCoefficient::integer(1);
    c
}

/// Either representation, as loaded from an instance file.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Form(ShiftedForm),
    System(PolynomialSystem),
}

impl Target {
    pub fn as_system(&self) -> PolynomialSystem {
        match self {
            Target::Form(f) => to_polynomial_system(f),
            Target::System(s) => s.clone(),
        }
    }
}

impl SeparableForm for Target {
    fn arity(&self) -> usize {
        match self {
            Target::Form(f) => f.arity(),
            Target::System(s) => s.arity(),
        }
    }
    fn degree(&self) -> u32 {
        match self {
            Target::Form(f) => f.k,
            Target::System(s) => s.k,
        }
    }
    fn term(&self, i: usize, x: i64) -> Dd {
        match self {
            Target::Form(f) => f.term(i, x),
            Target::System(s) => s.term(i, x),
        }
    }
}

/// `H` is indefinite when `k` is odd or the leading coefficients take both signs.
pub fn is_indefinite(sys: &PolynomialSystem) -> bool {
    if sys.k % 2 == 1 {
        return true;
    }
    let mut signs = sys.leading_coefficients().map(RealCoefficient::signum);
    let first = signs.next().unwrap_or(0);
    signs.any(|s| s != first)
}

/// Some ratio of non-constant coefficients `beta_{i1 j1} / beta_{i2 j2}` is irrational.
pub fn satisfies_irrationality_condition(sys: &PolynomialSystem) -> bool {
    let coeffs: Vec<&RealCoefficient> = sys
        .polys
        .iter()
        .flat_map(|p| p.iter().skip(1))
        .filter(|c| !c.is_zero())
        .collect();
    coeffs
        .iter()
        .any(|num| coeffs.iter().any(|den| num.ratio_is_irrational(den)))
}

fn binomial(n: u32, r: u32) -> BigInt {
    (0..r).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// Binomial expansion of each `(x - mu_i)^k`.
pub fn to_polynomial_system(form: &ShiftedForm) -> PolynomialSystem {
    let k = form.k;
    let polys = form
        .shifts
        .iter()
        .map(|mu| {
            let neg_mu = -mu;
            // powers of -mu
            let mut powers = vec![RealCoefficient::integer(1)];
            for n in 1..=k as usize {
                let next = &powers[n - 1] * &neg_mu;
                powers.push(next);
            }
            (0..=k)
                .map(|j| {
                    let c = RealCoefficient::rational(Rational::from_integer(binomial(k, j)));
                    &c * &powers[(k - j) as usize]
                })
                .collect()
        })
        .collect();
    PolynomialSystem { k, polys }
}

/// A point beyond which consecutive values of `h` differ by at least `eta`.
///
/// For `x >= threshold`, `h(x+1) - h(x) >= eta` and `h` is increasing, so two
/// integers above it with `|h(x) - h(y)| < eta` must coincide. Needs a positive
/// leading coefficient and degree at least 2.
pub fn separation_threshold(coeffs: &[RealCoefficient], eta: f64) -> Result<f64> {
    let k = coeffs.len().saturating_sub(1);
    if k < 2 {
        return Err(Error::Domain("separation needs degree >= 2".into()));
    }
    let lead = coeffs[k].value().to_f64();
    if lead <= 0.0 {
        return Err(Error::Domain("separation needs a positive leading coefficient".into()));
    }
    // h(x+1) - h(x) >= x^(k-2) (lead k x - 2^(k-2) sum_{j<k} j |b_j|) for x >= 1
    let lower: f64 = coeffs[..k]
        .iter()
        .enumerate()
        .map(|(j, c)| j as f64 * c.value().to_f64().abs())
        .sum::<f64>()
        * 2f64.powi(k as i32 - 2);
    Ok(((lower + eta) / (lead * k as f64)).max(1.0))
}

// --- instance files -------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TagSpec {
    pub name: String,
    pub mul: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CoefficientSpec {
    pub rat: String,
    #[serde(default)]
    pub tag: Option<TagSpec>,
}

impl CoefficientSpec {
    pub fn to_coefficient(&self) -> Result<RealCoefficient> {
        let r = parse_rational(&self.rat)?;
        match &self.tag {
            None => Ok(RealCoefficient::rational(r)),
            Some(t) => Ok(RealCoefficient::tagged(r, t.name.parse()?, parse_rational(&t.mul)?)),
        }
    }

    pub fn from_coefficient(c: &RealCoefficient) -> Result<Self> {
        let rat = rational_to_string(c.rational_part());
        if !c.is_irrational() {
            return Ok(CoefficientSpec { rat, tag: None });
        }
        let (constant, mul) = c.irrational_tag().ok_or_else(|| {
            Error::Domain(format!("coefficient {c} has higher powers of its constant; not expressible in the file format"))
        })?;
        Ok(CoefficientSpec {
            rat,
            tag: Some(TagSpec { name: constant.name().into(), mul: rational_to_string(mul) }),
        })
    }
}

/// On-disk instance: a shifted form (`shifts`) or a system (`polys`), plus
/// optional counting parameters.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct InstanceFile {
    pub k: u32,
    #[serde(default)]
    pub shifts: Vec<CoefficientSpec>,
    #[serde(default)]
    pub polys: Vec<Vec<CoefficientSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Per-variable half-open boxes `(lo, hi]`.
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<(i64, i64)>>,
}

impl InstanceFile {
    pub fn target(&self) -> Result<Target> {
        match (self.shifts.is_empty(), self.polys.is_empty()) {
            (false, true) => {
                let shifts = self.shifts.iter().map(CoefficientSpec::to_coefficient).collect::<Result<_>>()?;
                Ok(Target::Form(ShiftedForm::new(self.k, shifts)?))
            }
            (true, false) => {
                let polys = self
                    .polys
                    .iter()
                    .map(|p| p.iter().map(CoefficientSpec::to_coefficient).collect::<Result<Vec<_>>>())
                    .collect::<Result<_>>()?;
                Ok(Target::System(PolynomialSystem::new(self.k, polys)?))
            }
            _ => Err(Error::Parse("instance must give exactly one of 'shifts' or 'polys'".into())),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
