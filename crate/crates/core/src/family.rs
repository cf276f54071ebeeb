//! The explicit family y² = ∏(x⁴ + aᵢx² + 1) with its two commuting
//! involutions, and the degree-4 Klein quotient [x:y] ↦ [x⁴+y⁴ : 2x²y²] of P¹.
//! Everything is exact polynomial arithmetic over Q.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::projline::{scalar, Mobius, ProjPoint, Scalar};

/// Dense univariate polynomial, constant term first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatPoly {
    coeffs: Vec<Scalar>,
}

impl RatPoly {
    pub fn new(mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        RatPoly { coeffs }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&x| scalar(x)).collect())
    }

    pub fn zero() -> Self {
        RatPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Scalar) -> Self {
        Self::new(vec![c])
    }

    /// `x^k`.
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![Scalar::zero(); k + 1];
        c[k] = Scalar::one();
        RatPoly { coeffs: c }
    }

    pub fn coefficients(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Scalar> {
        self.coeffs.last()
    }

    pub fn coeff(&self, k: usize) -> Scalar {
        self.coeffs.get(k).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        self.coeffs.iter().rev().fold(Scalar::zero(), |acc, c| acc * x + c)
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        RatPoly::new((0..n).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        RatPoly::new((0..n).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn scale(&self, c: &Scalar) -> RatPoly {
        RatPoly::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        if self.is_zero() || other.is_zero() {
            return RatPoly::zero();
        }
        let mut out = vec![Scalar::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RatPoly::new(out)
    }

    pub fn pow(&self, e: u32) -> RatPoly {
        (0..e).fold(RatPoly::constant(Scalar::one()), |acc, _| acc.mul(self))
    }

    pub fn derivative(&self) -> RatPoly {
        RatPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * scalar(k as i64))
                .collect(),
        )
    }

    /// Quotient and remainder; panics on division by zero.
    pub fn div_rem(&self, d: &RatPoly) -> (RatPoly, RatPoly) {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.leading().expect("nonzero").clone();
        let mut r = self.coeffs.clone();
        let mut q = vec![Scalar::zero(); self.coeffs.len().saturating_sub(dd)];
        while r.len() > dd {
            let k = r.len() - 1 - dd;
            let c = r.last().expect("nonempty") / &lead;
            for (i, dc) in d.coeffs.iter().enumerate() {
                r[k + i] -= &c * dc;
            }
            q[k] = c;
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        (RatPoly::new(q), RatPoly::new(r))
    }

    pub fn monic(&self) -> RatPoly {
        match self.leading() {
            Some(l) => self.scale(&(Scalar::one() / l)),
            None => RatPoly::zero(),
        }
    }

    /// Monic gcd; the gcd of two zero polynomials is zero.
    pub fn gcd(&self, other: &RatPoly) -> RatPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.div_rem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn is_squarefree(&self) -> bool {
        !self.is_zero() && self.gcd(&self.derivative()).degree() == Some(0)
    }

    /// `F(−x)`.
    pub fn negate_variable(&self) -> RatPoly {
        RatPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| if k % 2 == 1 { -c } else { c.clone() })
                .collect(),
        )
    }

    /// `x^d · F(1/x)`, with `d` at least the degree.
    pub fn reciprocal(&self, d: usize) -> RatPoly {
        let mut c = vec![Scalar::zero(); d + 1];
        for (k, x) in self.coeffs.iter().enumerate() {
            c[d - k] = x.clone();
        }
        RatPoly::new(c)
    }

    /// `F(x²)`.
    pub fn compose_square(&self) -> RatPoly {
        let mut c = vec![Scalar::zero(); 2 * self.coeffs.len()];
        for (k, x) in self.coeffs.iter().enumerate() {
            c[2 * k] = x.clone();
        }
        RatPoly::new(c)
    }

    /// `G` with `F(x) = G(x²)`, when `F` is even.
    pub fn even_part(&self) -> Option<RatPoly> {
        if self.coeffs.iter().skip(1).step_by(2).any(|c| !c.is_zero()) {
            return None;
        }
        Some(RatPoly::new(self.coeffs.iter().step_by(2).cloned().collect()))
    }

    /// Yun's square-free factorisation: entry `i` is the monic product of the
    /// irreducible factors of multiplicity `i + 1`.
    pub fn squarefree_decomposition(&self) -> Vec<RatPoly> {
        let f = self.monic();
        if f.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        let df = f.derivative();
        let a = f.gcd(&df);
        let mut b = f.div_rem(&a).0;
        let mut c = df.div_rem(&a).0;
        let mut d = c.sub(&b.derivative());
        let mut out = Vec::new();
        loop {
            let a_i = b.gcd(&d);
            b = b.div_rem(&a_i).0;
            c = d.div_rem(&a_i).0;
            d = c.sub(&b.derivative());
            out.push(a_i);
            if b.degree() == Some(0) {
                break;
            }
        }
        while out.last().is_some_and(|p| p.degree() == Some(0)) {
            out.pop();
        }
        out
    }

    /// Multiplicities of the roots over the algebraic closure, descending.
    pub fn root_multiplicities(&self) -> Vec<usize> {
        let mut m = Vec::new();
        for (i, p) in self.squarefree_decomposition().iter().enumerate() {
            m.extend(std::iter::repeat(i + 1).take(p.degree().unwrap_or(0)));
        }
        m.sort_unstable_by(|a, b| b.cmp(a));
        m
    }
}

/// Resultant by the Euclidean remainder sequence.
pub fn resultant(a: &RatPoly, b: &RatPoly) -> Scalar {
    let (Some(da), Some(db)) = (a.degree(), b.degree()) else {
        return Scalar::zero();
    };
    if db == 0 {
        return num_traits::pow(b.coeffs[0].clone(), da);
    }
    let r = a.div_rem(b).1;
    let Some(dr) = r.degree() else {
        return Scalar::zero();
    };
    let sign = if da * db % 2 == 1 { -Scalar::one() } else { Scalar::one() };
    sign * num_traits::pow(b.leading().expect("nonzero").clone(), da - dr) * resultant(b, &r)
}

/// `res(F, F') / lc(F)`, up to the usual sign convention.
pub fn discriminant(f: &RatPoly) -> Scalar {
    let d = f.degree().unwrap_or(0);
    let sign = if d * d.saturating_sub(1) / 2 % 2 == 1 { -Scalar::one() } else { Scalar::one() };
    sign * resultant(f, &f.derivative()) / f.leading().cloned().unwrap_or_else(Scalar::one)
}

/// Lagrange interpolation through `(xᵢ, yᵢ)`.
pub fn interpolate(points: &[(Scalar, Scalar)]) -> RatPoly {
    let mut out = RatPoly::zero();
    for (i, (xi, yi)) in points.iter().enumerate() {
        let mut term = RatPoly::constant(yi.clone());
        for (j, (xj, _)) in points.iter().enumerate() {
            if i != j {
                let lin = RatPoly::new(vec![-xj.clone(), Scalar::one()]);
                term = term.mul(&lin).scale(&(Scalar::one() / (xi - xj)));
            }
        }
        out = out.add(&term);
    }
    out
}

impl fmt::Display for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if c.is_negative() { " - " } else { " + " })?;
            }
            let coef = if mag.is_one() && k > 0 { String::new() } else { mag.to_string() };
            match k {
                0 => write!(f, "{coef}")?,
                1 => write!(f, "{coef}x")?,
                _ => write!(f, "{coef}x^{k}")?,
            }
            first = false;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl Serialize for RatPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `∏ (x⁴ + aᵢx² + 1)`, rejected unless squarefree.
pub fn build_family_poly(a: &[Scalar]) -> Result<RatPoly> {
    if a.is_empty() {
        return Err(Error::InvalidConfig("the family needs at least one parameter".into()));
    }
    let f = a.iter().fold(RatPoly::constant(Scalar::one()), |acc, ai| {
        acc.mul(&RatPoly::new(vec![Scalar::one(), Scalar::zero(), ai.clone(), Scalar::zero(), Scalar::one()]))
    });
    if !f.is_squarefree() {
        let g = f.gcd(&f.derivative());
        return Err(Error::SingularCurve(format!("{f} shares the factor {g} with its derivative")));
    }
    Ok(f)
}

/// `F(−x) = F(x)` and `x^{4n}·F(1/x) = F(x)` as coefficient identities.
pub fn verify_involutions(f: &RatPoly) -> bool {
    match f.degree() {
        Some(d) if d > 0 && d % 4 == 0 => f.negate_variable() == *f && f.reciprocal(d) == *f,
        _ => false,
    }
}

/// Genus of the smooth model of `y² = F` for squarefree `F` of degree `d`.
pub fn hyperelliptic_genus(f: &RatPoly) -> Option<usize> {
    let d = f.degree()?;
    (d >= 3).then(|| (d - 1) / 2)
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyCertificate {
    pub a: Vec<String>,
    pub poly: RatPoly,
    pub degree: usize,
    pub genus: usize,
    pub squarefree: bool,
    pub even: bool,
    pub palindromic: bool,
    /// `G` with `F(x) = G(x²)`.
    pub quotient_poly: RatPoly,
    pub quotient_identity: bool,
}

impl FamilyCertificate {
    pub fn holds(&self) -> bool {
        self.squarefree && self.even && self.palindromic && self.quotient_identity && self.genus == self.degree / 2 - 1
    }
}

pub fn family_certificate(a: &[Scalar]) -> Result<FamilyCertificate> {
    let f = build_family_poly(a)?;
    let d = f.degree().expect("nonzero");
    let g = f.even_part().expect("family polynomials are even");
    Ok(FamilyCertificate {
        a: a.iter().map(|x| x.to_string()).collect(),
        degree: d,
        genus: hyperelliptic_genus(&f).expect("degree ≥ 4"),
        squarefree: f.is_squarefree(),
        even: f.negate_variable() == f,
        palindromic: f.reciprocal(d) == f,
        quotient_identity: g.compose_square() == f,
        quotient_poly: g,
        poly: f,
    })
}

/// The two coordinates of `q([x:y]) = [x⁴+y⁴ : 2x²y²]` as dehomogenised
/// quartics in `t = x/y`.
fn quotient_forms() -> [RatPoly; 2] {
    [RatPoly::from_ints(&[1, 0, 0, 0, 1]), RatPoly::from_ints(&[0, 0, 2])]
}

/// Substitute a Möbius map into a binary form of degree `d` given by its
/// dehomogenisation: returns the dehomogenisation of `F(ax+by, cx+dy)`.
fn substitute(form: &RatPoly, m: &Mobius, d: usize) -> RatPoly {
    let e = m.entries();
    let num = RatPoly::new(vec![e[0][1].clone(), e[0][0].clone()]);
    let den = RatPoly::new(vec![e[1][1].clone(), e[1][0].clone()]);
    let mut out = RatPoly::zero();
    for k in 0..=d {
        let c = form.coeff(k);
        if !c.is_zero() {
            out = out.add(&num.pow(k as u32).mul(&den.pow((d - k) as u32)).scale(&c));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuotientCheck {
    pub check: String,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiberReport {
    pub value: ProjPoint,
    /// Root multiplicities of the fiber on P¹, descending.
    pub multiplicities: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct P1QuotientReport {
    pub checks: Vec<QuotientCheck>,
    /// Discriminant of the fiber over `[λ:1]` as a polynomial in λ.
    pub discriminant: RatPoly,
    pub branch_fibers: Vec<FiberReport>,
    pub generic_fiber: FiberReport,
}

impl P1QuotientReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

/// Multiplicities of `q⁻¹([l₀:l₁])`, counting the point `[1:0]` of the source.
pub fn fiber(value: &ProjPoint) -> FiberReport {
    let (l0, l1) = value.homogeneous();
    let [a, b] = quotient_forms();
    // l₁·(x⁴+y⁴) − l₀·2x²y², dehomogenised in t = x/y.
    let f = a.scale(&l1).sub(&b.scale(&l0));
    let mut multiplicities = f.root_multiplicities();
    let at_infinity = 4 - f.degree().unwrap_or(0);
    if at_infinity > 0 {
        multiplicities.push(at_infinity);
        multiplicities.sort_unstable_by(|x, y| y.cmp(x));
    }
    FiberReport {
        value: value.clone(),
        multiplicities,
    }
}

pub fn verify_p1_quotient() -> Result<P1QuotientReport> {
    let [a, b] = quotient_forms();
    let d1 = Mobius::from_ints(-1, 0, 0, 1)?;
    let d2 = Mobius::from_ints(0, 1, 1, 0)?;
    let mut checks = Vec::new();
    for (name, m) in [("[−x:y]", &d1), ("[y:x]", &d2)] {
        let (sa, sb) = (substitute(&a, m, 4), substitute(&b, m, 4));
        checks.push(QuotientCheck {
            check: format!("q ∘ {name} = q"),
            holds: sa.mul(&b) == sb.mul(&a) && !sa.is_zero(),
        });
    }
    let id = Mobius::identity();
    let d12 = d1.compose(&d2);
    checks.push(QuotientCheck {
        check: "deck maps commute and generate Z₂×Z₂".into(),
        holds: d12.same_map(&d2.compose(&d1))
            && d1.compose(&d1).same_map(&id)
            && d2.compose(&d2).same_map(&id)
            && !d1.same_map(&id)
            && !d2.same_map(&id)
            && !d12.same_map(&id),
    });

    // The fiber discriminant over [λ:1] has degree ≤ 6 in λ.
    let samples: Vec<(Scalar, Scalar)> = (0..7i64)
        .map(|k| {
            let lam = scalar(k + 2);
            let f = a.sub(&b.scale(&lam));
            (lam, discriminant(&f))
        })
        .collect();
    let disc = interpolate(&samples);
    let expected = RatPoly::from_ints(&[-1, 0, 1]).pow(2).scale(&scalar(256));
    checks.push(QuotientCheck {
        check: format!("fiber discriminant over [λ:1] is {expected}"),
        holds: disc == expected,
    });

    let branch: Vec<ProjPoint> = vec![ProjPoint::Infinity, ProjPoint::int(-1), ProjPoint::int(1)];
    let branch_fibers: Vec<FiberReport> = branch.iter().map(fiber).collect();
    for fr in &branch_fibers {
        checks.push(QuotientCheck {
            check: format!("fiber over {} has multiplicities (2, 2)", fr.value),
            holds: fr.multiplicities == [2, 2],
        });
    }
    let generic_fiber = fiber(&ProjPoint::int(3));
    checks.push(QuotientCheck {
        check: "fiber over [3:1] has four simple points".into(),
        holds: generic_fiber.multiplicities == [1, 1, 1, 1],
    });
    checks.push(QuotientCheck {
        check: "q([1:1]) = [1:1]".into(),
        holds: ProjPoint::from_homogeneous(a.eval(&Scalar::one()), b.eval(&Scalar::one()))? == ProjPoint::int(1),
    });
    Ok(P1QuotientReport {
        checks,
        discriminant: disc,
        branch_fibers,
        generic_fiber,
    })
}
