//! The integral group ring of the deck group ⟨σ, τ⟩ ≅ Z₂×Z₂ and the four norm
//! endomorphisms whose images decompose the top Jacobian. The hyperelliptic
//! involution acts as −1, so it never appears as a separate basis element.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

/// An element `a·1 + b·σ + c·τ + d·στ`; coefficient `k` belongs to the group
/// element whose bits are (σ, τ) = (k & 1, k >> 1).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DeckRingElem {
    coeffs: [BigInt; 4],
}

const NAMES: [&str; 4] = ["1", "σ", "τ", "στ"];

impl DeckRingElem {
    pub fn new(c1: i64, c_sigma: i64, c_tau: i64, c_sigma_tau: i64) -> Self {
        DeckRingElem {
            coeffs: [c1, c_sigma, c_tau, c_sigma_tau].map(BigInt::from),
        }
    }

    pub fn zero() -> Self {
        Self::new(0, 0, 0, 0)
    }

    pub fn one() -> Self {
        Self::new(1, 0, 0, 0)
    }

    pub fn sigma() -> Self {
        Self::new(0, 1, 0, 0)
    }

    pub fn tau() -> Self {
        Self::new(0, 0, 1, 0)
    }

    pub fn sigma_tau() -> Self {
        Self::new(0, 0, 0, 1)
    }

    pub fn constant(n: BigInt) -> Self {
        let mut e = Self::zero();
        e.coeffs[0] = n;
        e
    }

    pub fn coefficients(&self) -> &[BigInt; 4] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        DeckRingElem {
            coeffs: self.coeffs.clone().map(|c| c * k),
        }
    }
}

impl Add for &DeckRingElem {
    type Output = DeckRingElem;
    fn add(self, rhs: &DeckRingElem) -> DeckRingElem {
        DeckRingElem {
            coeffs: std::array::from_fn(|k| &self.coeffs[k] + &rhs.coeffs[k]),
        }
    }
}

impl Sub for &DeckRingElem {
    type Output = DeckRingElem;
    fn sub(self, rhs: &DeckRingElem) -> DeckRingElem {
        DeckRingElem {
            coeffs: std::array::from_fn(|k| &self.coeffs[k] - &rhs.coeffs[k]),
        }
    }
}

impl Neg for &DeckRingElem {
    type Output = DeckRingElem;
    fn neg(self) -> DeckRingElem {
        DeckRingElem {
            coeffs: self.coeffs.clone().map(|c| -c),
        }
    }
}

impl Mul for &DeckRingElem {
    type Output = DeckRingElem;
    /// Convolution over the group law, which on the bit encoding is XOR.
    fn mul(self, rhs: &DeckRingElem) -> DeckRingElem {
        let mut out = DeckRingElem::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.coeffs[i ^ j] += &self.coeffs[i] * &rhs.coeffs[j];
            }
        }
        out
    }
}

impl fmt::Display for DeckRingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "−" } else { "+" };
            if first {
                if c.is_negative() {
                    f.write_str("−")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let mag = c.abs();
            match (k, mag.is_one()) {
                (0, _) => write!(f, "{mag}")?,
                (_, true) => f.write_str(NAMES[k])?,
                (_, false) => write!(f, "{mag}{}", NAMES[k])?,
            }
            first = false;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl Serialize for DeckRingElem {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KleinDecomposition {
    /// Étale Klein cover C̃ → H.
    Etale,
    /// Klein cover branched over the triple.
    Branched,
}

/// A named group-ring element whose image is one piece of the decomposition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NormEndo {
    pub name: String,
    pub elem: DeckRingElem,
}

/// The four norm endomorphisms `1 ± σ ± τ ± στ` with the names of the
/// Jacobian images they cut out.
pub fn norm_endos(case: KleinDecomposition) -> [NormEndo; 4] {
    let f = [
        DeckRingElem::new(1, 1, 1, 1),
        DeckRingElem::new(1, 1, -1, -1),
        DeckRingElem::new(1, -1, 1, -1),
        DeckRingElem::new(1, -1, -1, 1),
    ];
    let names = match case {
        KleinDecomposition::Etale => ["JH*", "JH_x", "JH_y", "JH_z"],
        KleinDecomposition::Branched => ["JH*_{σ,στ}", "JH*_{σ,ιτ}", "JH*_{τ,ισ}", "JE"],
    };
    let mut it = f.into_iter().zip(names).map(|(elem, name)| NormEndo {
        name: name.to_string(),
        elem,
    });
    std::array::from_fn(|_| it.next().expect("four entries"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityCheck {
    pub identity: String,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn violations(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }
}

/// Check that `elems / total` is a complete system of orthogonal idempotents:
/// the sum equals `total`, distinct products vanish, and each square equals
/// `total` times the element.
pub fn verify_system(elems: &[NormEndo], total: &BigInt) -> IdentityReport {
    let mut checks = Vec::new();
    let sum = elems.iter().fold(DeckRingElem::zero(), |acc, e| &acc + &e.elem);
    let names: Vec<&str> = elems.iter().map(|e| e.name.as_str()).collect();
    checks.push(IdentityCheck {
        identity: format!("Σ({}) = {total}", names.join(", ")),
        holds: sum == DeckRingElem::constant(total.clone()),
    });
    for (i, a) in elems.iter().enumerate() {
        for b in &elems[i + 1..] {
            checks.push(IdentityCheck {
                identity: format!("[{}]·[{}] = 0", a.name, b.name),
                holds: (&a.elem * &b.elem).is_zero(),
            });
        }
    }
    for a in elems {
        checks.push(IdentityCheck {
            identity: format!("[{}]² = {total}·[{}]", a.name, a.name),
            holds: &a.elem * &a.elem == a.elem.scale(total),
        });
    }
    IdentityReport { checks }
}

/// The eleven identities behind the four-piece decomposition.
pub fn verify_decomposition(case: KleinDecomposition) -> IdentityReport {
    verify_system(&norm_endos(case), &BigInt::from(4))
}

/// The two-piece system `1 ± σ` of a single involution.
pub fn involution_pair() -> [NormEndo; 2] {
    [
        NormEndo {
            name: "1+σ".into(),
            elem: DeckRingElem::new(1, 1, 0, 0),
        },
        NormEndo {
            name: "1−σ".into(),
            elem: DeckRingElem::new(1, -1, 0, 0),
        },
    ]
}
