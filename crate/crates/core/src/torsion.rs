//! 2-torsion of hyperelliptic Jacobians as even subsets of Weierstrass labels
//! modulo complement, with the Weil pairing, subgroup algebra, and the
//! pullback/norm maps along double covers.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gf2::{Basis, BitVec};

/// The ordered Weierstrass labels of one hyperelliptic curve.
#[derive(Debug, PartialEq, Eq)]
pub struct WUniverse {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl WUniverse {
    pub fn new<S: Into<String>, I: IntoIterator<Item = S>>(labels: I) -> Result<Arc<Self>> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 || labels.len() % 2 == 1 {
            return Err(Error::InvalidConfig(format!(
                "a Weierstrass universe needs an even number ≥ 2 of labels, got {}",
                labels.len()
            )));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate label {l:?}")));
            }
        }
        Ok(Arc::new(WUniverse { labels, index }))
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn genus(&self) -> usize {
        self.labels.len() / 2 - 1
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn zero(self: &Arc<Self>) -> TwoTorsionClass {
        TwoTorsionClass {
            universe: self.clone(),
            rep: BitVec::zeros(self.size()),
        }
    }

    /// Order of the full 2-torsion group, 2^{2g}.
    pub fn full_order(&self) -> BigUint {
        BigUint::one() << (2 * self.genus())
    }

    /// The full 2-torsion group, spanned by consecutive pairs.
    pub fn full_group(self: &Arc<Self>) -> TwoTorsionSubgroup {
        let gens: Vec<TwoTorsionClass> = (0..self.size() - 1)
            .map(|i| class_from_indices(self, [i, i + 1]).expect("pair is even"))
            .collect();
        TwoTorsionSubgroup::span(self, &gens).expect("same universe")
    }
}

fn same_universe(a: &Arc<WUniverse>, b: &Arc<WUniverse>) -> bool {
    Arc::ptr_eq(a, b) || a.labels == b.labels
}

/// A 2-torsion point, stored by its canonical even subset: of `S` and its
/// complement, the one avoiding the last label.
#[derive(Clone)]
pub struct TwoTorsionClass {
    universe: Arc<WUniverse>,
    rep: BitVec,
}

impl PartialEq for TwoTorsionClass {
    fn eq(&self, other: &Self) -> bool {
        self.rep == other.rep && same_universe(&self.universe, &other.universe)
    }
}

impl Eq for TwoTorsionClass {}

impl std::hash::Hash for TwoTorsionClass {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.rep.hash(state);
    }
}

impl PartialOrd for TwoTorsionClass {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TwoTorsionClass {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.indices().cmp(&other.indices())
    }
}

fn canonicalize(mut rep: BitVec) -> BitVec {
    let last = rep.len() - 1;
    if rep.get(last) {
        for i in 0..rep.len() {
            rep.flip(i);
        }
    }
    rep
}

/// Class of the even subset given by label indices (duplicates ignored).
pub fn class_from_indices<I: IntoIterator<Item = usize>>(
    u: &Arc<WUniverse>,
    indices: I,
) -> Result<TwoTorsionClass> {
    let set: BTreeSet<usize> = indices.into_iter().collect();
    if let Some(&bad) = set.iter().find(|&&i| i >= u.size()) {
        return Err(Error::InvalidConfig(format!("label index {bad} out of range")));
    }
    if set.len() % 2 == 1 {
        return Err(Error::OddParity(set.len()));
    }
    Ok(TwoTorsionClass {
        universe: u.clone(),
        rep: canonicalize(BitVec::from_indices(u.size(), set)),
    })
}

/// Class of the even subset `s` of labels.
pub fn class_from_subset<S: AsRef<str>>(u: &Arc<WUniverse>, s: &[S]) -> Result<TwoTorsionClass> {
    let idx = s
        .iter()
        .map(|l| {
            u.index_of(l.as_ref())
                .ok_or_else(|| Error::InvalidConfig(format!("unknown label {:?}", l.as_ref())))
        })
        .collect::<Result<Vec<_>>>()?;
    class_from_indices(u, idx)
}

impl TwoTorsionClass {
    pub fn universe(&self) -> &Arc<WUniverse> {
        &self.universe
    }

    pub fn rep(&self) -> &BitVec {
        &self.rep
    }

    pub fn indices(&self) -> Vec<usize> {
        self.rep.ones().collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.rep.ones().map(|i| self.universe.label(i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.rep.is_zero()
    }

    /// The other representative of the class.
    pub fn complement_rep(&self) -> BitVec {
        let mut c = self.rep.clone();
        for i in 0..c.len() {
            c.flip(i);
        }
        c
    }

    pub fn add(&self, other: &TwoTorsionClass) -> Result<TwoTorsionClass> {
        if !same_universe(&self.universe, &other.universe) {
            return Err(Error::UniverseMismatch);
        }
        Ok(TwoTorsionClass {
            universe: self.universe.clone(),
            rep: self.rep.xor(&other.rep),
        })
    }

    /// Weil pairing `(−1)^{|S∩T|}`.
    pub fn weil_pairing(&self, other: &TwoTorsionClass) -> Result<i8> {
        if !same_universe(&self.universe, &other.universe) {
            return Err(Error::UniverseMismatch);
        }
        Ok(if self.rep.dot(&other.rep) { -1 } else { 1 })
    }
}

impl fmt::Debug for TwoTorsionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.labels().join(","))
    }
}

impl fmt::Display for TwoTorsionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for TwoTorsionClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut labels = self.labels();
        labels.sort();
        labels.serialize(serializer)
    }
}

pub fn add(a: &TwoTorsionClass, b: &TwoTorsionClass) -> Result<TwoTorsionClass> {
    a.add(b)
}

pub fn weil_pairing(a: &TwoTorsionClass, b: &TwoTorsionClass) -> Result<i8> {
    a.weil_pairing(b)
}

/// A subgroup of the 2-torsion, kept as a reduced F₂ basis of canonical
/// representatives (canonicalization is linear, so this is a basis of the
/// quotient by the all-ones vector).
#[derive(Clone)]
pub struct TwoTorsionSubgroup {
    universe: Arc<WUniverse>,
    basis: Basis,
}

impl PartialEq for TwoTorsionSubgroup {
    fn eq(&self, other: &Self) -> bool {
        same_universe(&self.universe, &other.universe) && self.basis == other.basis
    }
}

impl Eq for TwoTorsionSubgroup {}

impl fmt::Debug for TwoTorsionSubgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.generators()).finish()
    }
}

impl TwoTorsionSubgroup {
    pub fn trivial(u: &Arc<WUniverse>) -> Self {
        TwoTorsionSubgroup {
            universe: u.clone(),
            basis: Basis::new(u.size()),
        }
    }

    pub fn span(u: &Arc<WUniverse>, generators: &[TwoTorsionClass]) -> Result<Self> {
        let mut g = Self::trivial(u);
        for c in generators {
            g.insert(c)?;
        }
        Ok(g)
    }

    /// Add a generator; returns whether the subgroup grew.
    pub fn insert(&mut self, c: &TwoTorsionClass) -> Result<bool> {
        if !same_universe(&self.universe, &c.universe) {
            return Err(Error::UniverseMismatch);
        }
        Ok(self.basis.insert(c.rep.clone()))
    }

    pub fn universe(&self) -> &Arc<WUniverse> {
        &self.universe
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn order(&self) -> BigUint {
        BigUint::one() << self.rank()
    }

    pub fn member(&self, c: &TwoTorsionClass) -> Result<bool> {
        if !same_universe(&self.universe, &c.universe) {
            return Err(Error::UniverseMismatch);
        }
        Ok(self.basis.contains(&c.rep))
    }

    pub fn generators(&self) -> Vec<TwoTorsionClass> {
        self.basis
            .vectors()
            .map(|v| TwoTorsionClass {
                universe: self.universe.clone(),
                rep: v.clone(),
            })
            .collect()
    }

    /// Every element; only for small ranks.
    pub fn elements(&self) -> Vec<TwoTorsionClass> {
        self.basis
            .elements()
            .into_iter()
            .map(|rep| TwoTorsionClass {
                universe: self.universe.clone(),
                rep,
            })
            .collect()
    }

    pub fn intersect(&self, other: &TwoTorsionSubgroup) -> Result<TwoTorsionSubgroup> {
        if !same_universe(&self.universe, &other.universe) {
            return Err(Error::UniverseMismatch);
        }
        Ok(TwoTorsionSubgroup {
            universe: self.universe.clone(),
            basis: self.basis.intersect(&other.basis),
        })
    }

    pub fn sum(&self, other: &TwoTorsionSubgroup) -> Result<TwoTorsionSubgroup> {
        if !same_universe(&self.universe, &other.universe) {
            return Err(Error::UniverseMismatch);
        }
        Ok(TwoTorsionSubgroup {
            universe: self.universe.clone(),
            basis: self.basis.sum(&other.basis),
        })
    }

    pub fn is_subgroup_of(&self, other: &TwoTorsionSubgroup) -> bool {
        same_universe(&self.universe, &other.universe) && self.basis.is_subspace_of(&other.basis)
    }

    /// Whether the Weil pairing is trivial on the subgroup.
    pub fn is_isotropic(&self) -> bool {
        let gens: Vec<&BitVec> = self.basis.vectors().collect();
        gens.iter()
            .enumerate()
            .all(|(i, a)| gens[i + 1..].iter().all(|b| !a.dot(b)))
    }
}

impl Serialize for TwoTorsionSubgroup {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.generators().serialize(serializer)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KleinType {
    NonIsotropicKlein,
    IsotropicKlein,
    /// The two classes do not generate a group of order 4.
    Degenerate,
}

pub fn classify_klein(a: &TwoTorsionClass, b: &TwoTorsionClass) -> KleinType {
    let Ok(sum) = a.add(b) else {
        return KleinType::Degenerate;
    };
    if a.is_zero() || b.is_zero() || sum.is_zero() {
        return KleinType::Degenerate;
    }
    if a.rep.dot(&b.rep) {
        KleinType::NonIsotropicKlein
    } else {
        KleinType::IsotropicKlein
    }
}

/// What a base Weierstrass label becomes in the cover.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Fate {
    /// Its preimage is this set of cover Weierstrass labels.
    Fiber(Vec<usize>),
    /// Its preimage is not Weierstrass and its pullback is a multiple of
    /// the hyperelliptic class, so it drops out.
    Trivial,
    /// The pullback of this label is not expressible in cover labels.
    Unknown,
}

/// How the Weierstrass labels of a double cover sit over those of its base.
#[derive(Clone, Debug)]
pub struct LabelMap {
    base: Arc<WUniverse>,
    cover: Arc<WUniverse>,
    fates: Vec<Fate>,
    image: Vec<Option<usize>>,
}

impl LabelMap {
    pub fn new(base: Arc<WUniverse>, cover: Arc<WUniverse>, fates: Vec<Fate>) -> Result<Self> {
        if fates.len() != base.size() {
            return Err(Error::InvalidCover(format!(
                "{} fates for {} base labels",
                fates.len(),
                base.size()
            )));
        }
        let mut image = vec![None; cover.size()];
        for (b, f) in fates.iter().enumerate() {
            if let Fate::Fiber(fiber) = f {
                if fiber.len() % 2 == 1 {
                    return Err(Error::InvalidCover(format!(
                        "fiber of {} has odd size",
                        base.label(b)
                    )));
                }
                for &c in fiber {
                    if c >= cover.size() || image[c].replace(b).is_some() {
                        return Err(Error::InvalidCover(format!(
                            "cover label index {c} repeated or out of range"
                        )));
                    }
                }
            }
        }
        Ok(LabelMap {
            base,
            cover,
            fates,
            image,
        })
    }

    /// Build from label names: `fates` pairs each base label with either the
    /// names of its fiber or `None` for a trivial label.
    pub fn from_names(
        base: Arc<WUniverse>,
        cover: Arc<WUniverse>,
        fates: &[(&str, Option<Vec<String>>)],
    ) -> Result<Self> {
        let mut out = vec![Fate::Unknown; base.size()];
        for (b, f) in fates {
            let bi = base
                .index_of(b)
                .ok_or_else(|| Error::InvalidCover(format!("unknown base label {b:?}")))?;
            out[bi] = match f {
                None => Fate::Trivial,
                Some(names) => Fate::Fiber(
                    names
                        .iter()
                        .map(|n| {
                            cover
                                .index_of(n)
                                .ok_or_else(|| Error::InvalidCover(format!("unknown cover label {n:?}")))
                        })
                        .collect::<Result<_>>()?,
                ),
            };
        }
        Self::new(base, cover, out)
    }

    pub fn base(&self) -> &Arc<WUniverse> {
        &self.base
    }

    pub fn cover(&self) -> &Arc<WUniverse> {
        &self.cover
    }

    pub fn fates(&self) -> &[Fate] {
        &self.fates
    }

    /// Base label under a cover label, if it lies over a Weierstrass label.
    pub fn image_of(&self, cover_index: usize) -> Option<usize> {
        self.image[cover_index]
    }

    fn pull_rep(&self, rep: &BitVec) -> Option<BitVec> {
        let mut out = BitVec::zeros(self.cover.size());
        for b in rep.ones() {
            match &self.fates[b] {
                Fate::Fiber(f) => {
                    for &c in f {
                        out.flip(c);
                    }
                }
                Fate::Trivial => {}
                Fate::Unknown => return None,
            }
        }
        Some(out)
    }

    pub fn pullback(&self, c: &TwoTorsionClass) -> Result<TwoTorsionClass> {
        if !same_universe(&self.base, &c.universe) {
            return Err(Error::UniverseMismatch);
        }
        let rep = self
            .pull_rep(&c.rep)
            .or_else(|| self.pull_rep(&c.complement_rep()))
            .ok_or_else(|| Error::NotLiftableRepresentation(format!("{c} on {:?}", self.base.labels())))?;
        Ok(TwoTorsionClass {
            universe: self.cover.clone(),
            rep: canonicalize(rep),
        })
    }

    fn push_rep(&self, rep: &BitVec) -> Option<BitVec> {
        let mut out = BitVec::zeros(self.base.size());
        for c in rep.ones() {
            out.flip(self.image[c]?);
        }
        Some(out)
    }

    pub fn norm(&self, c: &TwoTorsionClass) -> Result<TwoTorsionClass> {
        if !same_universe(&self.cover, &c.universe) {
            return Err(Error::UniverseMismatch);
        }
        let rep = self
            .push_rep(&c.rep)
            .or_else(|| self.push_rep(&c.complement_rep()))
            .ok_or_else(|| Error::NotLiftableRepresentation(format!("norm of {c}")))?;
        if rep.count_ones() % 2 == 1 {
            return Err(Error::NotLiftableRepresentation(format!("norm of {c} is odd")));
        }
        Ok(TwoTorsionClass {
            universe: self.base.clone(),
            rep: canonicalize(rep),
        })
    }

    /// Image of a subgroup under pullback.
    pub fn pullback_group(&self, g: &TwoTorsionSubgroup) -> Result<TwoTorsionSubgroup> {
        let gens = g
            .generators()
            .iter()
            .map(|c| self.pullback(c))
            .collect::<Result<Vec<_>>>()?;
        TwoTorsionSubgroup::span(&self.cover, &gens)
    }

    /// The class of the trivial labels (the defining class of an étale cover).
    pub fn trivial_class(&self) -> Result<TwoTorsionClass> {
        class_from_indices(
            &self.base,
            self.fates
                .iter()
                .enumerate()
                .filter(|(_, f)| matches!(f, Fate::Trivial))
                .map(|(i, _)| i),
        )
    }

    /// Compose `self: C → B` after `inner: D → C`, giving labels of `D` over `B`.
    pub fn then(&self, inner: &LabelMap) -> Result<LabelMap> {
        if !same_universe(&self.cover, &inner.base) {
            return Err(Error::UniverseMismatch);
        }
        let fates = self
            .fates
            .iter()
            .map(|f| match f {
                Fate::Fiber(fib) => {
                    let mut acc = BitVec::zeros(inner.cover.size());
                    for &c in fib {
                        match &inner.fates[c] {
                            Fate::Fiber(g) => g.iter().for_each(|&d| acc.flip(d)),
                            Fate::Trivial => {}
                            Fate::Unknown => return Fate::Unknown,
                        }
                    }
                    if acc.is_zero() {
                        Fate::Trivial
                    } else {
                        Fate::Fiber(acc.ones().collect())
                    }
                }
                other => other.clone(),
            })
            .collect();
        LabelMap::new(self.base.clone(), inner.cover.clone(), fates)
    }
}
