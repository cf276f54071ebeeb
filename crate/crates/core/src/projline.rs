//! Exact geometry of the projective line over Q.
//!
//! Points are either finite rationals or the point at infinity. Möbius maps
//! are 2×2 rational matrices taken up to scalar. A [`MarkedConfig`] is a list
//! of distinct points carrying role tags; two configurations are equivalent
//! when a Möbius map together with a role-preserving relabeling carries one
//! onto the other.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational scalar, always in lowest terms with positive denominator.
pub type Scalar = BigRational;

pub fn scalar(n: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Scalar {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// A point of P¹(Q).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProjPoint {
    Finite(Scalar),
    Infinity,
}

impl ProjPoint {
    pub fn int(n: i64) -> Self {
        ProjPoint::Finite(scalar(n))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        ProjPoint::Finite(ratio(n, d))
    }

    /// Homogeneous coordinates `(x0, x1)` with the point equal to `x0 / x1`.
    pub fn homogeneous(&self) -> (Scalar, Scalar) {
        match self {
            ProjPoint::Finite(z) => (z.clone(), Scalar::one()),
            ProjPoint::Infinity => (Scalar::one(), Scalar::zero()),
        }
    }

    pub fn from_homogeneous(x0: Scalar, x1: Scalar) -> Result<Self> {
        if x1.is_zero() {
            if x0.is_zero() {
                return Err(Error::DegenerateConfiguration(
                    "homogeneous coordinates (0, 0)".into(),
                ));
            }
            Ok(ProjPoint::Infinity)
        } else {
            Ok(ProjPoint::Finite(x0 / x1))
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, ProjPoint::Infinity)
    }
}

impl fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjPoint::Finite(z) => write!(f, "{z}"),
            ProjPoint::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for ProjPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(ProjPoint::Infinity);
        }
        let parse_int = |t: &str| {
            BigInt::from_str(t.trim()).map_err(|_| Error::Parse(format!("bad scalar {s:?}")))
        };
        match s.split_once('/') {
            Some((n, d)) => {
                let d = parse_int(d)?;
                if d.is_zero() {
                    return Err(Error::Parse(format!("zero denominator in {s:?}")));
                }
                Ok(ProjPoint::Finite(BigRational::new(parse_int(n)?, d)))
            }
            None => Ok(ProjPoint::Finite(BigRational::from_integer(parse_int(s)?))),
        }
    }
}

impl Serialize for ProjPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ProjPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn bracket(p: &(Scalar, Scalar), q: &(Scalar, Scalar)) -> Scalar {
    &p.0 * &q.1 - &p.1 * &q.0
}

/// A Möbius transformation `z ↦ (a z + b) / (c z + d)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mobius {
    m: [[Scalar; 2]; 2],
}

impl Mobius {
    pub fn new(a: Scalar, b: Scalar, c: Scalar, d: Scalar) -> Result<Self> {
        let map = Mobius { m: [[a, b], [c, d]] };
        if map.det().is_zero() {
            return Err(Error::DegenerateConfiguration("singular Möbius matrix".into()));
        }
        Ok(map)
    }

    pub fn from_ints(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        Self::new(scalar(a), scalar(b), scalar(c), scalar(d))
    }

    pub fn identity() -> Self {
        Mobius {
            m: [[Scalar::one(), Scalar::zero()], [Scalar::zero(), Scalar::one()]],
        }
    }

    pub fn entries(&self) -> &[[Scalar; 2]; 2] {
        &self.m
    }

    pub fn det(&self) -> Scalar {
        &self.m[0][0] * &self.m[1][1] - &self.m[0][1] * &self.m[1][0]
    }

    pub fn apply(&self, p: &ProjPoint) -> ProjPoint {
        let (x0, x1) = p.homogeneous();
        let y0 = &self.m[0][0] * &x0 + &self.m[0][1] * &x1;
        let y1 = &self.m[1][0] * &x0 + &self.m[1][1] * &x1;
        ProjPoint::from_homogeneous(y0, y1).expect("nonsingular map sends points to points")
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Mobius) -> Mobius {
        let a = &self.m;
        let b = &other.m;
        let e = |i: usize, j: usize| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j];
        Mobius {
            m: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
        }
    }

    pub fn inverse(&self) -> Mobius {
        let [[a, b], [c, d]] = &self.m;
        Mobius {
            m: [[d.clone(), -b.clone()], [-c.clone(), a.clone()]],
        }
    }

    /// Equality as projective maps, i.e. proportional matrices.
    pub fn same_map(&self, other: &Mobius) -> bool {
        let a: Vec<&Scalar> = self.m.iter().flatten().collect();
        let b: Vec<&Scalar> = other.m.iter().flatten().collect();
        (0..4).all(|i| (0..4).all(|j| a[i] * b[j] == a[j] * b[i]))
    }

    /// The map sending `p, q, r` to `0, 1, ∞`.
    fn to_standard(p: &ProjPoint, q: &ProjPoint, r: &ProjPoint) -> Result<Mobius> {
        if p == q || q == r || p == r {
            return Err(Error::DegenerateConfiguration(format!(
                "triple ({p}, {q}, {r}) is not pairwise distinct"
            )));
        }
        let (hp, hq, hr) = (p.homogeneous(), q.homogeneous(), r.homogeneous());
        let k0 = bracket(&hq, &hr);
        let k1 = bracket(&hq, &hp);
        Mobius::new(
            &k0 * &hp.1,
            -(&k0 * &hp.0),
            &k1 * &hr.1,
            -(&k1 * &hr.0),
        )
    }

    /// Normalize the matrix so that the first nonzero entry is 1.
    pub fn normalized(&self) -> Mobius {
        let pivot = self
            .m
            .iter()
            .flatten()
            .find(|x| !x.is_zero())
            .cloned()
            .expect("nonsingular");
        let m = self.m.clone().map(|row| row.map(|x| x / &pivot));
        Mobius { m }
    }
}

impl fmt::Display for Mobius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.normalized();
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            n.m[0][0], n.m[0][1], n.m[1][0], n.m[1][1]
        )
    }
}

impl Serialize for Mobius {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.normalized();
        let rows: Vec<Vec<String>> = n
            .m
            .iter()
            .map(|r| r.iter().map(|x| x.to_string()).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Mobius {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rows: Vec<Vec<ProjPoint>> = Vec::deserialize(deserializer)?;
        let flat: Vec<Scalar> = rows
            .into_iter()
            .flatten()
            .map(|p| match p {
                ProjPoint::Finite(x) => Ok(x),
                ProjPoint::Infinity => Err(D::Error::custom("matrix entry cannot be inf")),
            })
            .collect::<std::result::Result<_, _>>()?;
        if flat.len() != 4 {
            return Err(D::Error::custom("Möbius matrix needs 4 entries"));
        }
        let mut it = flat.into_iter();
        let mut next = || it.next().unwrap();
        Mobius::new(next(), next(), next(), next()).map_err(D::Error::custom)
    }
}

/// Cross-ratio normalized so that `(0, 1, ∞, t) ↦ t`.
pub fn cross_ratio(p: &ProjPoint, q: &ProjPoint, r: &ProjPoint, s: &ProjPoint) -> Result<ProjPoint> {
    Ok(Mobius::to_standard(p, q, r)?.apply(s))
}

/// The unique Möbius map sending `src[i]` to `dst[i]`.
pub fn mobius_from_triples(src: [&ProjPoint; 3], dst: [&ProjPoint; 3]) -> Result<Mobius> {
    let a = Mobius::to_standard(src[0], src[1], src[2])?;
    let b = Mobius::to_standard(dst[0], dst[1], dst[2])?;
    Ok(b.inverse().compose(&a))
}

/// Role tags carried by points of a marked configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    /// Branch point of the base hyperelliptic curve, numbered from 1.
    W(u32),
    X,
    Y,
    Z,
    /// The distinguished point of the mixed cases.
    Dist,
}

impl Role {
    pub fn is_triple(self) -> bool {
        matches!(self, Role::X | Role::Y | Role::Z)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::W(i) => write!(f, "W{i}"),
            Role::X => f.write_str("X"),
            Role::Y => f.write_str("Y"),
            Role::Z => f.write_str("Z"),
            Role::Dist => f.write_str("DIST"),
        }
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X" => Ok(Role::X),
            "Y" => Ok(Role::Y),
            "Z" => Ok(Role::Z),
            "DIST" => Ok(Role::Dist),
            _ => s
                .strip_prefix('W')
                .and_then(|n| n.parse::<u32>().ok())
                .filter(|&n| n >= 1)
                .map(Role::W)
                .ok_or_else(|| Error::Parse(format!("unknown role {s:?}"))),
        }
    }
}

impl Serialize for Role {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Role {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// What a role-preserving relabeling has to respect at one point: whether it is
/// a Weierstrass image, whether it belongs to the (unordered) triple, and
/// whether it is the distinguished point. W indices themselves may permute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Signature {
    pub weierstrass: bool,
    pub triple: bool,
    pub dist: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedConfig {
    pub points: Vec<ProjPoint>,
    #[serde(default)]
    pub roles: BTreeMap<usize, BTreeSet<Role>>,
}

/// A Möbius map and the index relabeling it induces from one configuration
/// onto another.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Equivalence {
    pub mobius: Mobius,
    /// `relabel[i]` is the index in the target of the image of point `i`.
    pub relabel: Vec<usize>,
}

impl MarkedConfig {
    pub fn new(points: Vec<ProjPoint>) -> Self {
        MarkedConfig {
            points,
            roles: BTreeMap::new(),
        }
    }

    pub fn with_role(mut self, index: usize, role: Role) -> Self {
        self.roles.entry(index).or_default().insert(role);
        self
    }

    pub fn add_role(&mut self, index: usize, role: Role) {
        self.roles.entry(index).or_default().insert(role);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn roles_of(&self, index: usize) -> impl Iterator<Item = Role> + '_ {
        self.roles.get(&index).into_iter().flatten().copied()
    }

    pub fn has_role(&self, index: usize, role: Role) -> bool {
        self.roles.get(&index).is_some_and(|r| r.contains(&role))
    }

    /// Index of the point carrying `role`, if any.
    pub fn index_of(&self, role: Role) -> Option<usize> {
        self.roles
            .iter()
            .find(|(_, rs)| rs.contains(&role))
            .map(|(&i, _)| i)
    }

    /// W-tagged points as `(w_index, point_index)`, sorted by W index.
    pub fn w_points(&self) -> Vec<(u32, usize)> {
        let mut out: Vec<(u32, usize)> = self
            .roles
            .iter()
            .flat_map(|(&i, rs)| {
                rs.iter().filter_map(move |r| match r {
                    Role::W(k) => Some((*k, i)),
                    _ => None,
                })
            })
            .collect();
        out.sort();
        out
    }

    pub fn is_weierstrass(&self, index: usize) -> bool {
        self.roles_of(index).any(|r| matches!(r, Role::W(_)))
    }

    /// Indices of the X, Y, Z points when all three are present.
    pub fn triple(&self) -> Option<[usize; 3]> {
        Some([
            self.index_of(Role::X)?,
            self.index_of(Role::Y)?,
            self.index_of(Role::Z)?,
        ])
    }

    pub fn signature(&self, index: usize) -> Signature {
        let mut sig = Signature {
            weierstrass: false,
            triple: false,
            dist: false,
        };
        for r in self.roles_of(index) {
            match r {
                Role::W(_) => sig.weierstrass = true,
                Role::Dist => sig.dist = true,
                _ => sig.triple = true,
            }
        }
        sig
    }

    /// Check the structural invariants: distinct points, roles in range,
    /// X/Y/Z/DIST used at most once, W indices contiguous from 1.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashMap::new();
        for (i, p) in self.points.iter().enumerate() {
            if let Some(j) = seen.insert(p, i) {
                return Err(Error::DegenerateConfiguration(format!(
                    "points {j} and {i} coincide at {p}"
                )));
            }
        }
        let mut counts: BTreeMap<Role, usize> = BTreeMap::new();
        for (&i, rs) in &self.roles {
            if i >= self.points.len() {
                return Err(Error::InvalidConfig(format!("role index {i} out of range")));
            }
            if rs.iter().filter(|r| matches!(r, Role::W(_))).count() > 1 {
                return Err(Error::InvalidConfig(format!("point {i} has two W indices")));
            }
            for &r in rs {
                *counts.entry(r).or_default() += 1;
            }
        }
        for (r, c) in &counts {
            if *c > 1 {
                return Err(Error::InvalidConfig(format!("role {r} used {c} times")));
            }
        }
        let w: Vec<u32> = self.w_points().iter().map(|&(k, _)| k).collect();
        if w.iter().enumerate().any(|(pos, &k)| k as usize != pos + 1) {
            return Err(Error::InvalidConfig("W indices are not contiguous from 1".into()));
        }
        Ok(())
    }

    /// Apply a Möbius map to every point, keeping roles.
    pub fn transformed(&self, m: &Mobius) -> MarkedConfig {
        MarkedConfig {
            points: self.points.iter().map(|p| m.apply(p)).collect(),
            roles: self.roles.clone(),
        }
    }

    fn anchors(&self) -> Result<[usize; 3]> {
        if self.points.len() < 3 {
            return Err(Error::DegenerateConfiguration(format!(
                "need at least 3 points, got {}",
                self.points.len()
            )));
        }
        if let Some(t) = self.triple() {
            return Ok(t);
        }
        let w = self.w_points();
        if w.len() >= 3 {
            return Ok([w[0].1, w[1].1, w[2].1]);
        }
        Ok([0, 1, 2])
    }

    /// Representative with the anchor points (the triple X, Y, Z if present,
    /// else the three lowest-indexed W points) moved to `0, 1, ∞`.
    pub fn canonical_form(&self) -> Result<MarkedConfig> {
        self.validate()?;
        let [a, b, c] = self.anchors()?;
        let m = mobius_from_triples(
            [&self.points[a], &self.points[b], &self.points[c]],
            [&ProjPoint::int(0), &ProjPoint::int(1), &ProjPoint::Infinity],
        )?;
        Ok(self.transformed(&m))
    }

    /// Order-independent description of the configuration: its points paired
    /// with their signatures, sorted.
    pub fn signature_key(&self) -> Vec<(ProjPoint, Signature)> {
        let mut key: Vec<_> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), self.signature(i)))
            .collect();
        key.sort();
        key
    }
}

/// Decide projective equivalence respecting roles; returns a witness when the
/// configurations are equivalent.
pub fn equivalent(a: &MarkedConfig, b: &MarkedConfig) -> Option<Equivalence> {
    if a.validate().is_err() || b.validate().is_err() || a.len() != b.len() {
        return None;
    }
    let n = a.len();
    let sig_a: Vec<Signature> = (0..n).map(|i| a.signature(i)).collect();
    let sig_b: Vec<Signature> = (0..n).map(|i| b.signature(i)).collect();
    {
        let mut sa = sig_a.clone();
        let mut sb = sig_b.clone();
        sa.sort();
        sb.sort();
        if sa != sb {
            return None;
        }
    }
    if n < 3 {
        return small_equivalence(a, b, &sig_a, &sig_b);
    }
    // Anchor on the points whose signature class is rarest.
    let mut class_size: HashMap<Signature, usize> = HashMap::new();
    for s in &sig_a {
        *class_size.entry(*s).or_default() += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (class_size[&sig_a[i]], i));
    let anchors = [order[0], order[1], order[2]];
    let lookup: HashMap<&ProjPoint, usize> = b.points.iter().enumerate().map(|(i, p)| (p, i)).collect();

    for j0 in (0..n).filter(|&j| sig_b[j] == sig_a[anchors[0]]) {
        for j1 in (0..n).filter(|&j| j != j0 && sig_b[j] == sig_a[anchors[1]]) {
            for j2 in (0..n).filter(|&j| j != j0 && j != j1 && sig_b[j] == sig_a[anchors[2]]) {
                let m = mobius_from_triples(
                    [&a.points[anchors[0]], &a.points[anchors[1]], &a.points[anchors[2]]],
                    [&b.points[j0], &b.points[j1], &b.points[j2]],
                )
                .expect("distinct points");
                let relabel: Option<Vec<usize>> = a
                    .points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        lookup
                            .get(&m.apply(p))
                            .copied()
                            .filter(|&j| sig_b[j] == sig_a[i])
                    })
                    .collect();
                if let Some(relabel) = relabel {
                    return Some(Equivalence { mobius: m, relabel });
                }
            }
        }
    }
    None
}

fn small_equivalence(
    a: &MarkedConfig,
    b: &MarkedConfig,
    sig_a: &[Signature],
    sig_b: &[Signature],
) -> Option<Equivalence> {
    // PGL2 is 3-transitive, so any signature-preserving bijection is realized.
    let n = a.len();
    let mut relabel = Vec::with_capacity(n);
    let mut used = vec![false; n];
    for i in 0..n {
        let j = (0..n).find(|&j| !used[j] && sig_b[j] == sig_a[i])?;
        used[j] = true;
        relabel.push(j);
    }
    let pad = |pts: &[ProjPoint]| {
        let mut out: Vec<ProjPoint> = pts.to_vec();
        let mut k = 0;
        while out.len() < 3 {
            let cand = ProjPoint::int(k);
            if !out.contains(&cand) {
                out.push(cand);
            }
            k += 1;
        }
        out
    };
    let src = pad(&a.points);
    let dst_pts: Vec<ProjPoint> = relabel.iter().map(|&j| b.points[j].clone()).collect();
    let dst = pad(&dst_pts);
    let mobius = mobius_from_triples([&src[0], &src[1], &src[2]], [&dst[0], &dst[1], &dst[2]]).ok()?;
    Some(Equivalence { mobius, relabel })
}

/// `count` distinct random points: small rationals, occasionally ∞.
pub fn random_distinct_points<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<ProjPoint> {
    let mut out: Vec<ProjPoint> = Vec::with_capacity(count);
    while out.len() < count {
        let p = if rng.gen_ratio(1, 12) {
            ProjPoint::Infinity
        } else {
            ProjPoint::frac(rng.gen_range(-60..=60), rng.gen_range(1..=6))
        };
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// A random Möbius map with small integer entries.
pub fn random_mobius<R: Rng + ?Sized>(rng: &mut R) -> Mobius {
    loop {
        let mut e = || rng.gen_range(-9i64..=9);
        if let Ok(m) = Mobius::from_ints(e(), e(), e(), e()) {
            return m;
        }
    }
}

/// Absolute height of a point, handy for keeping random data small.
pub fn height(p: &ProjPoint) -> BigInt {
    match p {
        ProjPoint::Finite(z) => z.numer().abs().max(z.denom().clone()),
        ProjPoint::Infinity => BigInt::one(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pts(v: &[i64]) -> Vec<ProjPoint> {
        v.iter().map(|&x| ProjPoint::int(x)).collect()
    }

    #[test]
    fn cross_ratio_normalization() {
        let (z, o, inf) = (ProjPoint::int(0), ProjPoint::int(1), ProjPoint::Infinity);
        assert_eq!(cross_ratio(&z, &o, &inf, &ProjPoint::int(2)).unwrap(), ProjPoint::int(2));
        assert_eq!(cross_ratio(&z, &o, &inf, &z).unwrap(), z);
        assert_eq!(cross_ratio(&z, &o, &inf, &inf).unwrap(), inf);
    }

    #[test]
    fn cross_ratio_rejects_degenerate_triples() {
        let p = ProjPoint::int(4);
        let err = cross_ratio(&p, &p, &ProjPoint::int(1), &ProjPoint::int(2)).unwrap_err();
        assert!(matches!(err, Error::DegenerateConfiguration(_)));
    }

    #[test]
    fn cross_ratio_of_1234_is_mobius_invariant() {
        // Independent closed form: ((s-p)(q-r)) / ((s-r)(q-p)) at (1,2,3,4) = (3 * -1)/(1 * 1) = -3.
        let p = pts(&[1, 2, 3, 4]);
        let base = cross_ratio(&p[0], &p[1], &p[2], &p[3]).unwrap();
        assert_eq!(base, ProjPoint::int(-3));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let m = random_mobius(&mut rng);
            let q: Vec<ProjPoint> = p.iter().map(|x| m.apply(x)).collect();
            assert_eq!(cross_ratio(&q[0], &q[1], &q[2], &q[3]).unwrap(), base);
        }
    }

    #[test]
    fn triple_maps() {
        let std3 = [ProjPoint::int(0), ProjPoint::int(1), ProjPoint::Infinity];
        let id = mobius_from_triples([&std3[0], &std3[1], &std3[2]], [&std3[0], &std3[1], &std3[2]]).unwrap();
        assert!(id.same_map(&Mobius::identity()));

        let src = pts(&[1, 2, 3]);
        let m = mobius_from_triples([&src[0], &src[1], &src[2]], [&std3[0], &std3[1], &std3[2]]).unwrap();
        for (s, d) in src.iter().zip(&std3) {
            assert_eq!(&m.apply(s), d);
        }

        let a = pts(&[5, -2, 7]);
        let b = vec![ProjPoint::frac(1, 3), ProjPoint::Infinity, ProjPoint::int(-4)];
        let c = pts(&[0, 9, 2]);
        let ab = mobius_from_triples([&a[0], &a[1], &a[2]], [&b[0], &b[1], &b[2]]).unwrap();
        let bc = mobius_from_triples([&b[0], &b[1], &b[2]], [&c[0], &c[1], &c[2]]).unwrap();
        let ac = mobius_from_triples([&a[0], &a[1], &a[2]], [&c[0], &c[1], &c[2]]).unwrap();
        assert!(bc.compose(&ab).same_map(&ac));
    }

    #[test]
    fn repeated_point_in_triple_is_degenerate() {
        let a = pts(&[1, 1, 3]);
        let b = pts(&[0, 1, 2]);
        assert!(mobius_from_triples([&a[0], &a[1], &a[2]], [&b[0], &b[1], &b[2]]).is_err());
    }

    fn w_config(values: &[i64]) -> MarkedConfig {
        let mut c = MarkedConfig::new(pts(values));
        for i in 0..values.len() {
            c.add_role(i, Role::W(i as u32 + 1));
        }
        c
    }

    #[test]
    fn canonical_form_fixes_anchored_configs() {
        let c = MarkedConfig::new(vec![
            ProjPoint::int(0),
            ProjPoint::int(1),
            ProjPoint::Infinity,
            ProjPoint::int(5),
        ])
        .with_role(0, Role::W(1))
        .with_role(1, Role::W(2))
        .with_role(2, Role::W(3))
        .with_role(3, Role::W(4));
        assert_eq!(c.canonical_form().unwrap(), c);
    }

    #[test]
    fn canonical_form_separates_cross_ratios() {
        // Brute force over 4-point W configs {0,1,∞,t}: different t give
        // different canonical forms unless t' lies in the S3-orbit of t
        // under anchor relabeling; with fixed anchors W1..W3 they differ.
        let mk = |t: i64| {
            MarkedConfig::new(vec![ProjPoint::int(0), ProjPoint::int(1), ProjPoint::Infinity, ProjPoint::int(t)])
                .with_role(0, Role::W(1))
                .with_role(1, Role::W(2))
                .with_role(2, Role::W(3))
                .with_role(3, Role::W(4))
        };
        for s in 2..8 {
            for t in 2..8 {
                let same = mk(s).canonical_form().unwrap() == mk(t).canonical_form().unwrap();
                assert_eq!(same, s == t);
            }
        }
    }

    #[test]
    fn canonical_form_is_mobius_invariant_and_idempotent() {
        let c = w_config(&[3, -1, 7, 12, 0]).with_role(4, Role::Dist);
        let canon = c.canonical_form().unwrap();
        assert_eq!(canon.canonical_form().unwrap(), canon);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let m = random_mobius(&mut rng);
            assert_eq!(c.transformed(&m).canonical_form().unwrap(), canon);
        }
    }

    #[test]
    fn canonical_form_needs_three_points() {
        let c = w_config(&[1, 2]);
        assert!(matches!(c.canonical_form(), Err(Error::DegenerateConfiguration(_))));
    }

    #[test]
    fn equivalence_basics() {
        let c = w_config(&[0, 1, 2, 3, 4, 5])
            .with_role(3, Role::X)
            .with_role(4, Role::Y)
            .with_role(5, Role::Z);
        assert!(equivalent(&c, &c).is_some());

        let m = Mobius::from_ints(2, -1, 1, 3).unwrap();
        let image = c.transformed(&m);
        let w = equivalent(&c, &image).unwrap();
        for (i, p) in c.points.iter().enumerate() {
            assert_eq!(w.mobius.apply(p), image.points[w.relabel[i]]);
        }

        // {0,1,∞,2} has cross-ratio orbit {2, 1/2, -1}; 3 has {3, 1/3, -2, 3/2, -1/2, 2/3}.
        let a = MarkedConfig::new(vec![ProjPoint::int(0), ProjPoint::int(1), ProjPoint::Infinity, ProjPoint::int(2)]);
        let b = MarkedConfig::new(vec![ProjPoint::int(0), ProjPoint::int(1), ProjPoint::Infinity, ProjPoint::int(3)]);
        let wa = (0..4).fold(a, |c, i| c.with_role(i, Role::W(i as u32 + 1)));
        let wb = (0..4).fold(b, |c, i| c.with_role(i, Role::W(i as u32 + 1)));
        assert!(equivalent(&wa, &wb).is_none());
    }

    #[test]
    fn equivalence_respects_roles() {
        let base = w_config(&[0, 1, 2, 3, 4, 5]);
        let a = base.clone().with_role(0, Role::Dist);
        let b = base.clone().with_role(1, Role::Dist);
        // Shifting by -1 maps {0..5} onto {-1..4}, not the same set, so the only
        // candidates are symmetries of {0..5}: z ↦ 5 - z sends 0 to 5, not 1.
        assert!(equivalent(&a, &b).is_none());
        let c = base.with_role(5, Role::Dist);
        assert!(equivalent(&a, &c).is_some());
    }

    #[test]
    fn validation_errors() {
        let c = MarkedConfig::new(pts(&[1, 1, 2]));
        assert!(matches!(c.validate(), Err(Error::DegenerateConfiguration(_))));
        let c = w_config(&[1, 2, 3]).with_role(0, Role::X).with_role(1, Role::X);
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let c = MarkedConfig::new(pts(&[1, 2, 3])).with_role(0, Role::W(2));
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn json_shape() {
        let c = MarkedConfig::new(vec![ProjPoint::frac(-1, 2), ProjPoint::Infinity, ProjPoint::int(3)])
            .with_role(0, Role::W(1))
            .with_role(2, Role::Dist);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"points":["-1/2","inf","3"],"roles":{"0":["W1"],"2":["DIST"]}}"#);
        let back: MarkedConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
