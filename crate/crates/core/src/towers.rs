//! Covering towers of hyperelliptic curves.
//!
//! Every tower here is the quotient lattice of one Galois cover `C̃ → P¹`
//! whose group is generated by the hyperelliptic involution ι and one or two
//! commuting involutions σ, τ. Each marked point of the configuration has a
//! stabilizer of order two (ι over Weierstrass images, another involution over
//! the triple), and everything else follows from cosets: a quotient `C̃/K`
//! (with ι ∉ K) has one point over `p` for each coset of `K⟨s_p⟩`, it is
//! Weierstrass iff `s_p ∈ ιK`, and a double cover `C̃/K → C̃/K'` ramifies
//! over `p` iff `s_p ∈ K' \ K`.
//!
//! Group elements are bit triples: bit 0 = ι, bit 1 = σ, bit 2 = τ.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projline::{MarkedConfig, ProjPoint, Role};
use crate::torsion::{class_from_subset, Fate, LabelMap, TwoTorsionClass, WUniverse};

pub type Elem = u8;
pub const IOTA: Elem = 1;
pub const SIGMA: Elem = 2;
pub const TAU: Elem = 4;

const ELEM_NAMES: [&str; 8] = ["1", "ι", "σ", "ισ", "τ", "ιτ", "στ", "ιστ"];
const ELEM_ASCII: [&str; 8] = ["1", "i", "s", "is", "t", "it", "st", "ist"];

pub fn elem_name(e: Elem) -> &'static str {
    ELEM_NAMES[e as usize]
}

pub fn parse_elem(s: &str) -> Option<Elem> {
    (0..8u8).find(|&e| ELEM_NAMES[e as usize] == s || ELEM_ASCII[e as usize] == s)
}

fn gamma_name(e: Elem) -> &'static str {
    ["1", "s", "t", "st"][(e >> 1) as usize]
}

/// A subgroup of Z₂³ as a bitmask over its eight elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subgroup(u8);

impl Subgroup {
    pub fn generated(gens: &[Elem]) -> Subgroup {
        let mut mask = 1u8;
        for &g in gens {
            let mut next = mask;
            for e in 0..8u8 {
                if mask >> e & 1 == 1 {
                    next |= 1 << (e ^ g);
                }
            }
            mask = next;
        }
        Subgroup(mask)
    }

    pub fn contains(self, e: Elem) -> bool {
        self.0 >> e & 1 == 1
    }

    pub fn elems(self) -> impl Iterator<Item = Elem> {
        (0..8u8).filter(move |&e| self.contains(e))
    }

    pub fn order(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn join(self, e: Elem) -> Subgroup {
        let mut gens: Vec<Elem> = self.elems().collect();
        gens.push(e);
        Subgroup::generated(&gens)
    }

    pub fn is_subgroup_of(self, other: Subgroup) -> bool {
        self.0 & !other.0 == 0
    }

    /// Coset `g·self` as a mask.
    fn coset(self, g: Elem) -> u8 {
        self.elems().fold(0u8, |m, k| m | 1 << (g ^ k))
    }

    /// Cosets of `self` inside `ambient`, ordered by least element.
    fn cosets_in(self, ambient: Subgroup) -> Vec<u8> {
        let mut out: Vec<u8> = Vec::new();
        for g in ambient.elems() {
            let c = self.coset(g);
            if !out.contains(&c) {
                out.push(c);
            }
        }
        out
    }

    pub fn names(self) -> Vec<String> {
        self.elems().map(|e| elem_name(e).to_string()).collect()
    }
}

fn mask_elems(mask: u8) -> impl Iterator<Item = Elem> {
    (0..8u8).filter(move |&e| mask >> e & 1 == 1)
}

// ---------------------------------------------------------------------------
// Numerical bookkeeping

/// Genus of a degree-`degree` cover of a genus-`base_genus` curve with
/// `simple_ram_count` simple ramification points.
pub fn rh_genus(base_genus: u64, degree: u64, simple_ram_count: u64) -> Result<u64> {
    let twice = degree as i128 * (2 * base_genus as i128 - 2) + simple_ram_count as i128 + 2;
    if twice % 2 != 0 || twice < 0 {
        return Err(Error::InvalidRamification(format!(
            "2g'−2 = {degree}·(2·{base_genus}−2) + {simple_ram_count} has no solution"
        )));
    }
    Ok((twice / 2) as u64)
}

/// Allowed fixed-point counts `(|Fix τ|, |Fix ιτ|)` of an involution τ
/// commuting with the hyperelliptic involution on a curve of the given genus.
pub fn fixed_point_profile(genus: u64) -> Vec<(u64, u64)> {
    if genus % 2 == 0 {
        vec![(2, 2)]
    } else {
        vec![(0, 4), (4, 0)]
    }
}

pub fn profile_allowed(genus: u64, tau: u64, iota_tau: u64) -> bool {
    fixed_point_profile(genus).contains(&(tau, iota_tau))
}

/// Accola's identity for a Klein group acting on a curve.
pub fn accola_check(g_top: u64, g0: u64, g_sigma: u64, g_tau: u64, g_sigmatau: u64) -> bool {
    2 * g_top + 4 * g0 == 2 * (g_sigma + g_tau + g_sigmatau)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KleinClass {
    NoneExists,
    UniqueFPF,
    UniqueWithFixedPoints,
}

/// Klein subgroups of ⟨ι, σ, τ⟩ not containing ι, each as its three involutions.
pub fn klein_subgroups_avoiding_iota() -> [[Elem; 3]; 4] {
    let mut out = [[0; 3]; 4];
    let mut k = 0;
    for a in [SIGMA, SIGMA | IOTA] {
        for b in [TAU, TAU | IOTA] {
            out[k] = [a, b, a ^ b];
            k += 1;
        }
    }
    out
}

/// Decide which Klein subgroups a genus-`genus` hyperelliptic curve with
/// commuting involutions σ, τ can carry, by exhausting the fixed-point
/// assignments allowed by [`fixed_point_profile`] and keeping those where
/// every Klein subgroup has integral quotient genera satisfying Accola's
/// identity and Riemann–Hurwitz, and acts freely on Weierstrass points.
pub fn klein_classification(genus: u64) -> KleinClass {
    if genus == 0 || (2 * genus + 2) % 4 != 0 {
        return KleinClass::NoneExists;
    }
    let g = genus as i64;
    let mut outcomes = BTreeSet::new();
    for choice in 0u8..8 {
        // Bit k set: the ι-twisted member of pair k is fixed-point free.
        let fixed = |e: Elem| -> i64 {
            let (pair, twisted) = match e & !IOTA {
                SIGMA => (0, e & IOTA != 0),
                TAU => (1, e & IOTA != 0),
                _ => (2, e & IOTA != 0),
            };
            let twisted_free = choice >> pair & 1 == 1;
            if genus % 2 == 0 {
                2
            } else if twisted == twisted_free {
                0
            } else {
                4
            }
        };
        let mut valid = true;
        let (mut all_free, mut all_fixed) = (0, 0);
        for inv in klein_subgroups_avoiding_iota() {
            let f: Vec<i64> = inv.iter().map(|&e| fixed(e)).collect();
            let quot: Option<Vec<i64>> = f
                .iter()
                .map(|&fe| ((2 * g + 2 - fe) % 4 == 0).then_some((2 * g + 2 - fe) / 4))
                .collect();
            let Some(quot) = quot else {
                valid = false;
                break;
            };
            let excess = quot.iter().sum::<i64>() - g;
            if excess < 0 || excess % 2 != 0 {
                valid = false;
                break;
            }
            let g0 = excess / 2;
            if 2 * g - 2 != 4 * (2 * g0 - 2) + f.iter().sum::<i64>() {
                valid = false;
                break;
            }
            if f.iter().all(|&x| x == 0) {
                all_free += 1;
            }
            if f.iter().all(|&x| x > 0) {
                all_fixed += 1;
            }
        }
        if valid {
            outcomes.insert((all_free, all_fixed));
        }
    }
    match outcomes.into_iter().collect::<Vec<_>>().as_slice() {
        [] => KleinClass::NoneExists,
        [(1, 0)] => KleinClass::UniqueFPF,
        [(0, 1)] => KleinClass::UniqueWithFixedPoints,
        other => unreachable!("ambiguous Klein classification for genus {genus}: {other:?}"),
    }
}

// ---------------------------------------------------------------------------
// Hyperellipticity criteria

/// A point on a curve of the tower, as far as branch bookkeeping needs it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CurvePoint {
    /// A Weierstrass point, by label.
    Weierstrass { label: String },
    /// One of an ι-conjugate pair of non-Weierstrass points lying over the
    /// marked point `over`; `orbit` names the pair, `sheet` the member.
    Conjugate { over: String, orbit: String, sheet: u8 },
    /// A point of P¹.
    Rational { point: ProjPoint },
}

impl CurvePoint {
    pub fn iota(&self) -> CurvePoint {
        match self {
            CurvePoint::Conjugate { over, orbit, sheet } => CurvePoint::Conjugate {
                over: over.clone(),
                orbit: orbit.clone(),
                sheet: 1 - sheet,
            },
            other => other.clone(),
        }
    }

    pub fn is_weierstrass(&self) -> bool {
        matches!(self, CurvePoint::Weierstrass { .. })
    }
}

impl fmt::Display for CurvePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurvePoint::Weierstrass { label } => write!(f, "{label}"),
            CurvePoint::Conjugate { over, orbit, sheet } => {
                let sign = if *sheet == 0 { "+" } else { "-" };
                write!(f, "{over}<{orbit}>{sign}")
            }
            CurvePoint::Rational { point } => write!(f, "{point}"),
        }
    }
}

/// The line bundle (or 2-torsion class) defining a double cover.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "labels", rename_all = "snake_case")]
pub enum LineBundle {
    /// `O(w)` for a Weierstrass point `w`.
    Weierstrass(String),
    /// `O(w₁ + w₂)`.
    WeierstrassSum(String, String),
    /// The hyperelliptic bundle `O(h)`.
    Hyperelliptic,
    /// A 2-torsion point, by an even label subset.
    Torsion(Vec<String>),
}

impl fmt::Display for LineBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LineBundle::Weierstrass(w) => write!(f, "O({w})"),
            LineBundle::WeierstrassSum(a, b) => write!(f, "O({a}+{b})"),
            LineBundle::Hyperelliptic => f.write_str("O(h)"),
            LineBundle::Torsion(s) => write!(f, "η{{{}}}", s.join(",")),
        }
    }
}

/// Criterion for a double cover branched in two points to have a
/// hyperelliptic source.
pub fn check_b2_hyperelliptic(branch: [&CurvePoint; 2], defining: &LineBundle) -> Result<bool> {
    if branch[0] == branch[1] {
        return Err(Error::InvalidRamification(format!(
            "branch points coincide at {}",
            branch[0]
        )));
    }
    let conjugate = !branch[0].is_weierstrass() && branch[0].iota() == *branch[1];
    Ok(conjugate && matches!(defining, LineBundle::Weierstrass(_)))
}

/// Criterion for a double cover branched in four points.
pub fn check_b4_hyperelliptic(branch: [&CurvePoint; 4], defining: &LineBundle) -> Result<bool> {
    for i in 0..4 {
        for j in i + 1..4 {
            if branch[i] == branch[j] {
                return Err(Error::InvalidRamification(format!(
                    "branch divisor is not reduced at {}",
                    branch[i]
                )));
            }
        }
    }
    let paired = branch
        .iter()
        .all(|p| !p.is_weierstrass() && branch.contains(&&p.iota()));
    Ok(paired && *defining == LineBundle::Hyperelliptic)
}

/// An étale double cover of a hyperelliptic curve has hyperelliptic source
/// iff its class is a difference of two Weierstrass points.
pub fn check_etale_hyperelliptic(defining: &TwoTorsionClass) -> Result<bool> {
    if defining.is_zero() {
        return Err(Error::InvalidCover(
            "zero class does not define a connected double cover".into(),
        ));
    }
    let k = defining.rep().count_ones();
    Ok(k == 2 || defining.universe().size() - k == 2)
}

// ---------------------------------------------------------------------------
// Tower data

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseTag {
    /// Double cover branched in 2 points, from 2g+3 points.
    B2Double,
    /// Étale double cover of a genus-g curve.
    EtaleDouble,
    /// Double cover branched in 4 points over a genus g−1 curve.
    B4Double,
    /// Étale Klein cover of a genus-g curve.
    EtaleKlein,
    /// Prym of the top curve over H_x in the étale Klein tower (8 branch points).
    Mixed8,
    /// Klein cover branched in 12 points.
    Branched12,
    /// Prym of the top curve over H_x in the branched tower (4 branch points).
    Mixed4,
}

impl CaseTag {
    pub const ALL: [CaseTag; 7] = [
        CaseTag::B2Double,
        CaseTag::EtaleDouble,
        CaseTag::B4Double,
        CaseTag::EtaleKlein,
        CaseTag::Mixed8,
        CaseTag::Branched12,
        CaseTag::Mixed4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::B2Double => "b2_double",
            CaseTag::EtaleDouble => "etale_double",
            CaseTag::B4Double => "b4_double",
            CaseTag::EtaleKlein => "etale_klein",
            CaseTag::Mixed8 => "mixed8",
            CaseTag::Branched12 => "branched12",
            CaseTag::Mixed4 => "mixed4",
        }
    }

    pub fn is_klein(self) -> bool {
        matches!(
            self,
            CaseTag::EtaleKlein | CaseTag::Mixed8 | CaseTag::Branched12 | CaseTag::Mixed4
        )
    }

    /// Smallest base genus the construction accepts.
    pub fn min_genus(self) -> usize {
        match self {
            CaseTag::B2Double | CaseTag::Branched12 | CaseTag::Mixed4 => 1,
            _ => 2,
        }
    }

    /// Number of configuration points for base genus `g`.
    pub fn config_size(self, g: usize) -> usize {
        match self {
            CaseTag::B2Double => 2 * g + 3,
            CaseTag::Branched12 | CaseTag::Mixed4 => 2 * g + 5,
            _ => 2 * g + 2,
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CaseTag::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown case {s:?}")))
    }
}

/// A marked point of the configuration together with its stabilizer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Site {
    pub name: String,
    pub point: ProjPoint,
    pub config_index: usize,
    pub stabilizer: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveNode {
    pub name: String,
    pub display: String,
    pub genus: u64,
    /// Elements of the subgroup of the deck group this curve is the quotient by.
    pub subgroup: Vec<String>,
    /// Weierstrass labels; absent for rational nodes.
    pub labels: Option<Vec<String>>,
    /// Image in the base P¹ of each Weierstrass label, when the hyperelliptic
    /// quotient of this curve is the base.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub branch_image: BTreeMap<String, ProjPoint>,
    #[serde(skip)]
    universe: Option<Arc<WUniverse>>,
}

impl CurveNode {
    pub fn universe(&self) -> Option<&Arc<WUniverse>> {
        self.universe.as_ref()
    }

    fn subgroup_mask(&self) -> Result<Subgroup> {
        let elems = self
            .subgroup
            .iter()
            .map(|s| parse_elem(s).ok_or_else(|| Error::Parse(format!("unknown group element {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Subgroup::generated(&elems))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Etale,
    B2,
    B4,
    HyperellipticToP1,
}

impl EdgeKind {
    pub fn ramification(self) -> Option<usize> {
        match self {
            EdgeKind::Etale => Some(0),
            EdgeKind::B2 => Some(2),
            EdgeKind::B4 => Some(4),
            EdgeKind::HyperellipticToP1 => None,
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Etale => "et",
            EdgeKind::B2 => "+2",
            EdgeKind::B4 => "+4",
            EdgeKind::HyperellipticToP1 => "hyp",
        })
    }
}

/// A double cover `source → target` inside a tower.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverEdge {
    pub source: String,
    pub target: String,
    pub degree: u64,
    pub kind: EdgeKind,
    /// Branch points on the target.
    pub branch: Vec<CurvePoint>,
    pub defining: Option<LineBundle>,
    /// For each target Weierstrass label: the source labels over it, or
    /// `null` when its preimage is a conjugate pair of non-Weierstrass points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fates: Option<BTreeMap<String, Option<Vec<String>>>>,
    #[serde(skip)]
    map: Option<LabelMap>,
}

impl CoverEdge {
    pub fn label_map(&self) -> Option<&LabelMap> {
        self.map.as_ref()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedLocus {
    pub involution: String,
    pub over: Vec<String>,
    pub count: u64,
    pub weierstrass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KleinQuotient {
    pub involutions: [String; 3],
    pub genera: [u64; 3],
    pub quotient_genus: u64,
    /// Tower nodes realizing the three involution quotients and the Klein
    /// quotient, where present.
    pub nodes: [Option<String>; 4],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tower {
    pub schema: String,
    pub case: CaseTag,
    pub g: usize,
    pub config: MarkedConfig,
    pub sites: Vec<Site>,
    pub nodes: Vec<CurveNode>,
    pub edges: Vec<CoverEdge>,
    /// Action of σ and τ on the top curve's Weierstrass labels.
    pub deck: BTreeMap<String, BTreeMap<String, String>>,
    pub fixed_loci: Vec<FixedLocus>,
    pub klein_quotients: Vec<KleinQuotient>,
}

pub const TOWER_SCHEMA: &str = "hyperklein.tower/v1";

// ---------------------------------------------------------------------------
// Construction

struct Layout {
    group: Subgroup,
    sites: Vec<(String, usize, Elem)>,
    nodes: Vec<(&'static str, &'static str, Vec<Elem>)>,
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidConfig(msg()))
    }
}

fn layout(config: &MarkedConfig, case: CaseTag) -> Result<(usize, Layout)> {
    config.validate()?;
    let n = config.len();
    let w = config.w_points();
    let idx = |r: Role| config.index_of(r);
    let (x, y, z, dist) = (idx(Role::X), idx(Role::Y), idx(Role::Z), idx(Role::Dist));
    let is_w = |i: Option<usize>| i.is_some_and(|i| config.is_weierstrass(i));
    let numbered = |skip: &[Option<usize>]| -> Vec<(String, usize, Elem)> {
        w.iter()
            .filter(|(_, i)| !skip.contains(&Some(*i)))
            .enumerate()
            .map(|(k, &(_, i))| ((k + 1).to_string(), i, IOTA))
            .collect()
    };
    let g;
    let lay = match case {
        CaseTag::B2Double => {
            require(n >= 5 && n % 2 == 1, || format!("b2_double needs 2g+3 ≥ 5 points, got {n}"))?;
            g = (n - 3) / 2;
            require(w.len() == n - 1, || "b2_double needs 2g+2 W points".into())?;
            require(is_w(z), || "b2_double needs Z on a W point".into())?;
            require(y.is_some() && !is_w(y), || "b2_double needs Y on the extra point".into())?;
            require(x.is_none() && dist.is_none(), || "b2_double takes no X or DIST".into())?;
            let mut sites = numbered(&[z]);
            sites.push(("z".into(), z.unwrap(), IOTA | TAU));
            sites.push(("y".into(), y.unwrap(), TAU));
            Layout {
                group: Subgroup::generated(&[IOTA, TAU]),
                sites,
                nodes: vec![("C", "C", vec![]), ("H", "H", vec![TAU]), ("Hp", "H'", vec![IOTA | TAU])],
            }
        }
        CaseTag::EtaleDouble | CaseTag::B4Double => {
            require(n >= 6 && n % 2 == 0, || format!("{case} needs 2g+2 ≥ 6 points, got {n}"))?;
            g = n / 2 - 1;
            require(w.len() == n, || format!("{case} needs every point to be a W point"))?;
            require(x.is_some() && y.is_some(), || format!("{case} needs X and Y"))?;
            require(z.is_none() && dist.is_none(), || format!("{case} takes no Z or DIST"))?;
            let mut sites = numbered(&[x, y]);
            sites.push(("x".into(), x.unwrap(), IOTA | TAU));
            sites.push(("y".into(), y.unwrap(), IOTA | TAU));
            Layout {
                group: Subgroup::generated(&[IOTA, TAU]),
                sites,
                nodes: vec![("X", "X", vec![]), ("Y", "Y", vec![TAU]), ("Yp", "Y'", vec![IOTA | TAU])],
            }
        }
        CaseTag::EtaleKlein | CaseTag::Mixed8 => {
            require(n >= 6 && n % 2 == 0, || format!("{case} needs 2g+2 ≥ 6 points, got {n}"))?;
            g = n / 2 - 1;
            require(w.len() == n, || format!("{case} needs every point to be a W point"))?;
            require(x.is_some() && y.is_some() && z.is_some(), || format!("{case} needs the triple X, Y, Z"))?;
            if case == CaseTag::Mixed8 {
                require(dist.is_some() && dist == x, || "mixed8 needs DIST on the X point".into())?;
            } else {
                require(dist.is_none(), || "etale_klein takes no DIST".into())?;
            }
            let mut sites = numbered(&[x, y, z]);
            sites.push(("x".into(), x.unwrap(), IOTA | SIGMA));
            sites.push(("y".into(), y.unwrap(), IOTA | TAU));
            sites.push(("z".into(), z.unwrap(), IOTA | SIGMA | TAU));
            Layout {
                group: Subgroup::generated(&[IOTA, SIGMA, TAU]),
                sites,
                nodes: vec![
                    ("Ctilde", "C̃", vec![]),
                    ("C_x", "C_x", vec![SIGMA]),
                    ("C_y", "C_y", vec![TAU]),
                    ("C_z", "C_z", vec![SIGMA | TAU]),
                    ("H", "H", vec![SIGMA, TAU]),
                    ("H_x", "H_x", vec![SIGMA, IOTA | TAU]),
                    ("H_y", "H_y", vec![TAU, IOTA | SIGMA]),
                    ("H_z", "H_z", vec![SIGMA | TAU, IOTA | SIGMA]),
                ],
            }
        }
        CaseTag::Branched12 | CaseTag::Mixed4 => {
            require(n >= 7 && n % 2 == 1, || format!("{case} needs 2g+5 ≥ 7 points, got {n}"))?;
            g = (n - 5) / 2;
            require(w.len() == 2 * g + 2, || format!("{case} needs 2g+2 W points"))?;
            require(x.is_some() && y.is_some() && z.is_some(), || format!("{case} needs the triple X, Y, Z"))?;
            require(!is_w(x) && !is_w(y) && !is_w(z), || format!("{case} needs the triple off the W points"))?;
            if case == CaseTag::Mixed4 {
                require(dist.is_some() && dist == x, || "mixed4 needs DIST on the X point".into())?;
            } else {
                require(dist.is_none(), || "branched12 takes no DIST".into())?;
            }
            let mut sites = numbered(&[]);
            sites.push(("x".into(), x.unwrap(), SIGMA | TAU));
            sites.push(("y".into(), y.unwrap(), IOTA | SIGMA));
            sites.push(("z".into(), z.unwrap(), IOTA | TAU));
            Layout {
                group: Subgroup::generated(&[IOTA, SIGMA, TAU]),
                sites,
                nodes: vec![
                    ("Ctilde", "C̃", vec![]),
                    ("C_s", "C_σ", vec![SIGMA]),
                    ("C_t", "C_τ", vec![TAU]),
                    ("C_ist", "C_ιστ", vec![IOTA | SIGMA | TAU]),
                    ("T_st", "T_στ", vec![SIGMA | TAU]),
                    ("T_is", "T_ισ", vec![IOTA | SIGMA]),
                    ("T_it", "T_ιτ", vec![IOTA | TAU]),
                    ("H_x", "H_{σ,στ}", vec![SIGMA, SIGMA | TAU]),
                    ("H_y", "H_{τ,ισ}", vec![TAU, IOTA | SIGMA]),
                    ("H_z", "H_{σ,ιτ}", vec![SIGMA, IOTA | TAU]),
                    ("E", "E", vec![IOTA | SIGMA, IOTA | TAU]),
                ],
            }
        }
    };
    let unused = (0..n).find(|i| !lay.sites.iter().any(|s| s.1 == *i));
    require(unused.is_none(), || format!("point {} has no role in {case}", unused.unwrap()))?;
    require(g >= case.min_genus(), || format!("{case} needs g ≥ {}", case.min_genus()))?;
    Ok((g, lay))
}

struct Engine<'a> {
    group: Subgroup,
    sites: &'a [(String, usize, Elem)],
}

impl Engine<'_> {
    /// Genus of `C̃/K` from Riemann–Hurwitz over the base P¹.
    fn genus(&self, k: Subgroup) -> Result<u64> {
        let deg = (self.group.order() / k.order()) as i64;
        let ram: i64 = self
            .sites
            .iter()
            .filter(|s| !k.contains(s.2))
            .map(|_| deg / 2)
            .sum();
        let twice = -2 * deg + ram + 2;
        if twice < 0 || twice % 2 != 0 {
            return Err(Error::InvalidRamification(format!(
                "quotient by {:?} has no integral genus",
                k.names()
            )));
        }
        Ok((twice / 2) as u64)
    }

    /// Weierstrass labels of `C̃/K` as (name, site index, coset mask).
    fn labels(&self, k: Subgroup) -> Vec<(String, usize, u8)> {
        let mut out = Vec::new();
        for (si, (name, _, s)) in self.sites.iter().enumerate() {
            if !k.contains(s ^ IOTA) {
                continue;
            }
            let l = k.join(*s);
            let cosets = l.cosets_in(self.group);
            for c in cosets {
                let label = if cosets_len(l, self.group) == 1 {
                    format!("[{name}]")
                } else {
                    let gammas: BTreeSet<Elem> = mask_elems(c).map(|e| e & !IOTA).collect();
                    let parts: Vec<&str> = gammas.iter().map(|&e| gamma_name(e)).collect();
                    format!("({name},{})", parts.join("|"))
                };
                out.push((label, si, c));
            }
        }
        out
    }
}

fn cosets_len(l: Subgroup, g: Subgroup) -> usize {
    g.order() / l.order()
}

/// Build the tower of `case` from a marked configuration.
pub fn build_tower(config: &MarkedConfig, case: CaseTag) -> Result<Tower> {
    let (g, lay) = layout(config, case)?;
    let engine = Engine {
        group: lay.group,
        sites: &lay.sites,
    };
    let mut specs: Vec<(String, String, Subgroup)> = lay
        .nodes
        .iter()
        .map(|(n, d, gens)| (n.to_string(), d.to_string(), Subgroup::generated(gens)))
        .collect();
    specs.push(("P1".into(), "P¹".into(), lay.group));

    let mut nodes = Vec::new();
    let mut node_labels = Vec::new();
    for (name, display, k) in &specs {
        let genus = engine.genus(*k)?;
        let (labels, universe) = if k.contains(IOTA) {
            (None, None)
        } else {
            let labels = engine.labels(*k);
            let names: Vec<String> = labels.iter().map(|l| l.0.clone()).collect();
            if names.len() as u64 != 2 * genus + 2 {
                return Err(Error::InvalidCover(format!(
                    "{name}: {} Weierstrass labels for genus {genus}",
                    names.len()
                )));
            }
            (Some(names.clone()), Some(WUniverse::new(names)?))
        };
        let branch_image = if !k.contains(IOTA) && k.join(IOTA) == lay.group {
            engine
                .labels(*k)
                .iter()
                .map(|(l, si, _)| (l.clone(), config.points[lay.sites[*si].1].clone()))
                .collect()
        } else {
            BTreeMap::new()
        };
        node_labels.push(if k.contains(IOTA) { Vec::new() } else { engine.labels(*k) });
        nodes.push(CurveNode {
            name: name.clone(),
            display: display.clone(),
            genus,
            subgroup: k.names(),
            labels,
            branch_image,
            universe,
        });
    }

    let mut edges = Vec::new();
    for (si, (_, _, k)) in specs.iter().enumerate() {
        for (ti, (_, _, kp)) in specs.iter().enumerate() {
            if !(k.is_subgroup_of(*kp) && kp.order() == 2 * k.order()) {
                continue;
            }
            edges.push(make_edge(&engine, &nodes, &node_labels, si, ti, *k, *kp, config, &lay)?);
        }
    }

    let top = Subgroup::generated(&[]);
    let top_labels = &node_labels[0];
    let mut deck = BTreeMap::new();
    for gen in [SIGMA, TAU] {
        if !lay.group.contains(gen) {
            continue;
        }
        let perm: BTreeMap<String, String> = top_labels
            .iter()
            .map(|(l, si, c)| {
                let image = mask_elems(*c).fold(0u8, |m, e| m | 1 << (e ^ gen));
                let target = top_labels
                    .iter()
                    .find(|(_, sj, cj)| sj == si && *cj == image)
                    .expect("deck image is a label");
                (l.clone(), target.0.clone())
            })
            .collect();
        deck.insert(elem_name(gen).to_string(), perm);
    }
    debug_assert_eq!(engine.genus(top)?, nodes[0].genus);

    let mut fixed_loci = Vec::new();
    for e in lay.group.elems().filter(|&e| e != 0) {
        let over: Vec<String> = lay
            .sites
            .iter()
            .filter(|s| s.2 == e)
            .map(|s| s.0.clone())
            .collect();
        fixed_loci.push(FixedLocus {
            involution: elem_name(e).to_string(),
            count: (lay.group.order() / 2 * over.len()) as u64,
            over,
            weierstrass: e == IOTA,
        });
    }

    let mut klein_quotients = Vec::new();
    if lay.group.order() == 8 {
        for inv in klein_subgroups_avoiding_iota() {
            let find = |k: Subgroup| specs.iter().find(|s| s.2 == k).map(|s| s.0.clone());
            let ks = inv.map(|e| Subgroup::generated(&[e]));
            let v = Subgroup::generated(&inv);
            klein_quotients.push(KleinQuotient {
                involutions: inv.map(|e| elem_name(e).to_string()),
                genera: [engine.genus(ks[0])?, engine.genus(ks[1])?, engine.genus(ks[2])?],
                quotient_genus: engine.genus(v)?,
                nodes: [find(ks[0]), find(ks[1]), find(ks[2]), find(v)],
            });
        }
        if klein_classification(nodes[0].genus) == KleinClass::NoneExists {
            return Err(Error::NoKleinSubgroup(nodes[0].genus as u32));
        }
    }

    let sites = lay
        .sites
        .iter()
        .map(|(name, i, s)| Site {
            name: name.clone(),
            point: config.points[*i].clone(),
            config_index: *i,
            stabilizer: elem_name(*s).to_string(),
        })
        .collect();

    let tower = Tower {
        schema: TOWER_SCHEMA.to_string(),
        case,
        g,
        config: config.clone(),
        sites,
        nodes,
        edges,
        deck,
        fixed_loci,
        klein_quotients,
    };
    Ok(tower)
}

#[allow(clippy::too_many_arguments)]
fn make_edge(
    engine: &Engine,
    nodes: &[CurveNode],
    node_labels: &[Vec<(String, usize, u8)>],
    si: usize,
    ti: usize,
    k: Subgroup,
    kp: Subgroup,
    config: &MarkedConfig,
    lay: &Layout,
) -> Result<CoverEdge> {
    let (src, tgt) = (&nodes[si], &nodes[ti]);
    if kp.contains(IOTA) {
        let branch = node_labels[si]
            .iter()
            .map(|(_, s, _)| CurvePoint::Rational {
                point: config.points[lay.sites[*s].1].clone(),
            })
            .collect();
        return Ok(CoverEdge {
            source: src.name.clone(),
            target: tgt.name.clone(),
            degree: 2,
            kind: EdgeKind::HyperellipticToP1,
            branch,
            defining: None,
            fates: None,
            map: None,
        });
    }
    let mut branch = Vec::new();
    for (name, _, s) in engine.sites {
        if kp.contains(*s) && !k.contains(*s) {
            let cosets = kp.cosets_in(engine.group);
            for c in &cosets {
                let partner = mask_elems(*c).fold(0u8, |m, e| m | 1 << (e ^ IOTA));
                let both = c | partner;
                let gammas: BTreeSet<Elem> = mask_elems(both).map(|e| e & !IOTA).collect();
                let orbit = gammas.iter().map(|&e| gamma_name(e)).collect::<Vec<_>>().join("|");
                let sheet = u8::from(c.trailing_zeros() > partner.trailing_zeros());
                branch.push(CurvePoint::Conjugate {
                    over: name.clone(),
                    orbit,
                    sheet,
                });
            }
        }
    }
    let kind = match branch.len() {
        0 => EdgeKind::Etale,
        2 => EdgeKind::B2,
        4 => EdgeKind::B4,
        r => {
            return Err(Error::InvalidCover(format!(
                "{} → {} ramifies in {r} points",
                src.name, tgt.name
            )))
        }
    };
    let mut fates = BTreeMap::new();
    let mut trivial = Vec::new();
    for (label, s, c) in &node_labels[ti] {
        let stab = engine.sites[*s].2;
        if k.contains(stab ^ IOTA) {
            let fiber: Vec<String> = node_labels[si]
                .iter()
                .filter(|(_, s2, c2)| s2 == s && c2 & c == *c2)
                .map(|(l, _, _)| l.clone())
                .collect();
            fates.insert(label.clone(), Some(fiber));
        } else {
            trivial.push(label.clone());
            fates.insert(label.clone(), None);
        }
    }
    let defining = match (kind, trivial.len()) {
        (EdgeKind::Etale, 2) => LineBundle::Torsion(trivial),
        (EdgeKind::B2, 1) => LineBundle::Weierstrass(trivial.remove(0)),
        (EdgeKind::B4, 0) => LineBundle::Hyperelliptic,
        (kind, t) => {
            return Err(Error::InvalidCover(format!(
                "{} → {}: {kind:?} cover with {t} dropped labels",
                src.name, tgt.name
            )))
        }
    };
    let mut edge = CoverEdge {
        source: src.name.clone(),
        target: tgt.name.clone(),
        degree: 2,
        kind,
        branch,
        defining: Some(defining),
        fates: Some(fates),
        map: None,
    };
    edge.map = Some(edge_map(&edge, src, tgt)?);
    Ok(edge)
}

fn edge_map(edge: &CoverEdge, src: &CurveNode, tgt: &CurveNode) -> Result<LabelMap> {
    let (Some(cover), Some(base)) = (src.universe.clone(), tgt.universe.clone()) else {
        return Err(Error::InvalidCover(format!(
            "{} → {} needs Weierstrass labels on both ends",
            edge.source, edge.target
        )));
    };
    let fates = edge
        .fates
        .as_ref()
        .ok_or_else(|| Error::InvalidCover(format!("{} → {} has no fates", edge.source, edge.target)))?;
    let named: Vec<(&str, Option<Vec<String>>)> =
        fates.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
    LabelMap::from_names(base, cover, &named)
}

// ---------------------------------------------------------------------------
// Queries, serialization, validation

impl Tower {
    pub fn from_json(s: &str) -> Result<Tower> {
        let mut t: Tower = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        t.attach()?;
        Ok(t)
    }

    /// Rebuild the cached universes and label maps after deserialization.
    fn attach(&mut self) -> Result<()> {
        for n in &mut self.nodes {
            n.universe = match &n.labels {
                Some(l) => Some(WUniverse::new(l.clone())?),
                None => None,
            };
        }
        for i in 0..self.edges.len() {
            if self.edges[i].kind == EdgeKind::HyperellipticToP1 {
                continue;
            }
            let src = self.node(&self.edges[i].source)?;
            let tgt = self.node(&self.edges[i].target)?;
            let map = edge_map(&self.edges[i], src, tgt)?;
            self.edges[i].map = Some(map);
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tower serializes")
    }

    pub fn top(&self) -> &CurveNode {
        &self.nodes[0]
    }

    pub fn node(&self, name: &str) -> Result<&CurveNode> {
        self.nodes
            .iter()
            .find(|n| n.name == name)
            .ok_or_else(|| Error::InvalidCover(format!("no node named {name:?}")))
    }

    pub fn universe(&self, name: &str) -> Result<&Arc<WUniverse>> {
        self.node(name)?
            .universe
            .as_ref()
            .ok_or_else(|| Error::InvalidCover(format!("{name} has no Weierstrass labels")))
    }

    pub fn edge(&self, source: &str, target: &str) -> Result<&CoverEdge> {
        self.edges
            .iter()
            .find(|e| e.source == source && e.target == target)
            .ok_or_else(|| Error::InvalidCover(format!("no edge {source} → {target}")))
    }

    pub fn site(&self, name: &str) -> Option<&Site> {
        self.sites.iter().find(|s| s.name == name)
    }

    /// All paths (as edge index lists) from `from` down to `to`.
    pub fn paths(&self, from: &str, to: &str) -> Vec<Vec<usize>> {
        if from == to {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.source == from && e.map.is_some() {
                for mut rest in self.paths(&e.target, to) {
                    rest.insert(0, i);
                    out.push(rest);
                }
            }
        }
        out
    }

    fn compose_path(&self, path: &[usize]) -> Result<LabelMap> {
        let mut it = path.iter().rev();
        let first = it.next().ok_or_else(|| Error::InvalidCover("empty path".into()))?;
        let mut acc = self.edges[*first].map.clone().expect("labelled edge");
        for &i in it {
            acc = acc.then(self.edges[i].map.as_ref().expect("labelled edge"))?;
        }
        Ok(acc)
    }

    /// Label map of the composite cover `from → to`, along the first path.
    pub fn composite(&self, from: &str, to: &str) -> Result<LabelMap> {
        let paths = self.paths(from, to);
        let path = paths
            .first()
            .ok_or_else(|| Error::InvalidCover(format!("no path {from} → {to}")))?;
        self.compose_path(path)
    }

    /// Pullback of a 2-torsion class along an edge.
    pub fn pullback_2tor(&self, edge: &CoverEdge, c: &TwoTorsionClass) -> Result<TwoTorsionClass> {
        edge.map
            .as_ref()
            .ok_or_else(|| Error::InvalidCover("edge carries no label map".into()))?
            .pullback(c)
    }

    pub fn norm_2tor(&self, edge: &CoverEdge, c: &TwoTorsionClass) -> Result<TwoTorsionClass> {
        edge.map
            .as_ref()
            .ok_or_else(|| Error::InvalidCover("edge carries no label map".into()))?
            .norm(c)
    }

    /// The defining class of an étale edge, on the target's universe.
    pub fn defining_class(&self, edge: &CoverEdge) -> Result<Option<TwoTorsionClass>> {
        match &edge.defining {
            Some(LineBundle::Torsion(labels)) => {
                Ok(Some(class_from_subset(self.universe(&edge.target)?, labels)?))
            }
            _ => Ok(None),
        }
    }

    pub fn to_dot(&self) -> String {
        let mut s = format!("digraph \"{}\" {{\n  rankdir=TB;\n", self.case);
        for n in &self.nodes {
            s.push_str(&format!(
                "  \"{}\" [label=\"{} (g={})\"];\n",
                n.name, n.display, n.genus
            ));
        }
        for e in &self.edges {
            s.push_str(&format!(
                "  \"{}\" -> \"{}\" [label=\"{}\"];\n",
                e.source, e.target, e.kind
            ));
        }
        s.push_str("}\n");
        s
    }

    /// Re-derive every structural invariant of the tower from its stored data.
    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::default();
        for n in &self.nodes {
            if let Some(l) = &n.labels {
                r.push(
                    format!("{}: 2g+2 labels", n.name),
                    l.len() as u64 == 2 * n.genus + 2,
                    format!("{} labels, genus {}", l.len(), n.genus),
                );
            }
        }
        for e in &self.edges {
            let (Ok(src), Ok(tgt)) = (self.node(&e.source), self.node(&e.target)) else {
                r.push(format!("{} → {}: endpoints exist", e.source, e.target), false, String::new());
                continue;
            };
            let ram = e.branch.len() as u64;
            let expected = rh_genus(tgt.genus, 2, ram).ok();
            r.push(
                format!("{} → {}: Riemann–Hurwitz", e.source, e.target),
                expected == Some(src.genus) && e.degree == 2,
                format!("target genus {}, {ram} branch points, source genus {}", tgt.genus, src.genus),
            );
            let criterion = match (e.kind, &e.defining) {
                (EdgeKind::B2, Some(d)) if e.branch.len() == 2 => {
                    check_b2_hyperelliptic([&e.branch[0], &e.branch[1]], d).unwrap_or(false)
                }
                (EdgeKind::B4, Some(d)) if e.branch.len() == 4 => {
                    check_b4_hyperelliptic([&e.branch[0], &e.branch[1], &e.branch[2], &e.branch[3]], d)
                        .unwrap_or(false)
                }
                (EdgeKind::Etale, Some(_)) => match self.defining_class(e) {
                    Ok(Some(c)) => {
                        check_etale_hyperelliptic(&c).unwrap_or(false)
                            && e.label_map().and_then(|m| m.trivial_class().ok()) == Some(c)
                    }
                    _ => false,
                },
                (EdgeKind::HyperellipticToP1, None) => {
                    tgt.genus == 0 && ram == 2 * src.genus + 2
                }
                _ => false,
            };
            r.push(format!("{} → {}: hyperellipticity criterion", e.source, e.target), criterion, e.kind.to_string());
            if let Some(m) = e.label_map() {
                let covered = (0..m.cover().size()).all(|c| m.image_of(c).is_some());
                r.push(
                    format!("{} → {}: every source label lies over a target label", e.source, e.target),
                    covered,
                    String::new(),
                );
            }
        }
        self.validate_commutativity(&mut r);
        self.validate_deck(&mut r);
        for f in &self.fixed_loci {
            let expected = if self.case.is_klein() && f.involution != "ι" && f.involution != "1" {
                f.over.is_empty() || (f.count == 4 && !f.weierstrass)
            } else {
                true
            };
            r.push(
                format!("Fix({}) count and type", f.involution),
                expected,
                format!("{} points over {:?}", f.count, f.over),
            );
        }
        for k in &self.klein_quotients {
            let [a, b, c] = k.genera;
            let mut ok = accola_check(self.top().genus, k.quotient_genus, a, b, c);
            let genera = [a, b, c, k.quotient_genus];
            for (n, g) in k.nodes.iter().zip(genera) {
                if let Some(n) = n {
                    ok &= self.node(n).map(|n| n.genus == g).unwrap_or(false);
                }
            }
            r.push(
                format!("Accola for ⟨{}⟩", k.involutions.join(", ")),
                ok,
                format!("({}, {}, {a}, {b}, {c})", self.top().genus, k.quotient_genus),
            );
        }
        if self.case.is_klein() {
            let expected = match self.case {
                CaseTag::EtaleKlein | CaseTag::Mixed8 => KleinClass::UniqueFPF,
                _ => KleinClass::UniqueWithFixedPoints,
            };
            let got = klein_classification(self.top().genus);
            r.push(
                "Klein classification of the top genus".into(),
                got == expected,
                format!("{got:?}"),
            );
        }
        r
    }

    fn validate_commutativity(&self, r: &mut ValidationReport) {
        let labelled: Vec<&CurveNode> = self.nodes.iter().filter(|n| n.universe.is_some()).collect();
        for a in &labelled {
            for b in &labelled {
                let paths = self.paths(&a.name, &b.name);
                if paths.len() < 2 {
                    continue;
                }
                let maps: Vec<Option<Vec<Fate>>> = paths
                    .iter()
                    .map(|p| self.compose_path(p).ok().map(|m| m.fates().to_vec()))
                    .collect();
                let ok = maps[0].is_some() && maps.iter().all(|m| *m == maps[0]);
                r.push(
                    format!("{} ⇒ {}: {} paths agree on labels", a.name, b.name, paths.len()),
                    ok,
                    String::new(),
                );
            }
        }
    }

    fn validate_deck(&self, r: &mut ValidationReport) {
        let Some(top_labels) = &self.top().labels else {
            return;
        };
        let mut perms: BTreeMap<Elem, Vec<usize>> = BTreeMap::new();
        let index = |l: &str| top_labels.iter().position(|x| x == l);
        for (name, table) in &self.deck {
            let Some(e) = parse_elem(name) else {
                r.push(format!("deck generator {name} is known"), false, String::new());
                continue;
            };
            let perm: Option<Vec<usize>> = top_labels
                .iter()
                .map(|l| table.get(l).and_then(|t| index(t)))
                .collect();
            let ok = perm.as_ref().is_some_and(|p| {
                (0..p.len()).all(|i| p[i] != i && p[p[i]] == i)
            });
            r.push(format!("{name} is a free involution on top labels"), ok, String::new());
            if let Some(p) = perm {
                perms.insert(e, p);
            }
        }
        if let (Some(s), Some(t)) = (perms.get(&SIGMA), perms.get(&TAU)) {
            let commute = (0..s.len()).all(|i| s[t[i]] == t[s[i]]);
            let st: Vec<usize> = (0..s.len()).map(|i| s[t[i]]).collect();
            let free = (0..st.len()).all(|i| st[i] != i);
            r.push("σ and τ commute, στ free on top labels".into(), commute && free, String::new());
            perms.insert(SIGMA | TAU, st);
        }
        // Every node label's preimage in the top curve is stable under the
        // node's subgroup (ι acts trivially on Weierstrass labels).
        let top = self.top().name.clone();
        for n in self.nodes.iter().skip(1).filter(|n| n.universe.is_some()) {
            let Ok(map) = self.composite(&top, &n.name) else {
                r.push(format!("{}: composite map from top", n.name), false, String::new());
                continue;
            };
            let Ok(k) = n.subgroup_mask() else {
                r.push(format!("{}: subgroup parses", n.name), false, String::new());
                continue;
            };
            let mut ok = true;
            for fate in map.fates() {
                if let Fate::Fiber(f) = fate {
                    let set: BTreeSet<usize> = f.iter().copied().collect();
                    for e in k.elems() {
                        let core = e & !IOTA;
                        if core == 0 {
                            continue;
                        }
                        match perms.get(&core) {
                            Some(p) => ok &= set.iter().all(|&i| set.contains(&p[i])),
                            None => ok = false,
                        }
                    }
                }
            }
            r.push(format!("{}: fibers are {}-orbits", n.name, k.names().join(",")), ok, String::new());
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationCheck {
    pub check: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    fn push(&mut self, check: String, holds: bool, detail: String) {
        self.checks.push(ValidationCheck { check, holds, detail });
    }

    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ValidationCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }
}

/// A standard configuration for `case` and base genus `g`, with points
/// `0, 1, 2, …` (the roles follow the layout each case expects).
pub fn standard_config(case: CaseTag, g: usize) -> MarkedConfig {
    let n = case.config_size(g);
    let points: Vec<ProjPoint> = (0..n as i64).map(ProjPoint::int).collect();
    assign_roles(case, g, points)
}

/// Put the roles of `case` on `points` in order: W points first, then the
/// triple (or the extra point), as in [`standard_config`].
pub fn assign_roles(case: CaseTag, g: usize, points: Vec<ProjPoint>) -> MarkedConfig {
    let mut c = MarkedConfig::new(points);
    let nw = 2 * g + 2;
    for i in 0..nw {
        c.add_role(i, Role::W(i as u32 + 1));
    }
    match case {
        CaseTag::B2Double => {
            c.add_role(nw - 1, Role::Z);
            c.add_role(nw, Role::Y);
        }
        CaseTag::EtaleDouble | CaseTag::B4Double => {
            c.add_role(nw - 2, Role::X);
            c.add_role(nw - 1, Role::Y);
        }
        CaseTag::EtaleKlein | CaseTag::Mixed8 => {
            c.add_role(nw - 3, Role::X);
            c.add_role(nw - 2, Role::Y);
            c.add_role(nw - 1, Role::Z);
            if case == CaseTag::Mixed8 {
                c.add_role(nw - 3, Role::Dist);
            }
        }
        CaseTag::Branched12 | CaseTag::Mixed4 => {
            c.add_role(nw, Role::X);
            c.add_role(nw + 1, Role::Y);
            c.add_role(nw + 2, Role::Z);
            if case == CaseTag::Mixed4 {
                c.add_role(nw, Role::Dist);
            }
        }
    }
    c
}

/// A random configuration of `case` at genus `g` with small rational points.
pub fn random_config<R: rand::Rng + ?Sized>(rng: &mut R, case: CaseTag, g: usize) -> MarkedConfig {
    let points = crate::projline::random_distinct_points(rng, case.config_size(g));
    assign_roles(case, g, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projline::random_distinct_points;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn riemann_hurwitz_examples() {
        assert_eq!(rh_genus(2, 2, 0).unwrap(), 3);
        assert_eq!(rh_genus(2, 4, 0).unwrap(), 5);
        assert_eq!(rh_genus(1, 4, 12).unwrap(), 7);
        assert!(matches!(rh_genus(1, 2, 1), Err(Error::InvalidRamification(_))));
    }

    #[test]
    fn fixed_point_profiles() {
        assert_eq!(fixed_point_profile(4), vec![(2, 2)]);
        assert!(profile_allowed(5, 0, 4) && profile_allowed(5, 4, 0));
        assert!(!profile_allowed(7, 2, 2));
    }

    #[test]
    fn accola_examples() {
        assert!(accola_check(5, 2, 3, 3, 3));
        assert!(!accola_check(5, 2, 3, 3, 2));
        // g = 1 branched: the ⟨σ,τ⟩ and ⟨ισ,ιτ⟩ quotients.
        assert!(accola_check(7, 2, 4, 4, 3));
        assert!(accola_check(7, 1, 3, 3, 3));
    }

    #[test]
    fn klein_classification_examples() {
        assert_eq!(klein_classification(5), KleinClass::UniqueFPF);
        assert_eq!(klein_classification(7), KleinClass::UniqueWithFixedPoints);
        assert_eq!(klein_classification(4), KleinClass::NoneExists);
        for g in 2..=64u64 {
            let expected = match g % 4 {
                1 => KleinClass::UniqueFPF,
                3 => KleinClass::UniqueWithFixedPoints,
                _ => KleinClass::NoneExists,
            };
            assert_eq!(klein_classification(g), expected, "genus {g}");
        }
    }

    fn conj(over: &str, orbit: &str, sheet: u8) -> CurvePoint {
        CurvePoint::Conjugate {
            over: over.into(),
            orbit: orbit.into(),
            sheet,
        }
    }

    fn wp(l: &str) -> CurvePoint {
        CurvePoint::Weierstrass { label: l.into() }
    }

    #[test]
    fn b2_criterion() {
        let z = LineBundle::Weierstrass("z".into());
        assert!(check_b2_hyperelliptic([&conj("y", "", 0), &conj("y", "", 1)], &z).unwrap());
        assert!(!check_b2_hyperelliptic([&wp("w1"), &wp("w2")], &z).unwrap());
        assert!(!check_b2_hyperelliptic([&conj("y", "", 0), &conj("u", "", 0)], &z).unwrap());
        let p = conj("y", "", 0);
        assert!(matches!(check_b2_hyperelliptic([&p, &p], &z), Err(Error::InvalidRamification(_))));
    }

    #[test]
    fn b4_criterion() {
        let pts = [conj("x", "", 0), conj("x", "", 1), conj("y", "", 0), conj("y", "", 1)];
        let refs = [&pts[0], &pts[1], &pts[2], &pts[3]];
        assert!(check_b4_hyperelliptic(refs, &LineBundle::Hyperelliptic).unwrap());
        let sum = LineBundle::WeierstrassSum("w1".into(), "w2".into());
        assert!(!check_b4_hyperelliptic(refs, &sum).unwrap());
        let rep = [&pts[0], &pts[0], &pts[2], &pts[3]];
        assert!(check_b4_hyperelliptic(rep, &LineBundle::Hyperelliptic).is_err());
    }

    #[test]
    fn etale_criterion() {
        let u = WUniverse::new((1..=8).map(|i| format!("w{i}"))).unwrap();
        let pair = class_from_subset(&u, &["w1", "w2"]).unwrap();
        assert!(check_etale_hyperelliptic(&pair).unwrap());
        // Genus 3: a 4-element class has representatives of sizes 4 and 4.
        let four = class_from_subset(&u, &["w1", "w2", "w3", "w4"]).unwrap();
        assert!(!check_etale_hyperelliptic(&four).unwrap());
        assert!(check_etale_hyperelliptic(&u.zero()).is_err());
    }

    fn genus(t: &Tower, n: &str) -> u64 {
        t.node(n).unwrap().genus
    }

    #[test]
    fn etale_klein_genus_two() {
        // W = {0,...,5} with x = 3, y = 4, z = 5.
        let pts: Vec<ProjPoint> = (0..6).map(ProjPoint::int).collect();
        let mut c = MarkedConfig::new(pts);
        for i in 0..6 {
            c.add_role(i, Role::W(i as u32 + 1));
        }
        c.add_role(3, Role::X);
        c.add_role(4, Role::Y);
        c.add_role(5, Role::Z);
        let t = build_tower(&c, CaseTag::EtaleKlein).unwrap();
        assert_eq!(genus(&t, "Ctilde"), 5);
        for n in ["C_x", "C_y", "C_z"] {
            assert_eq!(genus(&t, n), 3);
        }
        assert_eq!(genus(&t, "H"), 2);
        for (n, j) in [("H_x", 3), ("H_y", 4), ("H_z", 5)] {
            assert_eq!(genus(&t, n), 1);
            let image: BTreeSet<ProjPoint> = t.node(n).unwrap().branch_image.values().cloned().collect();
            let expected: BTreeSet<ProjPoint> = [j, 0, 1, 2].into_iter().map(ProjPoint::int).collect();
            assert_eq!(image, expected);
        }
        assert_eq!(t.top().labels.as_ref().unwrap().len(), 8 * 2 - 4);
        let report = t.validate();
        assert!(report.all_hold(), "{:#?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn branched_genus_one() {
        let t = build_tower(&standard_config(CaseTag::Branched12, 1), CaseTag::Branched12).unwrap();
        assert_eq!(genus(&t, "Ctilde"), 7);
        for n in ["T_st", "T_is", "T_it"] {
            assert_eq!(genus(&t, n), 3);
        }
        for n in ["H_x", "H_y", "H_z"] {
            assert_eq!(genus(&t, n), 2);
        }
        for n in ["C_s", "C_t", "C_ist"] {
            assert_eq!(genus(&t, n), 4);
        }
        assert_eq!(genus(&t, "E"), 1);
        assert_eq!(t.top().labels.as_ref().unwrap().len(), 16);
        for f in &t.fixed_loci {
            if ["στ", "ισ", "ιτ"].contains(&f.involution.as_str()) {
                assert_eq!(f.count, 4);
                assert!(!f.weierstrass);
            }
            if ["σ", "τ", "ιστ"].contains(&f.involution.as_str()) {
                assert_eq!(f.count, 0);
            }
        }
        // H_x = H_{σ,στ} is branched over W ∪ {y, z}.
        let hx: BTreeSet<&str> = t.node("H_x").unwrap().labels.as_ref().unwrap().iter().map(|s| s.as_str()).collect();
        assert!(hx.contains("[y]") && hx.contains("[z]") && !hx.contains("[x]"));
        assert!(t.validate().all_hold());
    }

    #[test]
    fn b2_double_genus_one() {
        let t = build_tower(&standard_config(CaseTag::B2Double, 1), CaseTag::B2Double).unwrap();
        assert_eq!(genus(&t, "C"), 2);
        assert_eq!(genus(&t, "H"), 1);
        assert_eq!(genus(&t, "Hp"), 1);
        // H is branched over z and the W points, H' over y and the same W points.
        let h: Vec<&String> = t.node("H").unwrap().labels.as_ref().unwrap().iter().collect();
        let hp: Vec<&String> = t.node("Hp").unwrap().labels.as_ref().unwrap().iter().collect();
        assert!(h.iter().any(|l| *l == "[z]") && !h.iter().any(|l| *l == "[y]"));
        assert!(hp.iter().any(|l| *l == "[y]") && !hp.iter().any(|l| *l == "[z]"));
        let e = t.edge("C", "H").unwrap();
        assert_eq!(e.kind, EdgeKind::B2);
        assert_eq!(e.defining, Some(LineBundle::Weierstrass("[z]".into())));
        assert!(t.validate().all_hold());
    }

    #[test]
    fn double_towers() {
        for g in 2..=4 {
            let t = build_tower(&standard_config(CaseTag::EtaleDouble, g), CaseTag::EtaleDouble).unwrap();
            assert_eq!(genus(&t, "X"), 2 * g as u64 - 1);
            assert_eq!(genus(&t, "Y"), g as u64);
            assert_eq!(genus(&t, "Yp"), g as u64 - 1);
            assert_eq!(t.edge("X", "Y").unwrap().kind, EdgeKind::Etale);
            assert_eq!(t.edge("X", "Yp").unwrap().kind, EdgeKind::B4);
            assert!(t.validate().all_hold());
        }
    }

    #[test]
    fn all_cases_validate_and_round_trip_json() {
        for case in CaseTag::ALL {
            for g in case.min_genus()..=4 {
                let t = build_tower(&standard_config(case, g), case).unwrap();
                let report = t.validate();
                assert!(report.all_hold(), "{case} g={g}: {:#?}", report.failures().collect::<Vec<_>>());
                let back = Tower::from_json(&t.to_json()).unwrap();
                assert_eq!(back.to_json(), t.to_json());
                assert!(back.validate().all_hold());
            }
        }
    }

    #[test]
    fn tampered_fates_fail_validation() {
        let t = build_tower(&standard_config(CaseTag::EtaleKlein, 2), CaseTag::EtaleKlein).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        // Exchange one member between the fibers of two labels on one edge.
        let edge = v["edges"]
            .as_array_mut()
            .unwrap()
            .iter_mut()
            .find(|e| e["source"] == "Ctilde" && e["target"] == "C_x")
            .unwrap();
        let fates = edge["fates"].as_object_mut().unwrap();
        let keys: Vec<String> = fates.keys().cloned().collect();
        let a = fates[&keys[0]][0].clone();
        let b = fates[&keys[1]][0].clone();
        fates[&keys[0]][0] = b;
        fates[&keys[1]][0] = a;
        let bad = Tower::from_json(&v.to_string()).unwrap();
        assert!(!bad.validate().all_hold());
    }

    #[test]
    fn config_errors() {
        let mut c = standard_config(CaseTag::EtaleKlein, 2);
        c.points[1] = c.points[0].clone();
        assert!(matches!(build_tower(&c, CaseTag::EtaleKlein), Err(Error::DegenerateConfiguration(_))));
        let c = standard_config(CaseTag::EtaleKlein, 2);
        assert!(matches!(build_tower(&c, CaseTag::Branched12), Err(Error::InvalidConfig(_))));
        assert!(matches!(build_tower(&c, CaseTag::Mixed8), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn rebuild_from_canonical_form_is_isomorphic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for case in CaseTag::ALL {
            let g = case.min_genus() + 1;
            let pts = random_distinct_points(&mut rng, case.config_size(g));
            let c = assign_roles(case, g, pts);
            let a = build_tower(&c, case).unwrap();
            let b = build_tower(&c.canonical_form().unwrap(), case).unwrap();
            for (na, nb) in a.nodes.iter().zip(&b.nodes) {
                assert_eq!((na.genus, &na.labels), (nb.genus, &nb.labels));
            }
            for (ea, eb) in a.edges.iter().zip(&b.edges) {
                assert_eq!((&ea.fates, ea.kind), (&eb.fates, eb.kind));
                if ea.kind != EdgeKind::HyperellipticToP1 {
                    assert_eq!(ea.branch, eb.branch);
                }
            }
        }
    }
}
