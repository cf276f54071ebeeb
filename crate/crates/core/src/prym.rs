//! Forward Prym computations on a built tower: 2-torsion of the quotient
//! Jacobians embedded in the top Jacobian, gluing groups, the kernel of the
//! addition map, polarisation types, and the symbolic Prym datum that the
//! inverse in [`crate::reconstruct`] consumes.
//!
//! Top Weierstrass labels of the Klein towers are named `(i,γ)` with
//! γ ∈ {1, s, t, st}; the label `(i,γ)` is the point γ·w_i over the i-th
//! Weierstrass point of the base.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::idempotents::{verify_decomposition, IdentityReport, KleinDecomposition};
use crate::projline::{random_mobius, ProjPoint};
use crate::torsion::{class_from_subset, Fate, TwoTorsionClass, TwoTorsionSubgroup, WUniverse};
use crate::towers::{CaseTag, Tower};

pub const PRYM_SCHEMA: &str = "hyperklein.prym/v1";

/// The quotient curves whose 2-torsion has a generator table.
pub const BRANCHED_TABLES: [&str; 7] = ["E", "H_x", "H_y", "H_z", "T_st", "T_is", "T_it"];

fn top_universe(tower: &Tower) -> Result<&Arc<WUniverse>> {
    tower
        .top()
        .universe()
        .ok_or_else(|| Error::InvalidCover("top curve has no Weierstrass labels".into()))
}

/// Names of the sites lying under Weierstrass points of the top curve.
fn w_sites(tower: &Tower) -> Vec<&str> {
    tower
        .sites
        .iter()
        .filter(|s| s.stabilizer == "ι")
        .map(|s| s.name.as_str())
        .collect()
}

/// The class of `{γ·w_i : γ ∈ gammas}` in the top universe.
fn orbit_part(u: &Arc<WUniverse>, site: &str, gammas: &[&str]) -> Result<TwoTorsionClass> {
    let labels: Vec<String> = gammas.iter().map(|g| format!("({site},{g})")).collect();
    class_from_subset(u, &labels)
}

fn block(u: &Arc<WUniverse>, site: &str) -> Result<TwoTorsionClass> {
    orbit_part(u, site, &["1", "s", "t", "st"])
}

fn halves(node: &str) -> Option<[[&'static str; 2]; 2]> {
    Some(match node {
        "H_x" | "T_st" => [["1", "st"], ["s", "t"]],
        "H_y" | "T_is" => [["1", "s"], ["t", "st"]],
        "H_z" | "T_it" => [["1", "t"], ["s", "st"]],
        _ => return None,
    })
}

fn require_case(tower: &Tower, cases: &[CaseTag], what: &str) -> Result<()> {
    if cases.contains(&tower.case) {
        Ok(())
    } else {
        Err(Error::UnsupportedNode(format!("{what} is not defined for {} towers", tower.case)))
    }
}

fn branched_je(tower: &Tower) -> Result<TwoTorsionSubgroup> {
    let u = top_universe(tower)?;
    let sites = w_sites(tower);
    let b0 = block(u, sites[0])?;
    let gens = sites[1..]
        .iter()
        .map(|s| block(u, s)?.add(&b0))
        .collect::<Result<Vec<_>>>()?;
    TwoTorsionSubgroup::span(u, &gens)
}

/// A Q-type class: one chosen half of every orbit. Different choices differ
/// by whole orbit blocks, which the tables already contain.
pub fn q_class(tower: &Tower, node: &str, choice: &[bool]) -> Result<TwoTorsionClass> {
    let u = top_universe(tower)?;
    let hv = halves(node).ok_or_else(|| Error::UnsupportedNode(node.to_string()))?;
    let mut acc = u.zero();
    for (k, site) in w_sites(tower).into_iter().enumerate() {
        let pick = hv[usize::from(choice.get(k).copied().unwrap_or(false))];
        acc = acc.add(&orbit_part(u, site, &pick)?)?;
    }
    Ok(acc)
}

/// The subgroup of the top 2-torsion generated by the listed generators for
/// `node`. Branched towers have tables for `E`, `H_x`, `H_y`, `H_z`,
/// `T_st`, `T_is`, `T_it`; étale towers only for the images of `H`, `H_x`,
/// `H_y`, `H_z`, which are spanned by the orbit blocks over their labels.
pub fn embed_2torsion(tower: &Tower, node: &str) -> Result<TwoTorsionSubgroup> {
    let u = top_universe(tower)?;
    match tower.case {
        CaseTag::Branched12 | CaseTag::Mixed4 => {
            let mut group = branched_je(tower)?;
            let sites = w_sites(tower);
            match node {
                "E" => {}
                "H_x" | "H_y" | "H_z" => {
                    for s in &sites {
                        group.insert(&block(u, s)?)?;
                    }
                    group.insert(&q_class(tower, node, &[])?)?;
                }
                "T_st" | "T_is" | "T_it" => {
                    let [a, b] = halves(node).expect("table node");
                    let a0 = orbit_part(u, sites[0], &a)?;
                    for s in &sites {
                        group.insert(&orbit_part(u, s, &a)?.add(&a0)?)?;
                        for t in &sites {
                            group.insert(&orbit_part(u, s, &a)?.add(&orbit_part(u, t, &b)?)?)?;
                        }
                    }
                }
                _ => return Err(Error::UnsupportedNode(format!("no 2-torsion table for {node}"))),
            }
            Ok(group)
        }
        CaseTag::EtaleKlein | CaseTag::Mixed8 => {
            if !matches!(node, "H" | "H_x" | "H_y" | "H_z") {
                return Err(Error::UnsupportedNode(format!("no 2-torsion table for {node}")));
            }
            let labels = tower
                .node(node)?
                .labels
                .clone()
                .unwrap_or_default();
            let mut gens = Vec::new();
            for s in w_sites(tower) {
                if labels.iter().any(|l| *l == format!("[{s}]")) {
                    gens.push(block(u, s)?);
                }
            }
            TwoTorsionSubgroup::span(u, &gens)
        }
        _ => Err(Error::UnsupportedNode(format!("{} towers have no Klein tables", tower.case))),
    }
}

/// `JH*_{σ,στ}[2] ∩ JH*_{τ,ισ}[2] ∩ JH*_{σ,ιτ}[2]` inside the top 2-torsion.
pub fn triple_intersection(tower: &Tower) -> Result<TwoTorsionSubgroup> {
    require_case(tower, &[CaseTag::Branched12, CaseTag::Mixed4], "triple_intersection")?;
    embed_2torsion(tower, "H_x")?
        .intersect(&embed_2torsion(tower, "H_y")?)?
        .intersect(&embed_2torsion(tower, "H_z")?)
}

/// The three quotient curves whose Jacobians make up the Prym variety,
/// and the curve the Prym is taken over.
pub fn constituent_nodes(case: CaseTag) -> Result<([&'static str; 3], &'static str)> {
    Ok(match case {
        CaseTag::EtaleKlein => (["H_x", "H_y", "H_z"], "H"),
        CaseTag::Mixed8 => (["H", "H_y", "H_z"], "H_x"),
        CaseTag::Branched12 => (["H_x", "H_y", "H_z"], "E"),
        CaseTag::Mixed4 => (["E", "H_y", "H_z"], "H_x"),
        _ => return Err(Error::UnsupportedNode(format!("{case} has no Klein Prym decomposition"))),
    })
}

/// The subgroup along which the constituent Jacobians are glued inside the
/// Prym: the common image of all three for étale-type towers, the triple
/// intersection for branched12, and `JH*_y[2] ∩ JH*_z[2]` for mixed4.
pub fn gluing_group(tower: &Tower) -> Result<TwoTorsionSubgroup> {
    match tower.case {
        CaseTag::EtaleKlein | CaseTag::Mixed8 => {
            let (nodes, _) = constituent_nodes(tower.case)?;
            let mut acc = embed_2torsion(tower, nodes[0])?;
            for n in &nodes[1..] {
                acc = acc.intersect(&embed_2torsion(tower, n)?)?;
            }
            Ok(acc)
        }
        CaseTag::Branched12 => triple_intersection(tower),
        CaseTag::Mixed4 => embed_2torsion(tower, "H_y")?.intersect(&embed_2torsion(tower, "H_z")?),
        _ => Err(Error::UnsupportedNode(format!("{} towers have no gluing group", tower.case))),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AdditionKernel {
    pub case: CaseTag,
    /// Orders of the 2-torsion of the three constituents.
    pub factor_orders: [BigUint; 3],
    /// The kernel as a set of triples.
    pub kernel: String,
    /// Degree of the addition map onto the Prym.
    pub psi_degree: BigUint,
    /// Degree of the quotient of the Prym by its gluing group.
    pub pi_p_degree: BigUint,
}

/// Kernel of the addition map from the product of constituents onto the
/// Prym. It consists of triples of 2-torsion points summing to zero, with
/// the two free coordinates on the constituents that are not the first
/// (mixed8) or not the last (étale).
pub fn addition_kernel(tower: &Tower) -> Result<AdditionKernel> {
    require_case(tower, &[CaseTag::EtaleKlein, CaseTag::Mixed8], "addition_kernel")?;
    let (nodes, _) = constituent_nodes(tower.case)?;
    let orders = nodes
        .iter()
        .map(|n| Ok(BigUint::from(2u32).pow(2 * tower.node(n)?.genus as u32)))
        .collect::<Result<Vec<_>>>()?;
    let factor_orders: [BigUint; 3] = [orders[0].clone(), orders[1].clone(), orders[2].clone()];
    let (psi_degree, kernel) = match tower.case {
        CaseTag::EtaleKlein => (
            &orders[0] * &orders[1],
            "{(a, b, −a−b) : a ∈ JH_x[2], b ∈ JH_y[2]}".to_string(),
        ),
        _ => (
            &orders[1] * &orders[2],
            "{(−(b+c), b, c) : b ∈ JH_y[2], c ∈ JH_z[2]}".to_string(),
        ),
    };
    Ok(AdditionKernel {
        case: tower.case,
        factor_orders,
        kernel,
        psi_degree,
        pi_p_degree: gluing_group(tower)?.order(),
    })
}

/// The polarisation type δ of the Prym variety.
pub fn polarisation_type(case: CaseTag, g: usize) -> Result<Vec<u32>> {
    let min = match case {
        CaseTag::EtaleKlein | CaseTag::Mixed8 => 2,
        CaseTag::Branched12 | CaseTag::Mixed4 => 1,
        _ => return Err(Error::InvalidConfig(format!("{case} has no Klein Prym"))),
    };
    if g < min {
        return Err(Error::InvalidConfig(format!("{case} needs g ≥ {min}, got {g}")));
    }
    let (ones, twos, fours) = match case {
        CaseTag::EtaleKlein => (2 * g - 2, 0, g - 1),
        CaseTag::Mixed8 => (2 * g - 1, 0, g - 1),
        CaseTag::Branched12 => (2 * g + 3, 0, g),
        _ => (2 * g + 1, 1, g),
    };
    let mut d = vec![1; ones];
    d.extend(std::iter::repeat(2).take(twos));
    d.extend(std::iter::repeat(4).take(fours));
    Ok(d)
}

/// Dimension of the Prym variety read off the tower: top genus minus the
/// genus of the curve the Prym is taken over.
pub fn prym_dimension(tower: &Tower) -> Result<u64> {
    let (_, base) = constituent_nodes(tower.case)?;
    Ok(tower.top().genus - tower.node(base)?.genus)
}

/// Expected order of an embedded table, as a power of two.
fn expected_log2(name: &str, g: usize) -> Option<usize> {
    Some(match name {
        "E" => 2 * g,
        "H_x" | "H_y" | "H_z" => 2 * g + 2,
        "T_st" | "T_is" | "T_it" => 4 * g + 2,
        _ => return None,
    })
}

fn pow2(k: usize) -> BigUint {
    BigUint::from(1u32) << k
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OrderCheck {
    pub check: String,
    pub expected: BigUint,
    pub computed: BigUint,
    pub holds: bool,
}

impl OrderCheck {
    fn new(check: impl Into<String>, expected: BigUint, computed: BigUint) -> Self {
        let holds = expected == computed;
        OrderCheck {
            check: check.into(),
            expected,
            computed,
            holds,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecompositionReport {
    pub case: CaseTag,
    pub g: usize,
    pub idempotents: IdentityReport,
    pub orders: Vec<OrderCheck>,
}

impl DecompositionReport {
    pub fn all_hold(&self) -> bool {
        self.idempotents.all_hold() && self.orders.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &OrderCheck> {
        self.orders.iter().filter(|c| !c.holds)
    }
}

/// Every generator table available for the tower, by node name.
pub fn embedded_tables(tower: &Tower) -> Result<Vec<(String, TwoTorsionSubgroup)>> {
    let names: Vec<&str> = match tower.case {
        CaseTag::Branched12 | CaseTag::Mixed4 => BRANCHED_TABLES.to_vec(),
        CaseTag::EtaleKlein => vec!["H_x", "H_y", "H_z"],
        CaseTag::Mixed8 => vec!["H", "H_y", "H_z"],
        _ => return Err(Error::UnsupportedNode(format!("{} towers have no Klein tables", tower.case))),
    };
    names
        .into_iter()
        .map(|n| Ok((n.to_string(), embed_2torsion(tower, n)?)))
        .collect()
}

/// Largest rank for which intersections are also counted by enumeration.
const BRUTE_FORCE_RANK: usize = 12;

/// Check the idempotent identities and the order facts of `tables`.
pub fn check_tables(tower: &Tower, tables: &[(String, TwoTorsionSubgroup)]) -> Result<DecompositionReport> {
    let g = tower.g;
    let find = |n: &str| {
        tables
            .iter()
            .find(|t| t.0 == n)
            .map(|t| &t.1)
            .ok_or_else(|| Error::InvalidDatum(format!("no table for {n}")))
    };
    let mut orders = Vec::new();
    let decomposition = match tower.case {
        CaseTag::Branched12 | CaseTag::Mixed4 => {
            for (name, grp) in tables {
                if let Some(k) = expected_log2(name, g) {
                    orders.push(OrderCheck::new(format!("|{name}[2]|"), pow2(k), grp.order()));
                }
            }
            let triple = find("H_x")?.intersect(find("H_y")?)?.intersect(find("H_z")?)?;
            orders.push(OrderCheck::new("|H_x ∩ H_y ∩ H_z|", pow2(2 * g + 1), triple.order()));
            for (i, (na, a)) in tables.iter().enumerate() {
                for (nb, b) in &tables[i + 1..] {
                    let meet = a.intersect(b)?;
                    let join = a.sum(b)?;
                    orders.push(OrderCheck::new(
                        format!("|{na} + {nb}|·|{na} ∩ {nb}| = |{na}|·|{nb}|"),
                        a.order() * b.order(),
                        join.order() * meet.order(),
                    ));
                    if a.rank() <= BRUTE_FORCE_RANK {
                        let mut count = 0usize;
                        for e in a.elements() {
                            if b.member(&e)? {
                                count += 1;
                            }
                        }
                        orders.push(OrderCheck::new(
                            format!("#{{v ∈ {na} : v ∈ {nb}}}"),
                            meet.order(),
                            BigUint::from(count),
                        ));
                    }
                }
            }
            KleinDecomposition::Branched
        }
        CaseTag::EtaleKlein | CaseTag::Mixed8 => {
            let mut common: Option<TwoTorsionSubgroup> = None;
            for (name, grp) in tables {
                orders.push(OrderCheck::new(format!("|image of {name}[2]|"), pow2(2 * g - 2), grp.order()));
                common = Some(match common {
                    None => grp.clone(),
                    Some(c) => c.intersect(grp)?,
                });
            }
            let common = common.ok_or_else(|| Error::InvalidDatum("no tables".into()))?;
            orders.push(OrderCheck::new("|G_P|", pow2(2 * g - 2), common.order()));
            let k = addition_kernel(tower)?;
            orders.push(OrderCheck::new("deg ψ", pow2(4 * g - 4), k.psi_degree));
            KleinDecomposition::Etale
        }
        _ => return Err(Error::UnsupportedNode(format!("{} towers have no Klein tables", tower.case))),
    };
    Ok(DecompositionReport {
        case: tower.case,
        g,
        idempotents: verify_decomposition(decomposition),
        orders,
    })
}

/// Certify the group-ring decomposition and the 2-torsion lattice facts.
pub fn decomposition_check(tower: &Tower) -> Result<DecompositionReport> {
    check_tables(tower, &embedded_tables(tower)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub label: String,
    pub point: ProjPoint,
}

/// A hyperelliptic curve known only through its Weierstrass points on P¹.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constituent {
    pub name: String,
    pub genus: u64,
    pub branch: Vec<BranchPoint>,
}

impl Constituent {
    pub fn point_of(&self, label: &str) -> Option<&ProjPoint> {
        self.branch.iter().find(|b| b.label == label).map(|b| &b.point)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlueKind {
    /// The labels have the same nonzero image in the top Jacobian.
    CommonImage,
    /// The labels have zero image but lie over the same branch point of the
    /// tower.
    SamePoint,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Member {
    pub constituent: usize,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GluingClass {
    pub kind: GlueKind,
    pub members: Vec<Member>,
}

/// The Klein subgroup of `JH[2]` killed by the étale 4:1 pullback to the top
/// curve (mixed8 only), as two generating label subsets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelV4 {
    pub constituent: usize,
    pub generators: [Vec<String>; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrymDatum {
    pub schema: String,
    pub case: CaseTag,
    pub g: usize,
    pub pol_type: Vec<u32>,
    pub constituents: Vec<Constituent>,
    pub gluing: Vec<GluingClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v4: Option<KernelV4>,
}

impl PrymDatum {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("datum serializes")
    }

    pub fn from_json(s: &str) -> Result<PrymDatum> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn classes_of(&self, kind: GlueKind) -> impl Iterator<Item = &GluingClass> {
        self.gluing.iter().filter(move |c| c.kind == kind)
    }
}

/// Present a class by the smaller of its two representing subsets.
fn short_labels(c: &TwoTorsionClass) -> Vec<String> {
    let u = c.universe();
    let rep: Vec<usize> = c.indices();
    let comp: Vec<usize> = c.complement_rep().ones().collect();
    let pick = if comp.len() < rep.len() { comp } else { rep };
    pick.into_iter().map(|i| u.label(i).to_string()).collect()
}

/// The symbolic Prym datum of a Klein tower; with `scramble`, every
/// constituent is moved by its own pseudorandom Möbius map and label
/// permutation, and the constituents are shuffled.
pub fn prym_datum(tower: &Tower, scramble: Option<u64>) -> Result<PrymDatum> {
    let (nodes, _) = constituent_nodes(tower.case)?;
    let top = tower.top().name.clone();
    let mut constituents = Vec::new();
    let mut common: Vec<(Vec<usize>, Vec<Member>)> = Vec::new();
    let mut same: Vec<(ProjPoint, Vec<Member>)> = Vec::new();
    for (j, name) in nodes.iter().enumerate() {
        let node = tower.node(name)?;
        let labels = node.labels.clone().unwrap_or_default();
        let branch = labels
            .iter()
            .map(|l| {
                let point = node
                    .branch_image
                    .get(l)
                    .cloned()
                    .ok_or_else(|| Error::InvalidCover(format!("{name}: no branch point for {l}")))?;
                Ok(BranchPoint { label: l.clone(), point })
            })
            .collect::<Result<Vec<_>>>()?;
        let map = tower.composite(&top, name)?;
        for (i, fate) in map.fates().iter().enumerate() {
            let member = Member {
                constituent: j,
                label: labels[i].clone(),
            };
            match fate {
                Fate::Fiber(f) => {
                    let mut key = f.clone();
                    key.sort_unstable();
                    match common.iter_mut().find(|c| c.0 == key) {
                        Some(c) => c.1.push(member),
                        None => common.push((key, vec![member])),
                    }
                }
                Fate::Trivial => {
                    let p = branch[i].point.clone();
                    match same.iter_mut().find(|c| c.0 == p) {
                        Some(c) => c.1.push(member),
                        None => same.push((p, vec![member])),
                    }
                }
                Fate::Unknown => {
                    return Err(Error::InvalidCover(format!("{name}: label {} has unknown pullback", labels[i])))
                }
            }
        }
        constituents.push(Constituent {
            name: name.to_string(),
            genus: node.genus,
            branch,
        });
    }
    let mut gluing: Vec<GluingClass> = common
        .into_iter()
        .filter(|c| c.1.len() > 1)
        .map(|c| GluingClass {
            kind: GlueKind::CommonImage,
            members: c.1,
        })
        .collect();
    gluing.extend(same.into_iter().filter(|c| c.1.len() > 1).map(|c| GluingClass {
        kind: GlueKind::SamePoint,
        members: c.1,
    }));

    let v4 = if tower.case == CaseTag::Mixed8 {
        let map = tower.composite(&top, nodes[0])?;
        let mut kernel = Vec::new();
        for c in map.base().full_group().elements() {
            if !c.is_zero() && map.pullback(&c)?.is_zero() {
                kernel.push(short_labels(&c));
            }
        }
        kernel.sort();
        if kernel.len() != 3 {
            return Err(Error::InvalidCover(format!("pullback kernel has {} nonzero classes", kernel.len())));
        }
        Some(KernelV4 {
            constituent: 0,
            generators: [kernel[0].clone(), kernel[1].clone()],
        })
    } else {
        None
    };

    let datum = PrymDatum {
        schema: PRYM_SCHEMA.to_string(),
        case: tower.case,
        g: tower.g,
        pol_type: polarisation_type(tower.case, tower.g)?,
        constituents,
        gluing,
        v4,
    };
    Ok(match scramble {
        Some(seed) => scramble_datum(&datum, seed),
        None => datum,
    })
}

/// Move each constituent by its own Möbius map and label permutation, drawn
/// from stream `k + 1` of the seed; stream 0 shuffles the constituents.
pub fn scramble_datum(d: &PrymDatum, seed: u64) -> PrymDatum {
    let n = d.constituents.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    // order[new] = old
    let mut new_index = vec![0; n];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    let mut renames: Vec<BTreeMap<String, String>> = Vec::with_capacity(n);
    let mut moved = Vec::with_capacity(n);
    for (k, c) in d.constituents.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64 + 1);
        let m = random_mobius(&mut rng);
        let mut perm: Vec<usize> = (0..c.branch.len()).collect();
        perm.shuffle(&mut rng);
        let mut rename = BTreeMap::new();
        let branch = perm
            .iter()
            .enumerate()
            .map(|(i, &old)| {
                let label = format!("p{i}");
                rename.insert(c.branch[old].label.clone(), label.clone());
                BranchPoint {
                    label,
                    point: m.apply(&c.branch[old].point),
                }
            })
            .collect();
        renames.push(rename);
        moved.push(Constituent {
            name: format!("c{}", new_index[k]),
            genus: c.genus,
            branch,
        });
    }
    let constituents = order.iter().map(|&old| moved[old].clone()).collect();
    let mut gluing: Vec<GluingClass> = d
        .gluing
        .iter()
        .map(|cl| {
            let mut members: Vec<Member> = cl
                .members
                .iter()
                .map(|m| Member {
                    constituent: new_index[m.constituent],
                    label: renames[m.constituent][&m.label].clone(),
                })
                .collect();
            members.sort();
            GluingClass { kind: cl.kind, members }
        })
        .collect();
    gluing.sort();
    let v4 = d.v4.as_ref().map(|v| {
        let r = &renames[v.constituent];
        let gens = v.generators.clone().map(|s| {
            let mut s: Vec<String> = s.iter().map(|l| r[l].clone()).collect();
            s.sort();
            s
        });
        KernelV4 {
            constituent: new_index[v.constituent],
            generators: gens,
        }
    });
    PrymDatum {
        constituents,
        gluing,
        v4,
        ..d.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projline::{equivalent, MarkedConfig, Role};
    use crate::towers::{build_tower, standard_config};

    fn tower(case: CaseTag, g: usize) -> Tower {
        build_tower(&standard_config(case, g), case).unwrap()
    }

    fn order(s: &TwoTorsionSubgroup) -> u64 {
        u64::try_from(s.order()).unwrap()
    }

    #[test]
    fn branched_orders_at_genus_one() {
        let t = tower(CaseTag::Branched12, 1);
        assert_eq!(order(&embed_2torsion(&t, "E").unwrap()), 4);
        for n in ["H_x", "H_y", "H_z"] {
            assert_eq!(order(&embed_2torsion(&t, n).unwrap()), 16);
        }
        for n in ["T_st", "T_is", "T_it"] {
            assert_eq!(order(&embed_2torsion(&t, n).unwrap()), 64);
        }
        assert_eq!(order(&triple_intersection(&t).unwrap()), 8);
        assert_eq!(order(&gluing_group(&t).unwrap()), 8);
    }

    #[test]
    fn branched_orders_up_to_genus_four() {
        for g in 1..=4 {
            for case in [CaseTag::Branched12, CaseTag::Mixed4] {
                let t = tower(case, g);
                assert_eq!(embed_2torsion(&t, "E").unwrap().rank(), 2 * g);
                for n in ["H_x", "H_y", "H_z"] {
                    assert_eq!(embed_2torsion(&t, n).unwrap().rank(), 2 * g + 2);
                }
                for n in ["T_st", "T_is", "T_it"] {
                    assert_eq!(embed_2torsion(&t, n).unwrap().rank(), 4 * g + 2);
                }
                assert_eq!(triple_intersection(&t).unwrap().rank(), 2 * g + 1);
                assert_eq!(gluing_group(&t).unwrap().rank(), 2 * g + 1);
            }
        }
    }

    #[test]
    fn triple_intersection_membership() {
        for g in 1..=3 {
            let t = tower(CaseTag::Branched12, g);
            let u = top_universe(&t).unwrap();
            let inter = triple_intersection(&t).unwrap();
            let b1 = class_from_subset(u, &["(1,1)", "(1,t)", "(1,s)", "(1,st)"]).unwrap();
            assert!(inter.member(&b1).unwrap());
            let expected = branched_je(&t).unwrap().sum(&TwoTorsionSubgroup::span(u, &[b1]).unwrap()).unwrap();
            assert_eq!(inter, expected);
            for n in ["H_x", "H_y", "H_z"] {
                let q = q_class(&t, n, &[]).unwrap();
                assert!(!inter.member(&q).unwrap(), "{n}");
            }
        }
    }

    #[test]
    fn every_q_choice_lies_in_its_table() {
        let t = tower(CaseTag::Branched12, 1);
        for n in ["H_x", "H_y", "H_z"] {
            let table = embed_2torsion(&t, n).unwrap();
            for bits in 0..16u32 {
                let choice: Vec<bool> = (0..4).map(|k| bits >> k & 1 == 1).collect();
                assert!(table.member(&q_class(&t, n, &choice).unwrap()).unwrap());
            }
        }
    }

    /// Oracle: the tables for E and the T curves are the pullbacks of their
    /// full 2-torsion along the composite cover, which is ramified and so
    /// injective on 2-torsion.
    #[test]
    fn tables_match_pullbacks_for_ramified_quotients() {
        for g in 1..=3 {
            let t = tower(CaseTag::Branched12, g);
            for n in ["E", "T_st", "T_is", "T_it"] {
                let map = t.composite("Ctilde", n).unwrap();
                let pulled = map.pullback_group(&map.base().full_group()).unwrap();
                assert_eq!(pulled, embed_2torsion(&t, n).unwrap(), "{n}, g = {g}");
            }
        }
    }

    /// Oracle for the Q-type classes. With π: T → H étale of class η, the
    /// 2-torsion of π*JH is π*JH[2] together with every a ∈ JT[2] whose norm
    /// is η (counting shows both sets have 2^{2g+1} elements, and the second
    /// must contain the points a = π*y with 2y = η). Pulling that up to the
    /// top curve must give the table.
    #[test]
    fn h_tables_match_norm_preimages() {
        for g in 1..=2 {
            let t = tower(CaseTag::Branched12, g);
            for (h, tn) in [("H_x", "T_st"), ("H_y", "T_is"), ("H_z", "T_it")] {
                let edge = t.edge(tn, h).unwrap();
                let eta = t.defining_class(edge).unwrap().expect("étale edge");
                let map = edge.label_map().unwrap();
                let mut a2 = map.pullback_group(&map.base().full_group()).unwrap();
                assert_eq!(a2.rank(), 2 * g + 1);
                let mut preimages = 0;
                for a in map.cover().full_group().elements() {
                    if map.norm(&a).unwrap() == eta {
                        a2.insert(&a).unwrap();
                        preimages += 1;
                    }
                }
                assert_eq!(preimages, 1 << (2 * g + 1));
                let up = t.composite("Ctilde", tn).unwrap();
                let pulled = up.pullback_group(&a2).unwrap();
                assert_eq!(pulled, embed_2torsion(&t, h).unwrap(), "{h}, g = {g}");
            }
        }
    }

    #[test]
    fn etale_gluing_group_orders() {
        for (g, expected) in [(2, 4u64), (3, 16), (4, 64)] {
            let t = tower(CaseTag::EtaleKlein, g);
            assert_eq!(order(&gluing_group(&t).unwrap()), expected);
            // Oracle: intersection of the pullbacks of the full 2-torsion.
            let mut acc: Option<TwoTorsionSubgroup> = None;
            for n in ["H_x", "H_y", "H_z"] {
                let map = t.composite("Ctilde", n).unwrap();
                let p = map.pullback_group(&map.base().full_group()).unwrap();
                assert_eq!(p, embed_2torsion(&t, n).unwrap());
                acc = Some(match acc {
                    None => p,
                    Some(a) => a.intersect(&p).unwrap(),
                });
            }
            assert_eq!(acc.unwrap(), gluing_group(&t).unwrap());
        }
    }

    #[test]
    fn addition_kernel_degrees() {
        // 4^{2g−2}: 16 at g = 2, 256 at g = 3.
        let k = addition_kernel(&tower(CaseTag::EtaleKlein, 2)).unwrap();
        assert_eq!(k.psi_degree, BigUint::from(16u32));
        let k = addition_kernel(&tower(CaseTag::EtaleKlein, 3)).unwrap();
        assert_eq!(k.psi_degree, BigUint::from(256u32));
        let k = addition_kernel(&tower(CaseTag::Mixed8, 2)).unwrap();
        assert_eq!((k.psi_degree, k.pi_p_degree), (BigUint::from(16u32), BigUint::from(4u32)));
        for g in 2..=4 {
            let k = addition_kernel(&tower(CaseTag::EtaleKlein, g)).unwrap();
            let gp = gluing_group(&tower(CaseTag::EtaleKlein, g)).unwrap().order();
            assert_eq!(k.psi_degree, &gp * &gp);
        }
        assert!(addition_kernel(&tower(CaseTag::Branched12, 1)).is_err());
    }

    #[test]
    fn polarisation_examples() {
        assert_eq!(polarisation_type(CaseTag::EtaleKlein, 2).unwrap(), vec![1, 1, 4]);
        assert_eq!(polarisation_type(CaseTag::Branched12, 1).unwrap(), vec![1, 1, 1, 1, 1, 4]);
        assert_eq!(polarisation_type(CaseTag::Mixed4, 1).unwrap(), vec![1, 1, 1, 2, 4]);
        assert_eq!(polarisation_type(CaseTag::Mixed8, 2).unwrap(), vec![1, 1, 1, 4]);
        assert!(polarisation_type(CaseTag::EtaleKlein, 1).is_err());
        assert!(polarisation_type(CaseTag::B2Double, 3).is_err());
    }

    #[test]
    fn polarisation_length_is_prym_dimension() {
        for case in [CaseTag::EtaleKlein, CaseTag::Mixed8, CaseTag::Branched12, CaseTag::Mixed4] {
            let min = if matches!(case, CaseTag::EtaleKlein | CaseTag::Mixed8) { 2 } else { 1 };
            for g in min..=4 {
                let t = tower(case, g);
                let d = polarisation_type(case, g).unwrap();
                assert_eq!(d.len() as u64, prym_dimension(&t).unwrap(), "{case} g = {g}");
            }
        }
    }

    fn branch_set(c: &Constituent) -> Vec<ProjPoint> {
        let mut v: Vec<ProjPoint> = c.branch.iter().map(|b| b.point.clone()).collect();
        v.sort();
        v
    }

    fn ints(v: &[i64]) -> Vec<ProjPoint> {
        let mut v: Vec<ProjPoint> = v.iter().map(|&i| ProjPoint::int(i)).collect();
        v.sort();
        v
    }

    #[test]
    fn etale_datum_example() {
        let d = prym_datum(&tower(CaseTag::EtaleKlein, 2), None).unwrap();
        let sets: Vec<_> = d.constituents.iter().map(branch_set).collect();
        assert_eq!(sets, vec![ints(&[3, 0, 1, 2]), ints(&[4, 0, 1, 2]), ints(&[5, 0, 1, 2])]);
        assert!(d.constituents.iter().all(|c| c.genus == 1));
        assert_eq!(d.gluing.len(), 3);
        for (n, cl) in d.gluing.iter().enumerate() {
            assert_eq!(cl.kind, GlueKind::CommonImage);
            assert_eq!(cl.members.len(), 3);
            assert!(cl.members.iter().all(|m| m.label == format!("[{}]", n + 1)));
        }
        assert_eq!(d.pol_type, vec![1, 1, 4]);
        assert!(d.v4.is_none());
    }

    #[test]
    fn branched_datum_example() {
        let d = prym_datum(&tower(CaseTag::Branched12, 1), None).unwrap();
        let sets: Vec<_> = d.constituents.iter().map(branch_set).collect();
        assert_eq!(
            sets,
            vec![ints(&[0, 1, 2, 3, 5, 6]), ints(&[0, 1, 2, 3, 4, 6]), ints(&[0, 1, 2, 3, 4, 5])]
        );
        assert_eq!(d.classes_of(GlueKind::CommonImage).count(), 4);
        assert!(d.classes_of(GlueKind::CommonImage).all(|c| c.members.len() == 3));
        let extras: Vec<_> = d.classes_of(GlueKind::SamePoint).collect();
        assert_eq!(extras.len(), 3);
        for c in extras {
            assert_eq!(c.members.len(), 2);
            assert_eq!(c.members[0].label, c.members[1].label);
        }
    }

    #[test]
    fn datum_shapes_for_all_cases() {
        for g in 1..=4 {
            for case in [CaseTag::EtaleKlein, CaseTag::Mixed8, CaseTag::Branched12, CaseTag::Mixed4] {
                if g < 2 && matches!(case, CaseTag::EtaleKlein | CaseTag::Mixed8) {
                    continue;
                }
                let d = prym_datum(&tower(case, g), None).unwrap();
                let genera: Vec<u64> = d.constituents.iter().map(|c| c.genus).collect();
                let g = g as u64;
                let (want, common, same) = match case {
                    CaseTag::EtaleKlein => (vec![g - 1, g - 1, g - 1], 2 * g - 1, 0),
                    CaseTag::Mixed8 => (vec![g, g - 1, g - 1], 2 * g - 1, 2),
                    CaseTag::Branched12 => (vec![g + 1, g + 1, g + 1], 2 * g + 2, 3),
                    _ => (vec![g, g + 1, g + 1], 2 * g + 2, 1),
                };
                assert_eq!(genera, want, "{case}");
                assert_eq!(d.classes_of(GlueKind::CommonImage).count() as u64, common, "{case}");
                assert_eq!(d.classes_of(GlueKind::SamePoint).count() as u64, same, "{case}");
                assert_eq!(d.v4.is_some(), case == CaseTag::Mixed8);
            }
        }
    }

    #[test]
    fn mixed8_kernel_is_the_triple_klein_group() {
        let d = prym_datum(&tower(CaseTag::Mixed8, 2), None).unwrap();
        let v4 = d.v4.unwrap();
        assert_eq!(v4.constituent, 0);
        assert_eq!(v4.generators, [vec!["[x]".to_string(), "[y]".into()], vec!["[x]".into(), "[z]".into()]]);
    }

    fn as_config(c: &Constituent) -> MarkedConfig {
        let mut m = MarkedConfig::new(c.branch.iter().map(|b| b.point.clone()).collect());
        for i in 0..c.branch.len() {
            m.add_role(i, Role::W(i as u32 + 1));
        }
        m
    }

    #[test]
    fn scrambling_is_an_equivalence() {
        for case in [CaseTag::EtaleKlein, CaseTag::Mixed8, CaseTag::Branched12, CaseTag::Mixed4] {
            let t = tower(case, 2);
            let plain = prym_datum(&t, None).unwrap();
            let mixed = prym_datum(&t, Some(17)).unwrap();
            assert_eq!(mixed, prym_datum(&t, Some(17)).unwrap());
            assert_ne!(mixed, prym_datum(&t, Some(18)).unwrap());
            assert_eq!(mixed.gluing.len(), plain.gluing.len());
            for c in &mixed.constituents {
                assert!(plain
                    .constituents
                    .iter()
                    .any(|p| p.genus == c.genus && equivalent(&as_config(p), &as_config(c)).is_some()));
            }
        }
    }

    #[test]
    fn datum_json_round_trip() {
        let d = prym_datum(&tower(CaseTag::Mixed8, 3), Some(5)).unwrap();
        assert_eq!(PrymDatum::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn decomposition_reports_hold() {
        for (case, g) in [
            (CaseTag::Branched12, 1),
            (CaseTag::Branched12, 2),
            (CaseTag::Mixed4, 1),
            (CaseTag::EtaleKlein, 2),
            (CaseTag::EtaleKlein, 3),
            (CaseTag::Mixed8, 2),
        ] {
            let r = decomposition_check(&tower(case, g)).unwrap();
            assert!(r.all_hold(), "{case} g = {g}: {:?}", r.failures().collect::<Vec<_>>());
            assert_eq!(r.idempotents.checks.len(), 11);
        }
    }

    #[test]
    fn branched_report_orders_at_genus_one() {
        let r = decomposition_check(&tower(CaseTag::Branched12, 1)).unwrap();
        let orders: Vec<u64> = r.orders[..7].iter().map(|c| u64::try_from(&c.computed).unwrap()).collect();
        assert_eq!(orders, vec![4, 16, 16, 16, 64, 64, 64]);
        assert_eq!(r.orders[7].computed, BigUint::from(8u32));
    }

    #[test]
    fn tampered_table_is_flagged() {
        let t = tower(CaseTag::Branched12, 1);
        let mut tables = embedded_tables(&t).unwrap();
        let u = top_universe(&t).unwrap().clone();
        let gens = tables[4].1.generators();
        tables[4].1 = TwoTorsionSubgroup::span(&u, &gens[1..]).unwrap();
        let r = check_tables(&t, &tables).unwrap();
        assert!(!r.all_hold());
        assert!(r.failures().any(|c| c.check == "|T_st[2]|"));
    }

    #[test]
    fn unsupported_nodes() {
        let t = tower(CaseTag::EtaleKlein, 2);
        assert!(matches!(embed_2torsion(&t, "C_x"), Err(Error::UnsupportedNode(_))));
        assert!(matches!(triple_intersection(&t), Err(Error::UnsupportedNode(_))));
        let t = tower(CaseTag::Branched12, 1);
        assert!(matches!(embed_2torsion(&t, "C_s"), Err(Error::UnsupportedNode(_))));
        let t = tower(CaseTag::B4Double, 2);
        assert!(prym_datum(&t, None).is_err());
    }
}
