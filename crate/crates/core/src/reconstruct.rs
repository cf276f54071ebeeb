//! Inverse Prym maps: rebuild the marked configuration on P¹ from a Prym
//! datum by aligning the constituent curves along their glued Weierstrass
//! points, then confirm by running the forward construction again. Also the
//! double-cover counterexamples: b2 covers sharing a Prym, and the fiber of
//! b4 covers over one Prym.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::projline::{equivalent, mobius_from_triples, random_distinct_points, MarkedConfig, Mobius, ProjPoint, Role};
use crate::prym::{polarisation_type, prym_datum, Constituent, GlueKind, GluingClass, Member, PrymDatum};
use crate::torsion::{class_from_subset, TwoTorsionClass, TwoTorsionSubgroup, WUniverse};
use crate::towers::{
    build_tower, check_b2_hyperelliptic, check_etale_hyperelliptic, random_config, standard_config, CaseTag,
    EdgeKind, Tower,
};

#[derive(Clone, Debug, Serialize)]
pub struct Alignment {
    pub constituent: usize,
    /// Carries the constituent's coordinates onto the reconstructed ones.
    pub mobius: Mobius,
    /// Datum label → index of its image in the reconstructed configuration.
    pub labels: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Step {
    pub step: String,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionResult {
    pub case: CaseTag,
    pub config: MarkedConfig,
    pub alignment: Vec<Alignment>,
    pub certificate: Vec<Step>,
}

fn reject(msg: impl Into<String>) -> Error {
    Error::NotInPrymImage(msg.into())
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidDatum(msg.into())
}

/// Constituent genera in forward order, and how many common-image classes
/// the datum must have.
fn shape(case: CaseTag, g: u64) -> Result<([u64; 3], usize)> {
    Ok(match case {
        CaseTag::EtaleKlein => ([g - 1, g - 1, g - 1], 2 * g as usize - 1),
        CaseTag::Mixed8 => ([g, g - 1, g - 1], 2 * g as usize - 1),
        CaseTag::Branched12 => ([g + 1, g + 1, g + 1], 2 * g as usize + 2),
        CaseTag::Mixed4 => ([g, g + 1, g + 1], 2 * g as usize + 2),
        _ => return Err(invalid(format!("{case} has no Prym inverse"))),
    })
}

struct Aligned {
    reference: usize,
    maps: Vec<Mobius>,
    /// Reconstructed point of each common-image class, in datum order.
    common: Vec<ProjPoint>,
    /// Label → class index, per constituent.
    common_of: Vec<BTreeMap<String, usize>>,
    /// Unglued labels per constituent with their aligned points.
    leftovers: Vec<Vec<(String, ProjPoint)>>,
    /// Same-point classes as (constituent, label) pairs, validated.
    same: Vec<Vec<(usize, String)>>,
    steps: Vec<Step>,
}

impl Aligned {
    fn leftover_point(&self, c: usize, label: &str) -> &ProjPoint {
        &self.leftovers[c].iter().find(|l| l.0 == label).expect("validated leftover").1
    }
}

fn check_constituent(k: usize, c: &Constituent) -> Result<()> {
    if c.branch.len() as u64 != 2 * c.genus + 2 {
        return Err(invalid(format!(
            "constituent {k} has genus {} but {} branch points",
            c.genus,
            c.branch.len()
        )));
    }
    let labels: BTreeSet<&str> = c.branch.iter().map(|b| b.label.as_str()).collect();
    let points: BTreeSet<&ProjPoint> = c.branch.iter().map(|b| &b.point).collect();
    if labels.len() != c.branch.len() || points.len() != c.branch.len() {
        return Err(invalid(format!("constituent {k} repeats a label or a branch point")));
    }
    Ok(())
}

/// Validate the datum and align every constituent with the reference one.
fn align(d: &PrymDatum, case: CaseTag) -> Result<Aligned> {
    if d.case != case {
        return Err(invalid(format!("datum is {}, expected {case}", d.case)));
    }
    let min = if matches!(case, CaseTag::EtaleKlein | CaseTag::Mixed8) { 2 } else { 1 };
    if d.g < min {
        return Err(invalid(format!("{case} needs g ≥ {min}")));
    }
    if d.pol_type != polarisation_type(case, d.g)? {
        return Err(invalid(format!("polarisation type {:?} does not match {case} at g = {}", d.pol_type, d.g)));
    }
    if d.constituents.len() != 3 {
        return Err(invalid(format!("{} constituents, expected 3", d.constituents.len())));
    }
    for (k, c) in d.constituents.iter().enumerate() {
        check_constituent(k, c)?;
    }
    let (genera, n_common) = shape(case, d.g as u64)?;
    let mut have: Vec<u64> = d.constituents.iter().map(|c| c.genus).collect();
    let mut want = genera.to_vec();
    have.sort_unstable();
    want.sort_unstable();
    if have != want {
        return Err(invalid(format!("constituent genera {have:?}, expected {want:?}")));
    }
    let reference = match case {
        CaseTag::Mixed8 | CaseTag::Mixed4 => d
            .constituents
            .iter()
            .position(|c| c.genus == d.g as u64)
            .expect("genera checked"),
        _ => 0,
    };

    let mut used: BTreeSet<(usize, &str)> = BTreeSet::new();
    for cl in &d.gluing {
        for m in &cl.members {
            if m.constituent >= 3 || d.constituents[m.constituent].point_of(&m.label).is_none() {
                return Err(invalid(format!("gluing refers to unknown label {:?} of constituent {}", m.label, m.constituent)));
            }
            if !used.insert((m.constituent, m.label.as_str())) {
                return Err(reject(format!("label {} of constituent {} is glued twice", m.label, m.constituent)));
            }
        }
    }
    let common: Vec<&GluingClass> = d.gluing.iter().filter(|c| c.kind == GlueKind::CommonImage).collect();
    for (k, cl) in common.iter().enumerate() {
        let cs: BTreeSet<usize> = cl.members.iter().map(|m| m.constituent).collect();
        if cl.members.len() != 3 || cs.len() != 3 {
            return Err(reject(format!("common-image class {k} does not meet each constituent once")));
        }
    }
    if common.len() != n_common {
        return Err(reject(format!(
            "{} common-image classes, but {case} at g = {} needs {n_common}",
            common.len(),
            d.g
        )));
    }
    let mut steps = vec![Step {
        step: "validate".into(),
        detail: format!("genera {want:?}, {n_common} common-image classes, δ = {:?}", d.pol_type),
    }];

    let label_in = |cl: &GluingClass, c: usize| -> String {
        cl.members.iter().find(|m| m.constituent == c).expect("checked").label.clone()
    };
    let point = |c: usize, l: &str| d.constituents[c].point_of(l).expect("checked").clone();
    let mut maps = Vec::with_capacity(3);
    for c in 0..3 {
        if c == reference {
            maps.push(Mobius::identity());
            continue;
        }
        let src: Vec<ProjPoint> = common[..3].iter().map(|cl| point(c, &label_in(cl, c))).collect();
        let dst: Vec<ProjPoint> = common[..3].iter().map(|cl| point(reference, &label_in(cl, reference))).collect();
        let m = mobius_from_triples([&src[0], &src[1], &src[2]], [&dst[0], &dst[1], &dst[2]])?;
        for (k, cl) in common.iter().enumerate() {
            let got = m.apply(&point(c, &label_in(cl, c)));
            let want = point(reference, &label_in(cl, reference));
            if got != want {
                return Err(reject(format!(
                    "constituent {c} anchored on classes 0, 1, 2 sends class {k} to {got}, not {want}"
                )));
            }
        }
        steps.push(Step {
            step: "align".into(),
            detail: format!("constituent {c} onto constituent {reference} by {m}, anchored on classes 0, 1, 2; all {n_common} classes agree"),
        });
        maps.push(m);
    }
    let common_points: Vec<ProjPoint> = common.iter().map(|cl| point(reference, &label_in(cl, reference))).collect();
    let mut common_of = vec![BTreeMap::new(); 3];
    for (k, cl) in common.iter().enumerate() {
        for m in &cl.members {
            common_of[m.constituent].insert(m.label.clone(), k);
        }
    }
    let mut leftovers = Vec::with_capacity(3);
    for c in 0..3 {
        let mut left = Vec::new();
        for b in &d.constituents[c].branch {
            if common_of[c].contains_key(&b.label) {
                continue;
            }
            let p = maps[c].apply(&b.point);
            if common_points.contains(&p) {
                return Err(reject(format!(
                    "unglued label {} of constituent {c} lands on a glued point {p}",
                    b.label
                )));
            }
            left.push((b.label.clone(), p));
        }
        leftovers.push(left);
    }
    let mut same = Vec::new();
    for cl in d.gluing.iter().filter(|c| c.kind == GlueKind::SamePoint) {
        let cs: BTreeSet<usize> = cl.members.iter().map(|m| m.constituent).collect();
        if cl.members.len() < 2 || cs.len() != cl.members.len() {
            return Err(reject("a same-point class must join labels of distinct constituents"));
        }
        let mut pts = BTreeSet::new();
        for m in &cl.members {
            match leftovers[m.constituent].iter().find(|l| l.0 == m.label) {
                Some(l) => pts.insert(l.1.clone()),
                None => return Err(reject(format!("same-point class uses glued label {}", m.label))),
            };
        }
        if pts.len() != 1 {
            let names: Vec<String> = cl.members.iter().map(|m| format!("{}:{}", m.constituent, m.label)).collect();
            return Err(reject(format!(
                "same-point class {{{}}} lands on distinct points after alignment",
                names.join(", ")
            )));
        }
        same.push(cl.members.iter().map(|m| (m.constituent, m.label.clone())).collect());
    }
    Ok(Aligned {
        reference,
        maps,
        common: common_points,
        common_of,
        leftovers,
        same,
        steps,
    })
}

/// Pairs of constituents joined by each same-point class, checked to be
/// exactly `pairs` as a set.
fn same_point_pattern(a: &Aligned, pairs: &[[usize; 2]]) -> Result<()> {
    let mut have: Vec<[usize; 2]> = a
        .same
        .iter()
        .map(|cl| {
            let mut cs: Vec<usize> = cl.iter().map(|m| m.0).collect();
            cs.sort_unstable();
            if cs.len() == 2 {
                Ok([cs[0], cs[1]])
            } else {
                Err(reject("same-point classes must have two members"))
            }
        })
        .collect::<Result<_>>()?;
    have.sort_unstable();
    let mut want = pairs.to_vec();
    want.sort_unstable();
    if have != want {
        return Err(reject(format!(
            "same-point classes join constituent pairs {have:?}, expected one for each of {want:?}"
        )));
    }
    Ok(())
}

fn distinct(points: &[&ProjPoint], what: &str) -> Result<()> {
    let set: BTreeSet<&ProjPoint> = points.iter().copied().collect();
    if set.len() != points.len() {
        return Err(reject(format!("{what} are not distinct")));
    }
    Ok(())
}

/// Assemble the configuration: common points as W₁…, then the extras with
/// their roles, and the per-constituent alignments.
fn finish(
    d: &PrymDatum,
    case: CaseTag,
    a: Aligned,
    extras: Vec<(ProjPoint, Vec<Role>, Vec<(usize, String)>)>,
    mut steps: Vec<Step>,
) -> Result<ReconstructionResult> {
    let mut points = a.common.clone();
    let mut config_roles: Vec<Vec<Role>> = (0..a.common.len()).map(|k| vec![Role::W(k as u32 + 1)]).collect();
    let mut extra_of: BTreeMap<(usize, String), usize> = BTreeMap::new();
    let mut next_w = a.common.len() as u32 + 1;
    for (p, roles, members) in extras {
        let idx = points.len();
        points.push(p);
        let mut rs = Vec::new();
        for r in roles {
            if r == Role::W(0) {
                rs.push(Role::W(next_w));
                next_w += 1;
            } else {
                rs.push(r);
            }
        }
        config_roles.push(rs);
        for m in members {
            extra_of.insert(m, idx);
        }
    }
    let mut config = MarkedConfig::new(points);
    for (i, rs) in config_roles.into_iter().enumerate() {
        for r in rs {
            config.add_role(i, r);
        }
    }
    let mut alignment = Vec::new();
    for (c, m) in a.maps.iter().enumerate() {
        let mut labels = BTreeMap::new();
        for b in &d.constituents[c].branch {
            let idx = match a.common_of[c].get(&b.label) {
                Some(&k) => k,
                None => *extra_of
                    .get(&(c, b.label.clone()))
                    .ok_or_else(|| reject(format!("label {} of constituent {c} was not placed", b.label)))?,
            };
            labels.insert(b.label.clone(), idx);
        }
        alignment.push(Alignment {
            constituent: c,
            mobius: m.clone(),
            labels,
        });
    }
    let mut certificate = a.steps;
    certificate.append(&mut steps);
    certificate.push(verify_rebuild(d, case, &config, &alignment)?);
    Ok(ReconstructionResult {
        case,
        config,
        alignment,
        certificate,
    })
}

type ClassKey = (GlueKind, BTreeSet<(usize, String)>);

fn class_keys(d: &PrymDatum, relabel: impl Fn(usize, &str) -> Option<(usize, String)>) -> Result<BTreeSet<ClassKey>> {
    d.gluing
        .iter()
        .map(|cl| {
            let members = cl
                .members
                .iter()
                .map(|m| relabel(m.constituent, &m.label).ok_or_else(|| reject(format!("label {} has no counterpart", m.label))))
                .collect::<Result<BTreeSet<_>>>()?;
            Ok((cl.kind, members))
        })
        .collect()
}

fn v4_group(u: &std::sync::Arc<WUniverse>, gens: &[Vec<String>; 2]) -> Result<TwoTorsionSubgroup> {
    let classes = gens
        .iter()
        .map(|s| class_from_subset(u, s).map_err(|e| invalid(format!("V₄ generator {s:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    TwoTorsionSubgroup::span(u, &classes)
}

/// Rebuild the tower from `config`, recompute the datum and match it with
/// the input: every constituent must be carried by its alignment onto a
/// rebuilt constituent, and the gluing tables must correspond.
fn verify_rebuild(d: &PrymDatum, case: CaseTag, config: &MarkedConfig, alignment: &[Alignment]) -> Result<Step> {
    let tower = build_tower(config, case).map_err(|e| reject(format!("reconstructed configuration is not a {case} configuration: {e}")))?;
    let fresh = prym_datum(&tower, None)?;
    let mut partner = Vec::new();
    let mut relabel: Vec<BTreeMap<String, String>> = Vec::new();
    for (c, con) in d.constituents.iter().enumerate() {
        let moved: BTreeMap<ProjPoint, &str> = con
            .branch
            .iter()
            .map(|b| (alignment[c].mobius.apply(&b.point), b.label.as_str()))
            .collect();
        let hit = fresh.constituents.iter().position(|f| {
            f.genus == con.genus
                && f.branch.len() == moved.len()
                && f.branch.iter().all(|b| moved.contains_key(&b.point))
        });
        let r = hit.ok_or_else(|| reject(format!("constituent {c} matches no constituent of the rebuilt datum")))?;
        if partner.contains(&r) {
            return Err(reject(format!("constituent {c} matches an already matched rebuilt constituent")));
        }
        partner.push(r);
        relabel.push(
            fresh.constituents[r]
                .branch
                .iter()
                .map(|b| (moved[&b.point].to_string(), b.label.clone()))
                .collect(),
        );
    }
    let mapped = class_keys(d, |c, l| relabel.get(c)?.get(l).map(|x| (partner[c], x.clone())))?;
    let rebuilt = class_keys(&fresh, |c, l| Some((c, l.to_string())))?;
    if mapped != rebuilt {
        return Err(reject("gluing table differs from the one of the rebuilt tower"));
    }
    if let (Some(v), Some(fv)) = (&d.v4, &fresh.v4) {
        let r = partner[v.constituent];
        let labels: Vec<String> = fresh.constituents[r].branch.iter().map(|b| b.label.clone()).collect();
        let u = WUniverse::new(labels)?;
        let moved = v.generators.clone().map(|s| {
            s.iter()
                .map(|l| relabel[v.constituent].get(l).cloned().unwrap_or_default())
                .collect::<Vec<_>>()
        });
        if r != fv.constituent || v4_group(&u, &moved)? != v4_group(&u, &fv.generators)? {
            return Err(reject("V₄ differs from the one of the rebuilt tower"));
        }
    } else if d.v4.is_some() != fresh.v4.is_some() {
        return Err(reject("V₄ presence differs from the rebuilt tower"));
    }
    Ok(Step {
        step: "rebuild".into(),
        detail: format!(
            "forward {case} datum of the reconstructed configuration matches: constituents ↦ {partner:?}, {} gluing classes",
            d.gluing.len()
        ),
    })
}

/// Étale Klein case: the 2g−1 glued points are the shared Weierstrass
/// images, and the one unglued point of each constituent gives the triple.
pub fn invert_etale_klein(d: &PrymDatum) -> Result<ReconstructionResult> {
    let case = CaseTag::EtaleKlein;
    let a = align(d, case)?;
    same_point_pattern(&a, &[])?;
    let left: Vec<&(String, ProjPoint)> = (0..3).map(|c| &a.leftovers[c][0]).collect();
    distinct(&left.iter().map(|l| &l.1).collect::<Vec<_>>(), "the three unglued points")?;
    let roles = [Role::X, Role::Y, Role::Z];
    let extras = (0..3)
        .map(|c| (left[c].1.clone(), vec![Role::W(0), roles[c]], vec![(c, left[c].0.clone())]))
        .collect();
    let steps = vec![Step {
        step: "leftovers".into(),
        detail: format!("unglued points {}, {}, {} become the triple", left[0].1, left[1].1, left[2].1),
    }];
    finish(d, case, a, extras, steps)
}

/// Mixed 4g−3 case: y and z are the extra points of H shared with the other
/// two constituents; x is the unique Weierstrass point of H with
/// V₄ = ⟨x−y, y−z⟩.
pub fn invert_mixed8(d: &PrymDatum) -> Result<ReconstructionResult> {
    let case = CaseTag::Mixed8;
    let a = align(d, case)?;
    let h = a.reference;
    let others: Vec<usize> = (0..3).filter(|&c| c != h).collect();
    same_point_pattern(&a, &[[h.min(others[0]), h.max(others[0])], [h.min(others[1]), h.max(others[1])]])?;
    let partner_label = |o: usize| -> String {
        let cl = a.same.iter().find(|cl| cl.iter().any(|m| m.0 == o)).expect("pattern checked");
        cl.iter().find(|m| m.0 == h).expect("pattern checked").1.clone()
    };
    let (y, z) = (partner_label(others[0]), partner_label(others[1]));

    let v4 = d.v4.as_ref().ok_or_else(|| invalid("mixed8 datum carries no V₄"))?;
    if v4.constituent != h {
        return Err(invalid("V₄ must live on the genus-g constituent"));
    }
    let labels: Vec<String> = d.constituents[h].branch.iter().map(|b| b.label.clone()).collect();
    let u = WUniverse::new(labels.clone())?;
    let group = v4_group(&u, &v4.generators)?;
    if group.rank() != 2 {
        return Err(invalid(format!("V₄ generators span a group of rank {}", group.rank())));
    }
    let pair = |p: &str, q: &str| class_from_subset(&u, &[p, q]);
    let yz = pair(&y, &z)?;
    let mut candidates = Vec::new();
    for x in labels.iter().filter(|l| **l != y && **l != z) {
        let span = TwoTorsionSubgroup::span(&u, &[pair(x, &y)?, yz.clone()])?;
        if span == group {
            candidates.push(x.clone());
        }
    }
    let x = match candidates.as_slice() {
        [x] => x.clone(),
        [] => return Err(reject(format!("no Weierstrass point x of H has V₄ = ⟨x−{y}, {y}−{z}⟩"))),
        _ => return Err(reject(format!("V₄ does not single out x: candidates {candidates:?}"))),
    };
    if a.common_of[h].contains_key(&x) {
        return Err(reject(format!("the point x = {x} solving V₄ is glued to the other constituents")));
    }
    let steps = vec![
        Step {
            step: "leftovers".into(),
            detail: format!("H labels {y}, {z} are shared with constituents {}, {}", others[0], others[1]),
        },
        Step {
            step: "v4".into(),
            detail: format!("x = {x} is the unique solution of V₄ = ⟨x−y, y−z⟩ among {} labels", labels.len()),
        },
    ];
    let member = |l: &str| -> Vec<(usize, String)> {
        let mut ms = vec![(h, l.to_string())];
        for cl in &a.same {
            if cl.iter().any(|m| m.0 == h && m.1 == l) {
                ms = cl.clone();
            }
        }
        ms
    };
    let extras = vec![
        (a.leftover_point(h, &x).clone(), vec![Role::W(0), Role::X, Role::Dist], member(&x)),
        (a.leftover_point(h, &y).clone(), vec![Role::W(0), Role::Y], member(&y)),
        (a.leftover_point(h, &z).clone(), vec![Role::W(0), Role::Z], member(&z)),
    ];
    finish(d, case, a, extras, steps)
}

/// Branched 4g+3 case: each pair of constituents shares exactly one extra
/// point, and the three shared points form the triple.
pub fn invert_branched12(d: &PrymDatum) -> Result<ReconstructionResult> {
    let case = CaseTag::Branched12;
    let a = align(d, case)?;
    same_point_pattern(&a, &[[0, 1], [0, 2], [1, 2]])?;
    let mut extras = Vec::new();
    let mut pts = Vec::new();
    for cl in &a.same {
        let missing = (0..3).find(|c| cl.iter().all(|m| m.0 != *c)).expect("two members");
        let role = [Role::X, Role::Y, Role::Z][missing];
        let p = a.leftover_point(cl[0].0, &cl[0].1).clone();
        pts.push(p.clone());
        extras.push((p, vec![role], cl.clone()));
    }
    distinct(&pts.iter().collect::<Vec<_>>(), "the three shared extra points")?;
    extras.sort_by_key(|e| e.1.clone());
    let steps = vec![Step {
        step: "leftovers".into(),
        detail: format!("pairwise shared extra points {}, {}, {} form the triple", extras[0].0, extras[1].0, extras[2].0),
    }];
    finish(d, case, a, extras, steps)
}

/// Mixed 4g+3 case: of the four extra points of H_y and H_z, exactly two
/// are glued; that point is x, the others are y and z.
pub fn invert_mixed4(d: &PrymDatum) -> Result<ReconstructionResult> {
    let case = CaseTag::Mixed4;
    let a = align(d, case)?;
    let e = a.reference;
    let others: Vec<usize> = (0..3).filter(|&c| c != e).collect();
    same_point_pattern(&a, &[[others[0], others[1]]])?;
    let glued = a.same[0].clone();
    let x = a.leftover_point(glued[0].0, &glued[0].1).clone();
    let rest: Vec<(usize, &(String, ProjPoint))> = others
        .iter()
        .flat_map(|&c| a.leftovers[c].iter().map(move |l| (c, l)))
        .filter(|(c, l)| !glued.iter().any(|m| m.0 == *c && m.1 == l.0))
        .collect();
    if rest.len() != 2 {
        return Err(reject(format!("{} unglued extra points, expected 2", rest.len())));
    }
    distinct(&[&x, &rest[0].1 .1, &rest[1].1 .1], "x and the two remaining extra points")?;
    let steps = vec![Step {
        step: "leftovers".into(),
        detail: format!(
            "glued extra point {x} is x; {} and {} are the other two points of the triple",
            rest[0].1 .1, rest[1].1 .1
        ),
    }];
    let extras = vec![
        (x, vec![Role::X, Role::Dist], glued),
        (rest[0].1 .1.clone(), vec![Role::Y], vec![(rest[0].0, rest[0].1 .0.clone())]),
        (rest[1].1 .1.clone(), vec![Role::Z], vec![(rest[1].0, rest[1].1 .0.clone())]),
    ];
    finish(d, case, a, extras, steps)
}

/// Dispatch on the datum's case.
pub fn invert(d: &PrymDatum) -> Result<ReconstructionResult> {
    match d.case {
        CaseTag::EtaleKlein => invert_etale_klein(d),
        CaseTag::Mixed8 => invert_mixed8(d),
        CaseTag::Branched12 => invert_branched12(d),
        CaseTag::Mixed4 => invert_mixed4(d),
        c => Err(invalid(format!("{c} has no Prym inverse"))),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundTripFailure {
    pub index: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundTripReport {
    pub case: CaseTag,
    pub g: usize,
    pub seed: u64,
    pub count: usize,
    pub equivalent: usize,
    pub failures: Vec<RoundTripFailure>,
}

/// Forward, scramble and invert one configuration; `Ok(())` when the
/// reconstruction is projectively equivalent to `config`.
pub fn round_trip_one(config: &MarkedConfig, case: CaseTag, scramble: u64) -> Result<()> {
    let tower = build_tower(config, case)?;
    let datum = prym_datum(&tower, Some(scramble))?;
    let back = invert(&datum)?;
    if equivalent(&back.config, config).is_none() {
        return Err(reject("reconstruction is not equivalent to the input configuration"));
    }
    Ok(())
}

/// Round trips on `count` random configurations; configuration `i` and its
/// scramble come from stream `i` of `seed`, so the report does not depend on
/// how the work is split across threads.
pub fn round_trip_batch(case: CaseTag, g: usize, count: usize, seed: u64) -> RoundTripReport {
    let outcomes: Vec<(usize, Result<()>)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let config = random_config(&mut rng, case, g);
            let scramble = rand::Rng::gen::<u64>(&mut rng);
            (i, round_trip_one(&config, case, scramble))
        })
        .collect();
    let failures: Vec<RoundTripFailure> = outcomes
        .into_iter()
        .filter_map(|(index, r)| r.err().map(|e| RoundTripFailure { index, reason: e.to_string() }))
        .collect();
    RoundTripReport {
        case,
        g,
        seed,
        count,
        equivalent: count - failures.len(),
        failures,
    }
}

/// Label-free inverse for g ≤ 2: ignore the gluing table, search all Möbius
/// maps carrying three branch points of each constituent onto three of the
/// reference constituent, rebuild the gluing from coincidences, and return
/// every distinct configuration that survives the labeled inverse.
pub fn invert_label_free(d: &PrymDatum) -> Result<Vec<ReconstructionResult>> {
    if d.g > 2 {
        return Err(invalid("the label-free search is limited to g ≤ 2"));
    }
    let (_, n_common) = shape(d.case, d.g as u64)?;
    let reference = match d.case {
        CaseTag::Mixed8 | CaseTag::Mixed4 => d
            .constituents
            .iter()
            .position(|c| c.genus == d.g as u64)
            .ok_or_else(|| invalid("no constituent of genus g"))?,
        _ => 0,
    };
    let pts = |c: usize| -> Vec<&ProjPoint> { d.constituents[c].branch.iter().map(|b| &b.point).collect() };
    let target: BTreeSet<&ProjPoint> = pts(reference).into_iter().collect();
    let candidates = |c: usize| -> Result<Vec<Mobius>> {
        let src = pts(c);
        let dst = pts(reference);
        let mut out: Vec<Mobius> = Vec::new();
        for i in 0..src.len() {
            for j in i + 1..src.len() {
                for k in j + 1..src.len() {
                    for a in 0..dst.len() {
                        for b in 0..dst.len() {
                            for e in 0..dst.len() {
                                if a == b || b == e || a == e {
                                    continue;
                                }
                                let m = mobius_from_triples([src[i], src[j], src[k]], [dst[a], dst[b], dst[e]])?;
                                let hits = src.iter().filter(|p| target.contains(&m.apply(p))).count();
                                if hits >= n_common && !out.iter().any(|o| o.same_map(&m)) {
                                    out.push(m);
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    };
    let others: Vec<usize> = (0..3).filter(|&c| c != reference).collect();
    let cand_a = candidates(others[0])?;
    let cand_b = candidates(others[1])?;
    let mut results: Vec<ReconstructionResult> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for ma in &cand_a {
        for mb in &cand_b {
            let mut maps = vec![Mobius::identity(); 3];
            maps[others[0]] = ma.clone();
            maps[others[1]] = mb.clone();
            let Some(labeled) = relabeled_datum(d, &maps, reference, n_common) else {
                continue;
            };
            // The inverse only sees the gluing, so repeated gluings add nothing.
            if !seen.insert(serde_json::to_string(&labeled.gluing).expect("gluing serializes")) {
                continue;
            }
            if let Ok(r) = invert(&labeled) {
                if !results.iter().any(|o| equivalent(&o.config, &r.config).is_some()) {
                    results.push(r);
                }
            }
        }
    }
    Ok(results)
}

/// The datum with its gluing rebuilt from point coincidences under `maps`.
fn relabeled_datum(d: &PrymDatum, maps: &[Mobius], reference: usize, n_common: usize) -> Option<PrymDatum> {
    let moved: Vec<Vec<(String, ProjPoint)>> = d
        .constituents
        .iter()
        .enumerate()
        .map(|(c, con)| con.branch.iter().map(|b| (b.label.clone(), maps[c].apply(&b.point))).collect())
        .collect();
    let mut by_point: BTreeMap<&ProjPoint, Vec<Member>> = BTreeMap::new();
    for (c, list) in moved.iter().enumerate() {
        for (l, p) in list {
            by_point.entry(p).or_default().push(Member {
                constituent: c,
                label: l.clone(),
            });
        }
    }
    let mut common = Vec::new();
    let mut same = Vec::new();
    for (_, members) in by_point {
        match members.len() {
            3 => common.push(GluingClass {
                kind: GlueKind::CommonImage,
                members,
            }),
            2 => same.push(GluingClass {
                kind: GlueKind::SamePoint,
                members,
            }),
            _ => {}
        }
    }
    if common.len() != n_common {
        return None;
    }
    // Keep the reference constituent's label order for the anchors.
    let order: Vec<&str> = d.constituents[reference].branch.iter().map(|b| b.label.as_str()).collect();
    common.sort_by_key(|cl| {
        let l = &cl.members.iter().find(|m| m.constituent == reference).expect("three members").label;
        order.iter().position(|o| o == l)
    });
    common.extend(same);
    Some(PrymDatum {
        gluing: common,
        ..d.clone()
    })
}

/// Two or more b2 double covers C → H whose Prym-side curve H' is the same:
/// the configurations share W ∖ {z} and y and differ only in z.
#[derive(Clone, Debug, Serialize)]
pub struct B2Witness {
    pub g: usize,
    pub seed: u64,
    pub towers: Vec<Tower>,
    /// Branch points of H', identical for every tower.
    pub prym_branch: Vec<ProjPoint>,
    /// Every pair of configurations is projectively inequivalent.
    pub pairwise_inequivalent: bool,
    /// Every C → H edge satisfies the 2-branched hyperellipticity criterion.
    pub criteria_hold: bool,
}

fn prym_side_branch(t: &Tower) -> Result<Vec<ProjPoint>> {
    let mut v: Vec<ProjPoint> = t.node("Hp")?.branch_image.values().cloned().collect();
    v.sort();
    Ok(v)
}

fn b2_edge_criterion(t: &Tower) -> Result<bool> {
    let e = t.edge("C", "H")?;
    if e.kind != EdgeKind::B2 || e.branch.len() != 2 {
        return Ok(false);
    }
    let defining = e.defining.as_ref().ok_or_else(|| Error::InvalidCover("b2 edge has no defining bundle".into()))?;
    check_b2_hyperelliptic([&e.branch[0], &e.branch[1]], defining)
}

/// `count` b2 towers sharing H'; the positions of z are drawn from the seed
/// and redrawn until all configurations are pairwise inequivalent.
pub fn b2_family(g: usize, seed: u64, count: usize) -> Result<B2Witness> {
    if g < 1 {
        return Err(Error::InvalidConfig("b2 covers need g ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // W₁..W_{2g+1} and y, shared by every member.
    let base = random_distinct_points(&mut rng, 2 * g + 2);
    let mut configs: Vec<MarkedConfig> = Vec::new();
    let mut attempts = 0;
    while configs.len() < count {
        attempts += 1;
        if attempts > 1000 {
            return Err(Error::InvalidConfig("could not find inequivalent positions for z".into()));
        }
        let z = random_distinct_points(&mut rng, 1).remove(0);
        if base.contains(&z) {
            continue;
        }
        let mut points = base[..2 * g + 1].to_vec();
        points.push(z);
        points.push(base[2 * g + 1].clone());
        let c = crate::towers::assign_roles(CaseTag::B2Double, g, points);
        if configs.iter().any(|o| equivalent(o, &c).is_some()) {
            continue;
        }
        configs.push(c);
    }
    let towers = configs
        .iter()
        .map(|c| build_tower(c, CaseTag::B2Double))
        .collect::<Result<Vec<_>>>()?;
    let prym_branch = prym_side_branch(&towers[0])?;
    for t in &towers[1..] {
        if prym_side_branch(t)? != prym_branch {
            return Err(Error::InvalidCover("Prym-side curves differ".into()));
        }
    }
    let mut pairwise_inequivalent = true;
    for i in 0..configs.len() {
        for j in i + 1..configs.len() {
            pairwise_inequivalent &= equivalent(&configs[i], &configs[j]).is_none();
        }
    }
    let mut criteria_hold = true;
    for t in &towers {
        criteria_hold &= b2_edge_criterion(t)? && t.validate().all_hold();
    }
    Ok(B2Witness {
        g,
        seed,
        towers,
        prym_branch,
        pairwise_inequivalent,
        criteria_hold,
    })
}

/// Two b2 covers with the same Prym-side data and inequivalent
/// configurations.
pub fn noninjectivity_witness_b2(g: usize, seed: u64) -> Result<B2Witness> {
    b2_family(g, seed, 2)
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberMember {
    /// The pair of configuration points, as `w{index}`, carrying X and Y.
    pub pair: [String; 2],
    pub class: TwoTorsionClass,
    /// Genus of the curve Y' the b4 cover X → Y' lies over.
    pub base_genus: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct B4Fiber {
    pub g: usize,
    pub count: usize,
    pub members: Vec<FiberMember>,
    pub pairwise_distinct: bool,
}

/// The b4 covers with Prym JY for the genus-g curve Y branched over
/// `0, 1, …, 2g+1`: one tower for each Weierstrass pair {w_i, w_j},
/// whose class w_i − w_j defines the étale double cover of Y.
pub fn fiber_enumerate_b4(g: usize) -> Result<B4Fiber> {
    if g < 2 {
        return Err(Error::InvalidConfig("the b4 fiber needs g ≥ 2".into()));
    }
    let base = standard_config(CaseTag::B4Double, g);
    let n = 2 * g + 2;
    let common = WUniverse::new((0..n).map(|k| format!("w{k}")).collect::<Vec<String>>())?;
    let mut members = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut c = MarkedConfig::new(base.points.clone());
            for k in 0..n {
                c.add_role(k, Role::W(k as u32 + 1));
            }
            c.add_role(i, Role::X);
            c.add_role(j, Role::Y);
            let t = build_tower(&c, CaseTag::B4Double)?;
            let edge = t.edge("X", "Y")?;
            let class = t
                .defining_class(edge)?
                .ok_or_else(|| Error::InvalidCover("X → Y carries no defining class".into()))?;
            if !check_etale_hyperelliptic(&class)? {
                return Err(Error::InvalidCover(format!("pair ({i}, {j}) fails the étale criterion")));
            }
            // Move the class onto labels shared by every member of the fiber.
            let y = t.node("Y")?;
            let shared: Vec<String> = class
                .labels()
                .iter()
                .map(|l| {
                    let p = y
                        .branch_image
                        .get(*l)
                        .ok_or_else(|| Error::InvalidCover(format!("Y has no image for {l}")))?;
                    let k = base.points.iter().position(|q| q == p).expect("branch image is a config point");
                    Ok(format!("w{k}"))
                })
                .collect::<Result<_>>()?;
            let refs: Vec<&str> = shared.iter().map(String::as_str).collect();
            let class = class_from_subset(&common, &refs)?;
            members.push(FiberMember {
                pair: [format!("w{i}"), format!("w{j}")],
                base_genus: t.node("Yp")?.genus,
                class,
            });
        }
    }
    let distinct: BTreeSet<&TwoTorsionClass> = members.iter().map(|m| &m.class).collect();
    Ok(B4Fiber {
        g,
        count: members.len(),
        pairwise_distinct: distinct.len() == members.len(),
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prym::KernelV4;
    use crate::towers::standard_config;

    const KLEIN: [CaseTag; 4] = [CaseTag::EtaleKlein, CaseTag::Mixed8, CaseTag::Branched12, CaseTag::Mixed4];

    fn min_g(case: CaseTag) -> usize {
        if matches!(case, CaseTag::EtaleKlein | CaseTag::Mixed8) {
            2
        } else {
            1
        }
    }

    fn datum(case: CaseTag, g: usize, seed: Option<u64>) -> (MarkedConfig, PrymDatum) {
        let c = standard_config(case, g);
        let d = prym_datum(&build_tower(&c, case).unwrap(), seed).unwrap();
        (c, d)
    }

    #[test]
    fn etale_example_seed_17() {
        let (c, d) = datum(CaseTag::EtaleKlein, 2, Some(17));
        let r = invert_etale_klein(&d).unwrap();
        assert!(equivalent(&r.config, &c).is_some());
        let triple: BTreeSet<ProjPoint> = [Role::X, Role::Y, Role::Z]
            .iter()
            .map(|&role| r.config.points[r.config.index_of(role).unwrap()].clone())
            .collect();
        // The triple of the reconstruction corresponds to {3, 4, 5}.
        let w = equivalent(&r.config, &c).unwrap();
        let mapped: BTreeSet<ProjPoint> = triple.iter().map(|p| w.mobius.apply(p)).collect();
        assert_eq!(mapped, [3, 4, 5].iter().map(|&i| ProjPoint::int(i)).collect());
    }

    #[test]
    fn unscrambled_recovers_the_input_verbatim() {
        for case in KLEIN {
            let (c, d) = datum(case, 2, None);
            let r = invert(&d).unwrap();
            assert!(r.alignment.iter().all(|a| a.mobius.same_map(&Mobius::identity())), "{case}");
            let mut got = r.config.points.clone();
            let mut want = c.points.clone();
            got.sort();
            want.sort();
            assert_eq!(got, want, "{case}");
            assert!(equivalent(&r.config, &c).is_some());
        }
    }

    #[test]
    fn mixed8_identity_scramble_recovers_dist() {
        let (c, d) = datum(CaseTag::Mixed8, 2, None);
        let r = invert_mixed8(&d).unwrap();
        let x = &r.config.points[r.config.index_of(Role::Dist).unwrap()];
        assert_eq!(x, &c.points[c.index_of(Role::Dist).unwrap()]);
        assert!(r.certificate.iter().any(|s| s.step == "v4"));
    }

    #[test]
    fn branched_example_seed_7() {
        let points: Vec<ProjPoint> = (0..7).map(ProjPoint::int).collect();
        let c = crate::towers::assign_roles(CaseTag::Branched12, 1, points);
        let d = prym_datum(&build_tower(&c, CaseTag::Branched12).unwrap(), Some(7)).unwrap();
        let r = invert_branched12(&d).unwrap();
        assert!(equivalent(&r.config, &c).is_some());
    }

    #[test]
    fn round_trips_every_case_and_genus() {
        for case in KLEIN {
            for g in min_g(case)..=4 {
                let rep = round_trip_batch(case, g, 6, 11);
                assert_eq!(rep.equivalent, 6, "{case} g = {g}: {:?}", rep.failures);
            }
        }
    }

    #[test]
    fn two_scrambles_reconstruct_equivalent_configs() {
        for case in KLEIN {
            let t = build_tower(&standard_config(case, 3), case).unwrap();
            let a = invert(&prym_datum(&t, Some(1)).unwrap()).unwrap();
            let b = invert(&prym_datum(&t, Some(2)).unwrap()).unwrap();
            assert!(equivalent(&a.config, &b.config).is_some(), "{case}");
        }
    }

    #[test]
    fn batch_is_deterministic() {
        let a = round_trip_batch(CaseTag::Mixed4, 2, 5, 99);
        let b = round_trip_batch(CaseTag::Mixed4, 2, 5, 99);
        assert_eq!(a, b);
    }

    #[test]
    fn deleting_a_common_class_is_rejected() {
        for case in KLEIN {
            for g in min_g(case)..=3 {
                let (_, mut d) = datum(case, g, Some(3));
                let k = d.gluing.iter().position(|c| c.kind == GlueKind::CommonImage).unwrap();
                d.gluing.remove(k);
                assert!(matches!(invert(&d), Err(Error::NotInPrymImage(_))), "{case} g = {g}");
            }
        }
    }

    #[test]
    fn mismatched_extra_points_are_rejected() {
        // Branched: every pair of constituents sharing no extra.
        let (_, mut d) = datum(CaseTag::Branched12, 2, Some(4));
        d.gluing.retain(|c| c.kind == GlueKind::CommonImage);
        assert!(matches!(invert(&d), Err(Error::NotInPrymImage(_))));
        // Branched: swap which extras are joined.
        let (_, mut d) = datum(CaseTag::Branched12, 2, None);
        let extras: Vec<usize> = (0..d.gluing.len()).filter(|&i| d.gluing[i].kind == GlueKind::SamePoint).collect();
        let (i, j) = (extras[0], extras[1]);
        let tmp = d.gluing[i].members[1].clone();
        d.gluing[i].members[1] = d.gluing[j].members[1].clone();
        d.gluing[j].members[1] = tmp;
        assert!(matches!(invert(&d), Err(Error::NotInPrymImage(_))));
        // Mixed4: glue the other pair of extras.
        let (_, mut d) = datum(CaseTag::Mixed4, 2, None);
        let k = d.gluing.iter().position(|c| c.kind == GlueKind::SamePoint).unwrap();
        let h = d.gluing[k].members[1].constituent;
        let other = d.constituents[h]
            .branch
            .iter()
            .map(|b| b.label.clone())
            .find(|l| *l != d.gluing[k].members[1].label && !d.gluing.iter().any(|c| c.members.iter().any(|m| m.constituent == h && m.label == *l)))
            .unwrap();
        d.gluing[k].members[1].label = other;
        assert!(matches!(invert(&d), Err(Error::NotInPrymImage(_))));
    }

    #[test]
    fn v4_controls() {
        let (c, d) = datum(CaseTag::Mixed8, 2, None);
        let v = d.v4.clone().unwrap();
        assert_eq!(v.generators[0], vec!["[x]".to_string(), "[y]".into()]);
        // The same group presented by other generators still works.
        let mut alt = d.clone();
        alt.v4 = Some(KernelV4 {
            constituent: 0,
            generators: [vec!["[y]".into(), "[z]".into()], vec!["[x]".into(), "[z]".into()]],
        });
        assert!(equivalent(&invert(&alt).unwrap().config, &c).is_some());
        // ⟨{x,y},{z,w₁}⟩ is not of the form ⟨x'−y, y−z⟩.
        let mut bad = d.clone();
        bad.v4 = Some(KernelV4 {
            constituent: 0,
            generators: [vec!["[x]".into(), "[y]".into()], vec!["[z]".into(), "[1]".into()]],
        });
        assert!(matches!(invert(&bad), Err(Error::NotInPrymImage(_))));
        // A glued point in place of x.
        let mut glued = d.clone();
        glued.v4 = Some(KernelV4 {
            constituent: 0,
            generators: [vec!["[1]".into(), "[y]".into()], vec!["[y]".into(), "[z]".into()]],
        });
        assert!(matches!(invert(&glued), Err(Error::NotInPrymImage(_))));
        // Rank one or odd subsets are malformed.
        let mut rank1 = d.clone();
        rank1.v4 = Some(KernelV4 {
            constituent: 0,
            generators: [vec!["[x]".into(), "[y]".into()], vec!["[x]".into(), "[y]".into()]],
        });
        assert!(matches!(invert(&rank1), Err(Error::InvalidDatum(_))));
        let mut odd = d;
        odd.v4 = Some(KernelV4 {
            constituent: 0,
            generators: [vec!["[x]".into()], vec!["[y]".into(), "[z]".into()]],
        });
        assert!(matches!(invert(&odd), Err(Error::InvalidDatum(_))));
    }

    #[test]
    fn x_is_unique_among_all_candidates() {
        let (_, d) = datum(CaseTag::Mixed8, 2, None);
        let labels: Vec<String> = d.constituents[0].branch.iter().map(|b| b.label.clone()).collect();
        let u = WUniverse::new(labels.clone()).unwrap();
        let v = d.v4.clone().unwrap();
        let group = v4_group(&u, &v.generators).unwrap();
        let yz = class_from_subset(&u, &["[y]", "[z]"]).unwrap();
        let hits: Vec<&String> = labels
            .iter()
            .filter(|x| *x != "[y]" && *x != "[z]")
            .filter(|x| {
                let xy = class_from_subset(&u, &[x.as_str(), "[y]"]).unwrap();
                TwoTorsionSubgroup::span(&u, &[xy, yz.clone()]).unwrap() == group
            })
            .collect();
        assert_eq!(hits, vec!["[x]"]);
    }

    #[test]
    fn malformed_data() {
        let (_, d) = datum(CaseTag::EtaleKlein, 2, Some(1));
        let mut bad = d.clone();
        bad.constituents[1].genus = 2;
        assert!(matches!(invert(&bad), Err(Error::InvalidDatum(_))));
        let mut bad = d.clone();
        bad.pol_type = vec![1, 4];
        assert!(matches!(invert(&bad), Err(Error::InvalidDatum(_))));
        let mut bad = d.clone();
        bad.case = CaseTag::B2Double;
        assert!(matches!(invert(&bad), Err(Error::InvalidDatum(_))));
        let mut bad = d;
        bad.constituents.pop();
        assert!(matches!(invert(&bad), Err(Error::InvalidDatum(_))));
    }

    #[test]
    fn moved_point_fails_alignment() {
        let (_, mut d) = datum(CaseTag::Branched12, 2, Some(8));
        let k = d.gluing.iter().rposition(|c| c.kind == GlueKind::CommonImage).unwrap();
        let m = d.gluing[k].members[0].clone();
        let con = &mut d.constituents[m.constituent];
        let b = con.branch.iter_mut().find(|b| b.label == m.label).unwrap();
        b.point = ProjPoint::frac(1234, 577);
        assert!(matches!(invert(&d), Err(Error::NotInPrymImage(_))));
    }

    #[test]
    fn label_free_search_finds_the_input() {
        for (case, g) in [(CaseTag::Branched12, 1), (CaseTag::Mixed4, 1)] {
            let (c, mut d) = datum(case, g, Some(21));
            d.gluing.clear();
            let found = invert_label_free(&d).unwrap();
            assert!(found.iter().any(|r| equivalent(&r.config, &c).is_some()), "{case}");
        }
    }

    #[test]
    fn b2_witness_examples() {
        for g in 1..=3 {
            let w = noninjectivity_witness_b2(g, 3).unwrap();
            assert_eq!(w.towers.len(), 2);
            assert!(w.pairwise_inequivalent && w.criteria_hold);
            let (a, b) = (&w.towers[0].config, &w.towers[1].config);
            let z = |c: &MarkedConfig| c.points[c.index_of(Role::Z).unwrap()].clone();
            assert_ne!(z(a), z(b));
            for i in 0..a.len() {
                if Some(i) != a.index_of(Role::Z) {
                    assert_eq!(a.points[i], b.points[i]);
                }
            }
        }
        let fam = b2_family(1, 5, 3).unwrap();
        assert!(fam.pairwise_inequivalent && fam.criteria_hold);
    }

    #[test]
    fn b2_same_z_gives_equivalent_towers() {
        let w = noninjectivity_witness_b2(1, 9).unwrap();
        let c = &w.towers[0].config;
        let again = build_tower(c, CaseTag::B2Double).unwrap();
        assert!(equivalent(&again.config, c).is_some());
        assert_eq!(prym_side_branch(&again).unwrap(), w.prym_branch);
    }

    #[test]
    fn b4_fiber_counts() {
        for (g, n) in [(2, 15), (3, 28)] {
            let f = fiber_enumerate_b4(g).unwrap();
            assert_eq!(f.count, n);
            assert!(f.pairwise_distinct);
            assert!(f.members.iter().all(|m| m.base_genus == g as u64 - 1));
        }
        assert!(fiber_enumerate_b4(1).is_err());
    }
}
