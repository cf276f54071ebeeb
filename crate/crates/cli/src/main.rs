use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hyperklein::family::{family_certificate, verify_p1_quotient};
use hyperklein::idempotents::{involution_pair, verify_decomposition, verify_system, KleinDecomposition};
use hyperklein::projline::Scalar;
use hyperklein::prym::{decomposition_check, polarisation_type, prym_datum};
use hyperklein::reconstruct::{
    b2_family, fiber_enumerate_b4, invert, invert_label_free, round_trip_batch, ReconstructionResult,
};
use hyperklein::torsion::{class_from_subset, classify_klein, TwoTorsionClass, TwoTorsionSubgroup};
use hyperklein::towers::{build_tower, standard_config};
use hyperklein::{CaseTag, Error, MarkedConfig, ProjPoint, PrymDatum, Role, Tower, WUniverse};

#[derive(Parser)]
#[command(name = "hyperklein", version, about = "2-torsion, covering towers and Prym inversion for hyperelliptic Klein coverings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[arg(long, short, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Build or validate a covering tower.
    #[command(subcommand)]
    Tower(TowerCmd),
    /// 2-torsion arithmetic on a Weierstrass universe.
    #[command(subcommand)]
    Torsion(TorsionCmd),
    /// Prym data, order tables and polarisation types.
    #[command(subcommand)]
    Prym(PrymCmd),
    /// Reconstruct a configuration from a Prym datum.
    Invert {
        case: CaseTag,
        /// Datum file or inline JSON.
        #[arg(long)]
        input: String,
        /// Ignore the gluing and search over alignments (g ≤ 2).
        #[arg(long)]
        label_free: bool,
    },
    /// Forward, scramble and invert random configurations.
    Roundtrip {
        case: CaseTag,
        #[arg(long)]
        g: usize,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Double covers sharing a Prym.
    Witness {
        #[arg(value_parser = ["b2"])]
        kind: String,
        #[arg(long, default_value_t = 1)]
        g: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        count: usize,
    },
    /// The b4 covers over one Prym.
    Fiber {
        #[arg(value_parser = ["b4"])]
        kind: String,
        #[arg(long)]
        g: usize,
    },
    /// The idempotent identities of the deck group ring.
    #[command(subcommand)]
    Idempotents(VerifyCmd),
    /// The explicit curve family and the Klein quotient of P¹.
    #[command(subcommand)]
    Family(FamilyCmd),
}

#[derive(Args)]
struct ConfigSource {
    /// Configuration file or inline JSON: {"case": ..., "points": [...], "roles": {...}}.
    #[arg(long, conflicts_with_all = ["case", "g"])]
    input: Option<String>,
    /// Use the standard configuration of this case instead of an input.
    #[arg(long, requires = "g")]
    case: Option<CaseTag>,
    #[arg(long)]
    g: Option<usize>,
}

#[derive(Subcommand)]
enum TowerCmd {
    Build(ConfigSource),
    Validate {
        /// Tower file or inline JSON.
        #[arg(long)]
        input: String,
    },
}

#[derive(Subcommand)]
enum TorsionCmd {
    /// Span of classes given as label subsets.
    Span {
        #[arg(long, value_delimiter = ',', required = true)]
        labels: Vec<String>,
        /// A subset of labels separated by spaces; repeat for more generators.
        #[arg(long = "gen")]
        generators: Vec<String>,
    },
    /// Weil pairing and Klein type of two classes.
    Pair {
        #[arg(long, value_delimiter = ',', required = true)]
        labels: Vec<String>,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Intersection of two spans; generators separated by ';'.
    Intersect {
        #[arg(long, value_delimiter = ',', required = true)]
        labels: Vec<String>,
        #[arg(long)]
        left: String,
        #[arg(long)]
        right: String,
    },
}

#[derive(Subcommand)]
enum PrymCmd {
    Datum {
        #[command(flatten)]
        source: ConfigSource,
        /// Scramble the datum with this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    Orders(ConfigSource),
    Delta {
        #[arg(long)]
        case: CaseTag,
        #[arg(long)]
        g: usize,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    Verify,
}

#[derive(Subcommand)]
enum FamilyCmd {
    Verify {
        /// Parameters a₁,…,aₙ of y² = ∏(x⁴ + aᵢx² + 1).
        #[arg(long, value_delimiter = ',', default_value = "3,5")]
        a: Vec<String>,
    },
}

#[derive(Deserialize)]
struct ConfigInput {
    case: CaseTag,
    points: Vec<ProjPoint>,
    #[serde(default)]
    roles: BTreeMap<usize, BTreeSet<Role>>,
}

enum Failure {
    /// Well-formed input with a verified negative answer.
    Negative(String),
    Malformed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_negative_result() {
            Failure::Negative(e.to_string())
        } else {
            Failure::Malformed(e.to_string())
        }
    }
}

/// Output plus whether the verb verified what it was asked to.
struct Outcome {
    text: String,
    holds: bool,
}

fn read_source(s: &str) -> Result<(String, String), Failure> {
    if s.trim_start().starts_with('{') {
        return Ok(("<inline>".into(), s.to_string()));
    }
    let text = fs::read_to_string(s).map_err(|e| Failure::Malformed(format!("{s}: {e}")))?;
    Ok((s.to_string(), text))
}

fn parse_json<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T, Failure> {
    let (name, text) = read_source(s)?;
    serde_json::from_str(&text).map_err(|e| Failure::Malformed(format!("{name}: {e}")))
}

fn load_config(src: &ConfigSource) -> Result<(CaseTag, MarkedConfig), Failure> {
    match (&src.input, src.case, src.g) {
        (Some(input), _, _) => {
            let c: ConfigInput = parse_json(input)?;
            Ok((
                c.case,
                MarkedConfig {
                    points: c.points,
                    roles: c.roles,
                },
            ))
        }
        (None, Some(case), Some(g)) => {
            if g < case.min_genus() {
                return Err(Failure::Malformed(format!("{case} needs g ≥ {}", case.min_genus())));
            }
            Ok((case, standard_config(case, g)))
        }
        _ => Err(Failure::Malformed("give --input or both --case and --g".into())),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn subset(u: &std::sync::Arc<WUniverse>, s: &str) -> Result<TwoTorsionClass, Failure> {
    let labels: Vec<&str> = s.split_whitespace().collect();
    Ok(class_from_subset(u, &labels)?)
}

fn span(u: &std::sync::Arc<WUniverse>, list: &[&str]) -> Result<TwoTorsionSubgroup, Failure> {
    let gens = list.iter().map(|s| subset(u, s)).collect::<Result<Vec<_>, _>>()?;
    Ok(TwoTorsionSubgroup::span(u, &gens)?)
}

#[derive(Serialize)]
struct SubgroupReport {
    order: String,
    rank: usize,
    generators: TwoTorsionSubgroup,
    isotropic: bool,
}

impl SubgroupReport {
    fn new(g: TwoTorsionSubgroup) -> Self {
        SubgroupReport {
            order: g.order().to_string(),
            rank: g.rank(),
            isotropic: g.is_isotropic(),
            generators: g,
        }
    }
}

fn not_available(verb: &str, f: Format) -> Failure {
    let name = match f {
        Format::Json => "json",
        Format::Dot => "dot",
        Format::Table => "table",
    };
    Failure::Malformed(format!("{verb} has no {name} output"))
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let fmt = |default: Format| cli.format.unwrap_or(default);
    let json = |text: String, holds: bool| Ok(Outcome { text, holds });
    match &cli.command {
        Command::Tower(TowerCmd::Build(src)) => {
            let (case, config) = load_config(src)?;
            let t = build_tower(&config, case)?;
            match fmt(Format::Json) {
                Format::Json => json(to_json(&t), true),
                Format::Dot => json(t.to_dot(), true),
                Format::Table => {
                    let mut s = format!("{:<8} {:<14} {:>5}  subgroup\n", "node", "display", "genus");
                    for n in &t.nodes {
                        s.push_str(&format!("{:<8} {:<14} {:>5}  ⟨{}⟩\n", n.name, n.display, n.genus, n.subgroup.join(", ")));
                    }
                    json(s, true)
                }
            }
        }
        Command::Tower(TowerCmd::Validate { input }) => {
            let (name, text) = read_source(input)?;
            let t = Tower::from_json(&text).map_err(|e| Failure::Malformed(format!("{name}: {e}")))?;
            let r = t.validate();
            match fmt(Format::Json) {
                Format::Json => json(to_json(&r), r.all_hold()),
                Format::Dot => json(t.to_dot(), r.all_hold()),
                Format::Table => {
                    let mut s = String::new();
                    for c in &r.checks {
                        s.push_str(&format!("{:<5} {}  {}\n", if c.holds { "ok" } else { "FAIL" }, c.check, c.detail));
                    }
                    json(s, r.all_hold())
                }
            }
        }
        Command::Torsion(cmd) => {
            let labels = match cmd {
                TorsionCmd::Span { labels, .. } | TorsionCmd::Pair { labels, .. } | TorsionCmd::Intersect { labels, .. } => labels,
            };
            let u = WUniverse::new(labels.iter().map(|l| l.trim().to_string()))?;
            let text = match cmd {
                TorsionCmd::Span { generators, .. } => {
                    let list: Vec<&str> = generators.iter().map(String::as_str).collect();
                    to_json(&SubgroupReport::new(span(&u, &list)?))
                }
                TorsionCmd::Pair { a, b, .. } => {
                    let (a, b) = (subset(&u, a)?, subset(&u, b)?);
                    to_json(&serde_json::json!({
                        "weil_pairing": a.weil_pairing(&b)?,
                        "klein_type": classify_klein(&a, &b),
                    }))
                }
                TorsionCmd::Intersect { left, right, .. } => {
                    let l = span(&u, &left.split(';').collect::<Vec<_>>())?;
                    let r = span(&u, &right.split(';').collect::<Vec<_>>())?;
                    to_json(&SubgroupReport::new(l.intersect(&r)?))
                }
            };
            match fmt(Format::Json) {
                Format::Json => json(text, true),
                f => Err(not_available("torsion", f)),
            }
        }
        Command::Prym(PrymCmd::Datum { source, seed }) => {
            let (case, config) = load_config(source)?;
            let d = prym_datum(&build_tower(&config, case)?, *seed)?;
            match fmt(Format::Json) {
                Format::Json => json(d.to_json() + "\n", true),
                f => Err(not_available("prym datum", f)),
            }
        }
        Command::Prym(PrymCmd::Orders(src)) => {
            let (case, config) = load_config(src)?;
            let r = decomposition_check(&build_tower(&config, case)?)?;
            match fmt(Format::Json) {
                Format::Json => json(to_json(&r), r.all_hold()),
                Format::Table => {
                    let mut s = format!("{:<40} {:>14} {:>14}  holds\n", "check", "expected", "computed");
                    for c in &r.orders {
                        s.push_str(&format!("{:<40} {:>14} {:>14}  {}\n", c.check, c.expected, c.computed, c.holds));
                    }
                    for c in &r.idempotents.checks {
                        s.push_str(&format!("{:<40} {:>14} {:>14}  {}\n", c.identity, "", "", c.holds));
                    }
                    json(s, r.all_hold())
                }
                f => Err(not_available("prym orders", f)),
            }
        }
        Command::Prym(PrymCmd::Delta { case, g }) => {
            let d = polarisation_type(*case, *g)?;
            match fmt(Format::Json) {
                Format::Json => json(to_json(&serde_json::json!({ "case": case, "g": g, "delta": d, "length": d.len() })), true),
                Format::Table => json(format!("{}\n", d.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")), true),
                f => Err(not_available("prym delta", f)),
            }
        }
        Command::Invert { case, input, label_free } => {
            let d: PrymDatum = parse_json(input)?;
            if d.case != *case {
                return Err(Failure::Malformed(format!("datum is {}, not {case}", d.case)));
            }
            let results: Vec<ReconstructionResult> = if *label_free {
                let found = invert_label_free(&d)?;
                if found.is_empty() {
                    return Err(Failure::Negative("no alignment reconstructs the datum".into()));
                }
                found
            } else {
                vec![invert(&d)?]
            };
            match fmt(Format::Json) {
                Format::Json if *label_free => json(to_json(&results), true),
                Format::Json => json(to_json(&results[0]), true),
                Format::Table => {
                    let mut s = String::new();
                    for r in &results {
                        for (i, p) in r.config.points.iter().enumerate() {
                            let roles: Vec<String> = r.config.roles_of(i).map(|x| x.to_string()).collect();
                            s.push_str(&format!("{p:<20} {}\n", roles.join(" ")));
                        }
                        s.push('\n');
                    }
                    json(s, true)
                }
                f => Err(not_available("invert", f)),
            }
        }
        Command::Roundtrip { case, g, count, seed } => {
            if !case.is_klein() || *g < case.min_genus() {
                return Err(Failure::Malformed(format!("no round trip for {case} at g = {g}")));
            }
            let r = round_trip_batch(*case, *g, *count, *seed);
            let holds = r.equivalent == r.count;
            match fmt(Format::Table) {
                Format::Table => {
                    let mut s = format!("{}/{} equivalent\n", r.equivalent, r.count);
                    for f in &r.failures {
                        s.push_str(&format!("{f:?}\n"));
                    }
                    json(s, holds)
                }
                Format::Json => json(to_json(&r), holds),
                f => Err(not_available("roundtrip", f)),
            }
        }
        Command::Witness { g, seed, count, .. } => {
            let w = b2_family(*g, *seed, *count)?;
            let holds = w.pairwise_inequivalent && w.criteria_hold;
            match fmt(Format::Json) {
                Format::Json => json(to_json(&w), holds),
                Format::Table => {
                    let mut s = format!("prym branch: {}\n", w.prym_branch.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" "));
                    for t in &w.towers {
                        s.push_str(&format!("config: {}\n", t.config.points.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")));
                    }
                    s.push_str(&format!("pairwise inequivalent: {}\n", w.pairwise_inequivalent));
                    json(s, holds)
                }
                f => Err(not_available("witness", f)),
            }
        }
        Command::Fiber { g, .. } => {
            let f = fiber_enumerate_b4(*g)?;
            match fmt(Format::Table) {
                Format::Table => {
                    let mut s = format!("{}\n", f.count);
                    for m in &f.members {
                        s.push_str(&format!("{} {}  genus {}\n", m.pair[0], m.pair[1], m.base_genus));
                    }
                    json(s, f.pairwise_distinct)
                }
                Format::Json => json(to_json(&f), f.pairwise_distinct),
                fm => Err(not_available("fiber", fm)),
            }
        }
        Command::Idempotents(VerifyCmd::Verify) => {
            let etale = verify_decomposition(KleinDecomposition::Etale);
            let branched = verify_decomposition(KleinDecomposition::Branched);
            let pair = verify_system(&involution_pair(), &2.into());
            let holds = etale.all_hold() && branched.all_hold() && pair.all_hold();
            match fmt(Format::Json) {
                Format::Json => json(
                    to_json(&serde_json::json!({ "etale": etale, "branched": branched, "involution": pair })),
                    holds,
                ),
                Format::Table => {
                    let mut s = String::new();
                    for (name, r) in [("etale", &etale), ("branched", &branched), ("involution", &pair)] {
                        for c in &r.checks {
                            s.push_str(&format!("{name:<11} {:<5} {}\n", if c.holds { "ok" } else { "FAIL" }, c.identity));
                        }
                    }
                    json(s, holds)
                }
                f => Err(not_available("idempotents", f)),
            }
        }
        Command::Family(FamilyCmd::Verify { a }) => {
            let params = a
                .iter()
                .map(|s| s.trim().parse::<Scalar>().map_err(|_| Failure::Malformed(format!("bad parameter {s:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let cert = family_certificate(&params)?;
            let quotient = verify_p1_quotient()?;
            let holds = cert.holds() && quotient.all_hold();
            match fmt(Format::Json) {
                Format::Json => json(to_json(&serde_json::json!({ "family": cert, "p1_quotient": quotient })), holds),
                f => Err(not_available("family", f)),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.output {
                Some(path) => fs::write(path, &out.text).map_err(|e| format!("{}: {e}", path.display())),
                None => std::io::stdout().write_all(out.text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if out.holds {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Negative(msg)) => {
            eprintln!("negative: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Malformed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
