//! Command-line front end. `cli_dispatch` returns what to print instead of
//! printing, so tests can drive it in-process.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::fairness::{blocking_pairs, blocking_students, compare_at, is_individually_rational, is_stable};
use crate::io::{load_instance, load_matching, save_instance, LoadedInstance, ReportDocument, Roster};
use crate::mechanisms::{run_mechanism, MechanismKind, MechanismSpec};
use crate::model::{ConstraintVector, Instance, Matching};
use crate::strategy::{
    boston_equilibrium_outcome, competitive_schools, is_nash_equilibrium, manipulating_students,
    sd_equilibrium_outcome, semi_sophisticated_outcome, Report, SophisticationPartition,
};
use crate::verify::{
    check_claim, fixture_instance, random_instance, reproduce_paper_example, ClaimId, ClaimParams, Completion,
    FamilyConfig, FixtureId, PriorityMode, PrioritySet,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "school-choice", version, about = "School-choice mechanisms, blocking students and claim sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a mechanism on an instance.
    Run {
        instance: PathBuf,
        #[command(flatten)]
        mech: MechArgs,
    },
    /// Stability and blocking pairs of a matching file or a mechanism outcome.
    Analyze {
        instance: PathBuf,
        /// `{student: school|null}` file; without it a mechanism is run.
        matching: Option<PathBuf>,
        #[command(flatten)]
        mech: OptMechArgs,
    },
    /// Compare two mechanisms at one instance (`--mech` twice).
    Compare {
        instance: PathBuf,
        #[arg(long, value_enum, num_args = 1, required = true)]
        mech: Vec<MechName>,
        /// One value for both mechanisms, or one each.
        #[arg(long)]
        k: Vec<usize>,
        #[arg(long)]
        e: Vec<usize>,
    },
    /// Students with a profitable misreport.
    Manipulations {
        instance: PathBuf,
        #[command(flatten)]
        mech: MechArgs,
    },
    /// Equilibrium constructions.
    Equilibrium {
        #[arg(value_enum)]
        kind: EquilibriumKind,
        instance: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        /// Comma-separated names of sincere students; the rest are sophisticated.
        #[arg(long, default_value = "")]
        sincere: String,
        #[arg(long)]
        l: Option<usize>,
    },
    /// Check a claim over an instance family.
    Verify {
        claim: String,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        k: Vec<usize>,
        #[arg(long)]
        l: Option<usize>,
        /// Round-length pairs `M:M'`.
        #[arg(long)]
        e: Vec<String>,
    },
    /// Recompute a worked example; optionally check a document against it.
    Reproduce { fixture: String, document: Option<PathBuf> },
    /// Write a random instance document.
    Generate {
        output: PathBuf,
        #[arg(long, default_value_t = 4)]
        students: usize,
        #[arg(long, default_value_t = 3)]
        schools: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        common_priority: bool,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MechName {
    Gs,
    Boston,
    Fpf,
    Sd,
    Chinese,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum EquilibriumKind {
    Boston,
    Sd,
    Semi,
}

#[derive(Args, Debug)]
struct MechArgs {
    #[arg(long, value_enum)]
    mech: MechName,
    #[arg(long, conflicts_with = "limits")]
    k: Option<usize>,
    /// Per-student limits in roster order, comma-separated.
    #[arg(long)]
    limits: Option<String>,
    #[arg(long)]
    e: Option<usize>,
}

#[derive(Args, Debug)]
struct OptMechArgs {
    #[arg(long, value_enum)]
    mech: Option<MechName>,
    #[arg(long, conflicts_with = "limits")]
    k: Option<usize>,
    #[arg(long)]
    limits: Option<String>,
    #[arg(long)]
    e: Option<usize>,
}

#[derive(Args, Debug)]
struct FamilyArgs {
    #[arg(long, default_value_t = 4)]
    students: usize,
    #[arg(long, default_value_t = 3)]
    schools: usize,
    /// Every preference profile of exactly this shape instead of random samples.
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    common_priority: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

/// What a command wants printed and the process exit code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliOutcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<ReportDocument, Failure>;

fn mech_spec(
    name: MechName,
    k: Option<usize>,
    limits: Option<&str>,
    e: Option<usize>,
    inst: &Instance,
) -> Result<MechanismSpec, Failure> {
    let kind = match name {
        MechName::Gs => MechanismKind::GaleShapley,
        MechName::Boston => MechanismKind::Boston,
        MechName::Fpf => MechanismKind::FirstPreferenceFirst,
        MechName::Sd => MechanismKind::SerialDictatorship,
        MechName::Chinese => {
            MechanismKind::ChineseParallel { e: e.ok_or_else(|| Failure("--mech chinese needs --e".into()))? }
        }
    };
    if name != MechName::Chinese && e.is_some() {
        return Err(Failure("--e applies only to --mech chinese".into()));
    }
    let mut spec = MechanismSpec::new(kind);
    if let Some(k) = k {
        spec = spec.with_k(k);
    }
    if let Some(text) = limits {
        let v = text
            .split(',')
            .map(|x| x.trim().parse::<usize>().map_err(|_| Failure(format!("bad limit {x:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        spec = spec.with_limits(ConstraintVector::new(v)?);
    }
    spec.check(inst)?;
    Ok(spec)
}

fn load(path: &Path, diag: &mut String) -> Result<LoadedInstance, Failure> {
    let loaded = load_instance(path)?;
    for w in &loaded.warnings {
        diag.push_str(&format!("warning: {w}\n"));
    }
    Ok(loaded)
}

fn matching_summary(m: &Matching, inst: &Instance, roster: &Roster) -> Value {
    json!({
        "matching": roster.matching_json(m),
        "individually_rational": is_individually_rational(m, inst),
        "stable": is_stable(m, inst),
        "blocking_students": roster.students_json(&blocking_students(m, inst)),
        "blocking_pairs": roster.blocking_pairs_json(&blocking_pairs(m, inst)),
    })
}

fn reports_json(profile: &[Report], roster: &Roster) -> Value {
    let map: serde_json::Map<String, Value> = profile
        .iter()
        .enumerate()
        .map(|(i, r)| (roster.students[i].clone(), roster.schools_json(r.schools())))
        .collect();
    Value::Object(map)
}

fn with_digest(mut report: ReportDocument, inst: &Instance) -> ReportDocument {
    report.instance_digest = Some(inst.digest());
    report
}

fn execute(command: Command, echo: Vec<String>, diag: &mut String) -> Outcome {
    match command {
        Command::Run { instance, mech } => {
            let LoadedInstance { instance: inst, roster, .. } = load(&instance, diag)?;
            let spec = mech_spec(mech.mech, mech.k, mech.limits.as_deref(), mech.e, &inst)?;
            let m = run_mechanism(&spec, &inst)?;
            let mut body = matching_summary(&m, &inst, &roster);
            body["mechanism"] = json!(spec.to_string());
            Ok(with_digest(ReportDocument::new(echo, body), &inst))
        }
        Command::Analyze { instance, matching, mech } => {
            let LoadedInstance { instance: inst, roster, .. } = load(&instance, diag)?;
            let (m, source) = match (matching, mech.mech) {
                (Some(_), Some(_)) => return Err(Failure("give either a matching file or --mech, not both".into())),
                (Some(path), None) => {
                    let m = load_matching(&path, &roster)?;
                    if !m.respects_capacities(&inst) {
                        return Err(Failure("matching exceeds a school's capacity".into()));
                    }
                    (m, path.display().to_string())
                }
                (None, Some(name)) => {
                    let spec = mech_spec(name, mech.k, mech.limits.as_deref(), mech.e, &inst)?;
                    (run_mechanism(&spec, &inst)?, spec.to_string())
                }
                (None, None) => return Err(Failure("give a matching file or --mech".into())),
            };
            let mut body = matching_summary(&m, &inst, &roster);
            body["source"] = json!(source);
            Ok(with_digest(ReportDocument::new(echo, body), &inst))
        }
        Command::Compare { instance, mech, k, e } => {
            let LoadedInstance { instance: inst, roster, .. } = load(&instance, diag)?;
            if mech.len() != 2 || k.len() > 2 || e.len() > 2 {
                return Err(Failure("compare takes --mech twice and at most two --k and --e values".into()));
            }
            let pick = |v: &[usize], j: usize| v.get(j).or(v.first()).copied();
            let mut specs = Vec::new();
            let mut e_iter = e.iter().copied();
            for (j, &name) in mech.iter().enumerate() {
                let e = if name == MechName::Chinese { e_iter.next().or(e.first().copied()) } else { None };
                specs.push(mech_spec(name, pick(&k, j), None, e, &inst)?);
            }
            let verdict = compare_at(&specs[0], &specs[1], &inst)?;
            let a = run_mechanism(&specs[0], &inst)?;
            let b = run_mechanism(&specs[1], &inst)?;
            let body = json!({
                "verdict": verdict,
                "a": matching_summary(&a, &inst, &roster),
                "b": matching_summary(&b, &inst, &roster),
            });
            Ok(with_digest(ReportDocument::new(echo, body), &inst))
        }
        Command::Manipulations { instance, mech } => {
            let LoadedInstance { instance: inst, roster, .. } = load(&instance, diag)?;
            let spec = mech_spec(mech.mech, mech.k, mech.limits.as_deref(), mech.e, &inst)?;
            let manip = manipulating_students(&spec, &inst)?;
            let body = json!({
                "mechanism": spec.to_string(),
                "manipulating_students": roster.students_json(&manip),
                "manipulable": !manip.is_empty(),
            });
            Ok(with_digest(ReportDocument::new(echo, body), &inst))
        }
        Command::Equilibrium { kind, instance, k, sincere, l } => {
            let LoadedInstance { instance: inst, roster, .. } = load(&instance, diag)?;
            let body;
            let mut passed = true;
            match kind {
                EquilibriumKind::Boston | EquilibriumKind::Sd => {
                    if l.is_some() {
                        return Err(Failure("--l applies only to the semi construction".into()));
                    }
                    let k = k.ok_or_else(|| Failure("--k is required".into()))?;
                    let part =
                        SophisticationPartition::from_sincere(inst.n_students(), &roster.parse_students(&sincere)?);
                    let (out, spec) = if kind == EquilibriumKind::Boston {
                        (boston_equilibrium_outcome(&inst, &part, k)?, MechanismSpec::boston().with_k(k))
                    } else {
                        (sd_equilibrium_outcome(&inst, &part, k)?, MechanismSpec::sd().with_k(k))
                    };
                    let nash = is_nash_equilibrium(&spec, &inst, &part, &out.profile)?;
                    passed = nash;
                    let mut b = matching_summary(&out.matching, &inst, &roster);
                    b["mechanism"] = json!(spec.to_string());
                    b["sincere"] = roster.students_json(&part.sincere());
                    b["profile"] = reports_json(&out.profile, &roster);
                    b["nash_equilibrium"] = json!(nash);
                    body = b;
                }
                EquilibriumKind::Semi => {
                    if k.is_some() || !sincere.is_empty() {
                        return Err(Failure("the semi construction takes only --l".into()));
                    }
                    let l = l.ok_or_else(|| Failure("--l is required".into()))?;
                    let out = semi_sophisticated_outcome(&inst, l)?;
                    let comp = competitive_schools(&inst);
                    let guaranteed: serde_json::Map<String, Value> = inst
                        .students()
                        .map(|i| (roster.student(i).to_string(), json!(comp.guaranteed[i.0].map(|s| roster.school(s)))))
                        .collect();
                    let limits: serde_json::Map<String, Value> =
                        inst.students().map(|i| (roster.student(i).to_string(), json!(out.limits.limit(i)))).collect();
                    let mut b = matching_summary(&out.matching, &inst, &roster);
                    b["competitive_schools"] = roster.schools_json(&comp.competitive);
                    b["guaranteed"] = Value::Object(guaranteed);
                    b["profile"] = reports_json(&out.profile, &roster);
                    b["equivalent_limits"] = Value::Object(limits);
                    body = b;
                }
            }
            let mut report = with_digest(ReportDocument::new(echo, body), &inst);
            report.passed = passed;
            Ok(report)
        }
        Command::Verify { claim, family, k, l, e } => {
            let claim: ClaimId = claim.parse()?;
            let mut params = ClaimParams::default();
            if !k.is_empty() {
                params.ks = k;
            }
            if let Some(l) = l {
                params.l = l;
            }
            if !e.is_empty() {
                params.e_pairs = e
                    .iter()
                    .map(|p| {
                        let (a, b) =
                            p.split_once(':').ok_or_else(|| Failure(format!("--e expects M:M', got {p:?}")))?;
                        Ok((a.trim().parse()?, b.trim().parse()?))
                    })
                    .collect::<Result<_, Failure>>()?;
            }
            let common = family.common_priority || claim.needs_common_priority();
            let config = if family.exhaustive {
                let set = if family.common_priority { PrioritySet::AllCommon } else { PrioritySet::Canonical(2) };
                let mode = if family.common_priority { PriorityMode::Common } else { PriorityMode::Arbitrary };
                FamilyConfig::exhaustive(family.students, family.schools, set).with_priority(mode)
            } else {
                let mode = if common { PriorityMode::Common } else { PriorityMode::Arbitrary };
                FamilyConfig::random((1, family.students), (1, family.schools), family.seed, family.samples)
                    .with_priority(mode)
            };
            let report = check_claim(claim, &config, &params)?;
            diag.push_str(&format!("{claim}: {} instances in {:.2?}\n", report.instances_checked, report.wall_time));
            let mut doc = ReportDocument::new(echo, serde_json::to_value(&report)?);
            doc.passed = report.passed;
            if !family.exhaustive {
                doc.seed = Some(family.seed);
            }
            Ok(doc)
        }
        Command::Reproduce { fixture, document } => {
            let id: FixtureId = fixture.parse().map_err(|_| Failure(format!("unknown fixture {fixture:?}")))?;
            let rep = reproduce_paper_example(id);
            let mut body = serde_json::to_value(&rep)?;
            let mut passed = rep.passed;
            if let Some(path) = document {
                let loaded = load(&path, diag)?;
                let same = loaded.instance == fixture_instance(id, Completion::Ascending);
                body["document_matches"] = json!(same);
                passed &= same;
            }
            let mut doc = ReportDocument::new(echo, body);
            doc.instance_digest = Some(rep.instance_digest.clone());
            doc.passed = passed;
            Ok(doc)
        }
        Command::Generate { output, students, schools, seed, common_priority } => {
            let mode = if common_priority { PriorityMode::Common } else { PriorityMode::Arbitrary };
            let config = FamilyConfig::random((students, students), (schools, schools), seed, 1).with_priority(mode);
            config.validate()?;
            let inst = random_instance(&config, seed);
            save_instance(&inst, &Roster::for_instance(&inst), &output)?;
            let mut doc = ReportDocument::new(echo, json!({ "written": output.display().to_string() }));
            doc.seed = Some(seed);
            Ok(with_digest(doc, &inst))
        }
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn cli_dispatch<I, T>(argv: I) -> CliOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let echo: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutcome { code: EXIT_USAGE, stdout: String::new(), stderr: text }
            } else {
                CliOutcome { code: EXIT_OK, stdout: text, stderr: String::new() }
            };
        }
    };
    let mut diag = String::new();
    match execute(cli.command, echo, &mut diag) {
        Ok(report) => CliOutcome {
            code: if report.passed { EXIT_OK } else { EXIT_MISMATCH },
            stdout: report.to_json(),
            stderr: diag,
        },
        Err(Failure(msg)) => {
            diag.push_str(&format!("error: {msg}\n"));
            CliOutcome { code: EXIT_USAGE, stdout: String::new(), stderr: diag }
        }
    }
}
