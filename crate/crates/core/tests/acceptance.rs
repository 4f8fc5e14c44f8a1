//! Acceptance criteria, one printed line each. Runs without the libtest
//! harness so the lines show under a plain `cargo test`.

mod common;

use std::time::{Duration, Instant};

use school_choice::cli::cli_dispatch;
use school_choice::fairness::stable_set_bruteforce;
use school_choice::mechanisms::{deferred_acceptance, run_mechanism, MechanismSpec};
use school_choice::model::{Instance, SchoolId, StudentId};
use school_choice::strategy::{
    boston_equilibrium_outcome, gs_manipulating_students_fast, is_nash_equilibrium, manipulating_students,
    sd_equilibrium_outcome, semi_sophisticated_outcome, SophisticationPartition,
};
use school_choice::verify::generate::sample_seed;
use school_choice::verify::{
    check_claim, enumerate_instances, fixture_instance, reproduce_paper_example, ClaimId, ClaimParams, ClaimReport,
    ClaimResult, Completion, FamilyConfig, FixtureId, FpfPolicy, PriorityMode, PrioritySet,
};

const FIXTURE_BUDGET: Duration = Duration::from_secs(1);
const T1_BUDGET: Duration = Duration::from_secs(30);
const T2_T4_BUDGET: Duration = Duration::from_secs(60);

const T1_SAMPLES: usize = 50_000;
const P1_SAMPLES: usize = 50_000;
const T3_SAMPLES: usize = 20_000;
const ORACLE_SAMPLES: usize = 2_000;
const RH_SAMPLES: usize = 1_000;
const NASH_SAMPLES: usize = 500;
const T5_T6_SAMPLES: usize = 5_000;
// Comparisons are exact: a single violation fails its criterion.

struct Line {
    label: String,
    ok: bool,
    detail: String,
}

fn line(label: impl Into<String>, ok: bool, detail: impl Into<String>) -> Line {
    Line { label: label.into(), ok, detail: detail.into() }
}

fn confirmed(r: &ClaimReport) -> bool {
    r.result == ClaimResult::Confirmed && r.witnesses.iter().all(|w| w.holds)
}

fn describe(r: &ClaimReport) -> String {
    let res = match &r.result {
        ClaimResult::Confirmed => "confirmed".to_string(),
        ClaimResult::Counterexample { index, details, .. } => format!("counterexample #{index}: {details}"),
    };
    let witnesses = r.witnesses.iter().filter(|w| w.holds).count();
    format!(
        "{}: {res}, {} checked, {} skipped, {} strict, {witnesses}/{} witnesses, {:.2?}",
        r.claim,
        r.instances_checked,
        r.instances_skipped,
        r.strict_instances,
        r.witnesses.len(),
        r.wall_time
    )
}

fn claim(id: ClaimId, config: &FamilyConfig, params: &ClaimParams) -> ClaimReport {
    check_claim(id, config, params).unwrap_or_else(|e| panic!("{id}: {e}"))
}

fn params(ks: &[usize], l: usize) -> ClaimParams {
    ClaimParams { ks: ks.to_vec(), l, ..ClaimParams::default() }
}

fn exhaustive_4x3() -> FamilyConfig {
    FamilyConfig::exhaustive(4, 3, PrioritySet::Canonical(2))
}

fn criterion_1() -> Line {
    let start = Instant::now();
    let failed: Vec<String> = FixtureId::ALL
        .into_iter()
        .map(reproduce_paper_example)
        .filter(|r| !r.passed)
        .map(|r| {
            let bad: Vec<&str> = r.checks.iter().filter(|c| !c.ok).map(|c| c.field.as_str()).collect();
            format!("{} [{}]", r.fixture.name(), bad.join("; "))
        })
        .collect();
    let took = start.elapsed();
    let ok = failed.is_empty() && took < FIXTURE_BUDGET;
    let detail = if failed.is_empty() { format!("6 fixtures exact in {took:.2?}") } else { failed.join(", ") };
    line("1 fixture exactness", ok, detail)
}

fn criterion_2() -> Line {
    let inst = fixture_instance(FixtureId::Ex3n7, Completion::Ascending);
    let run = |s: MechanismSpec| run_mechanism(&s, &inst).unwrap();
    let ch1 = run(MechanismSpec::chinese(1));
    let ch3 = run(MechanismSpec::chinese(3));
    let b3 = run(MechanismSpec::boston().with_k(3));
    let g3 = run(MechanismSpec::gs().with_k(3));
    line("2 chinese identities", ch1 == b3 && ch3 == g3, format!("Ch(1) = {ch1}; Ch(3) = {ch3}"))
}

fn criterion_3() -> Line {
    let start = Instant::now();
    let cfg = FamilyConfig::random((1, 5), (1, 4), 3, T1_SAMPLES);
    let r = claim(ClaimId::T1, &cfg, &params(&[2, 3], 2));
    let took = start.elapsed();
    let ok = confirmed(&r) && r.instances_checked == T1_SAMPLES && took < T1_BUDGET;
    line("3 beta^k vs GS^k sweep", ok, format!("{}; total {took:.2?}", describe(&r)))
}

fn criterion_4() -> Line {
    let start = Instant::now();
    let cfg = exhaustive_4x3();
    let p = params(&[3], 2);
    let t2 = claim(ClaimId::T2, &cfg, &p);
    let t4 = claim(ClaimId::T4, &cfg, &p);
    let took = start.elapsed();
    let expected = 65_536 * 2;
    let ok = confirmed(&t2)
        && confirmed(&t4)
        && t2.instances_checked == expected
        && t4.instances_checked == expected
        && t4.strict_instances >= 1
        && took < T2_T4_BUDGET;
    line("4 GS^l vs GS^k exhaustive", ok, format!("{} | {}; total {took:.2?}", describe(&t2), describe(&t4)))
}

fn criterion_5() -> Line {
    let cfg = FamilyConfig::random((1, 5), (1, 4), 5, P1_SAMPLES)
        .with_priority(PriorityMode::Common)
        .with_fpf(FpfPolicy::RandomNonEmpty);
    let r = claim(ClaimId::P1, &cfg, &params(&[2, 3], 2));
    let ok = confirmed(&r) && r.instances_checked == P1_SAMPLES;
    line("5 FPF^k vs SD^k sweep", ok, describe(&r))
}

fn criterion_6() -> Line {
    let cfg = FamilyConfig::random((1, 5), (1, 4), 6, T3_SAMPLES);
    let p = ClaimParams { e_pairs: vec![(1, 2), (1, 3), (2, 4)], ..ClaimParams::default() };
    let r = claim(ClaimId::T3, &cfg, &p);
    line("6 Ch(M) vs Ch(M') sweep", confirmed(&r) && r.instances_checked == T3_SAMPLES, describe(&r))
}

fn criterion_7() -> Line {
    let cfg = exhaustive_4x3();
    let p = params(&[2, 3], 2);
    let reports: Vec<ClaimReport> =
        [ClaimId::TM, ClaimId::C1, ClaimId::P5, ClaimId::P6].into_iter().map(|c| claim(c, &cfg, &p)).collect();
    let ok = reports.iter().all(confirmed) && reports[2].instances_checked == 65_536;
    let detail: Vec<String> = reports.iter().map(describe).collect();
    line("7 manipulation and stability", ok, detail.join(" | "))
}

fn random_family(seed: u64, samples: usize, mode: PriorityMode) -> Vec<Instance> {
    let cfg = FamilyConfig::random((1, 5), (1, 4), seed, samples).with_priority(mode);
    enumerate_instances(&cfg).unwrap().iter().collect()
}

fn criterion_8() -> Line {
    let mut violations = Vec::new();
    for (idx, inst) in random_family(81, ORACLE_SAMPLES, PriorityMode::Arbitrary).iter().enumerate() {
        for k in [2, 3] {
            let fast = gs_manipulating_students_fast(inst, k).unwrap();
            let slow = manipulating_students(&MechanismSpec::gs().with_k(k), inst).unwrap();
            if fast != slow {
                violations.push(format!("manipulators #{idx} k={k}"));
            }
        }
    }
    for (idx, inst) in random_family(82, ORACLE_SAMPLES, PriorityMode::Arbitrary).iter().enumerate() {
        for l in [2, 3] {
            match semi_sophisticated_outcome(inst, l) {
                Ok(out) => {
                    let reported: Vec<Vec<SchoolId>> = out.profile.iter().map(|r| r.prefix(l).to_vec()).collect();
                    let extended: Vec<Vec<SchoolId>> =
                        inst.students().map(|i| inst.preference(i).prefix(out.limits.limit(i)).to_vec()).collect();
                    let direct = common::da(inst, &reported);
                    if direct != out.matching || direct != common::da(inst, &extended) {
                        violations.push(format!("semi paths #{idx} l={l}"));
                    }
                }
                Err(e) => violations.push(format!("semi #{idx} l={l}: {e}")),
            }
        }
    }
    for (idx, inst) in random_family(83, RH_SAMPLES, PriorityMode::Arbitrary).iter().enumerate() {
        let da = deferred_acceptance(inst);
        let set = stable_set_bruteforce(inst).unwrap();
        let rank = |i: StudentId, s: Option<SchoolId>| {
            let list = inst.preference(i).schools();
            s.map_or(list.len(), |s| list.iter().position(|&x| x == s).unwrap())
        };
        let optimal =
            set.iter().all(|other| inst.students().all(|i| rank(i, da.school_of(i)) <= rank(i, other.school_of(i))));
        if !set.contains(&da) || !optimal || set != common::stable_set(inst) {
            violations.push(format!("stable set #{idx}"));
        }
    }
    let detail = format!(
        "{} violations over {ORACLE_SAMPLES} + {ORACLE_SAMPLES} + {RH_SAMPLES} instances{}",
        violations.len(),
        violations.first().map(|v| format!(", first {v}")).unwrap_or_default()
    );
    line("8 oracle equivalences", violations.is_empty(), detail)
}

fn criterion_9() -> Line {
    let mut violations = Vec::new();
    for (idx, inst) in random_family(91, NASH_SAMPLES, PriorityMode::Common).iter().enumerate() {
        let bits = sample_seed(91, idx);
        let part = SophisticationPartition::from_mask((0..inst.n_students()).map(|i| bits >> i & 1 == 1).collect());
        for k in [2, 3] {
            let b = boston_equilibrium_outcome(inst, &part, k).unwrap();
            let s = sd_equilibrium_outcome(inst, &part, k).unwrap();
            let b_ok = is_nash_equilibrium(&MechanismSpec::boston().with_k(k), inst, &part, &b.profile).unwrap();
            let s_ok = is_nash_equilibrium(&MechanismSpec::sd().with_k(k), inst, &part, &s.profile).unwrap();
            if !b_ok || !s_ok {
                violations.push(format!("#{idx} k={k} boston {b_ok} sd {s_ok}"));
            }
        }
    }
    let p = params(&[3], 2);
    let t5_family = FamilyConfig::random((1, 5), (1, 4), 92, T5_T6_SAMPLES).with_priority(PriorityMode::Common);
    let t5 = claim(ClaimId::T5, &t5_family, &p);
    let t6 = claim(ClaimId::T6, &FamilyConfig::random((1, 5), (1, 4), 93, T5_T6_SAMPLES), &p);
    let ok = violations.is_empty()
        && confirmed(&t5)
        && confirmed(&t6)
        && t5.instances_checked == T5_T6_SAMPLES
        && t6.instances_checked == T5_T6_SAMPLES;
    let detail = format!(
        "{} of {NASH_SAMPLES} instances fail the Nash check | {} | {}",
        violations.len(),
        describe(&t5),
        describe(&t6)
    );
    line("9 equilibrium validation", ok, detail)
}

fn criterion_10() -> Line {
    let argv = [
        "school-choice",
        "verify",
        "T4",
        "--k",
        "3",
        "--l",
        "2",
        "--students",
        "5",
        "--schools",
        "4",
        "--seed",
        "10",
        "--samples",
        "4000",
    ];
    let a = cli_dispatch(argv);
    let b = cli_dispatch(argv);
    let other = cli_dispatch(argv.map(|s| if s == "10" { "11" } else { s }));
    let ok = a.code == 0 && a.stdout == b.stdout && !a.stdout.is_empty() && other.stdout != a.stdout;
    line("10 determinism", ok, format!("{} bytes, identical: {}", a.stdout.len(), a.stdout == b.stdout))
}

/// Catalog entries beyond the numbered criteria.
fn supplementary() -> Vec<Line> {
    let cfg = FamilyConfig::random((1, 5), (1, 4), 100, 5_000);
    let common = FamilyConfig::random((1, 5), (1, 4), 101, 2_000).with_priority(PriorityMode::Common);
    let p = params(&[2, 3], 2);
    let mut out = Vec::new();
    for (id, family) in [
        (ClaimId::L1, &cfg),
        (ClaimId::L3, &cfg),
        (ClaimId::L5, &cfg),
        (ClaimId::L6, &cfg),
        (ClaimId::RH, &cfg),
        (ClaimId::PE, &common),
    ] {
        let r = claim(id, family, &p);
        out.push(line(format!("supplementary {id}"), confirmed(&r), describe(&r)));
    }
    out
}

fn main() {
    let mut lines = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ];
    lines.extend(supplementary());
    for l in &lines {
        println!("{} {}: {}", if l.ok { "PASS" } else { "FAIL" }, l.label, l.detail);
    }
    let failed = lines.iter().filter(|l| !l.ok).count();
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
