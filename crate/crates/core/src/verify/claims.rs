//! The claim catalog. Each claim is a universally quantified statement
//! checked instance by instance over a family; strict ("there is a
//! problem where ...") parts are bound to fixed witness instances.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fixtures::{fixture_instance, Completion, FixtureId};
use super::generate::{enumerate_instances, FamilyConfig};
use super::VerifyError;
use crate::fairness::{blocking_students, is_stable, stable_set_bruteforce};
use crate::mechanisms::{deferred_acceptance, deferred_acceptance_on_profile, run_mechanism, MechanismSpec};
use crate::model::{
    outcome_rank, validate_instance, ConstraintVector, Instance, Matching, PreferenceList, PriorityOrder, RawInstance,
    SchoolId, StudentId,
};
use crate::strategy::{
    boston_equilibrium_outcome, manipulating_students, sd_equilibrium_outcome, semi_sophisticated_outcome,
    SophisticationPartition,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ClaimId {
    T1,
    P1,
    L1,
    T2,
    T3,
    T4,
    T5,
    T6,
    TM,
    C1,
    P5,
    P6,
    RH,
    L3,
    L5,
    L6,
    PE,
}

impl ClaimId {
    pub const ALL: [ClaimId; 17] = [
        ClaimId::T1,
        ClaimId::P1,
        ClaimId::L1,
        ClaimId::T2,
        ClaimId::T3,
        ClaimId::T4,
        ClaimId::T5,
        ClaimId::T6,
        ClaimId::TM,
        ClaimId::C1,
        ClaimId::P5,
        ClaimId::P6,
        ClaimId::RH,
        ClaimId::L3,
        ClaimId::L5,
        ClaimId::L6,
        ClaimId::PE,
    ];

    pub fn statement(self) -> &'static str {
        match self {
            ClaimId::T1 => "beta^k stable implies GS^k stable",
            ClaimId::P1 => "under a common priority, FPF^k stable implies SD^k stable",
            ClaimId::L1 => "GS^k stable iff GS^k equals unconstrained GS",
            ClaimId::T2 => "for k > l, GS^l stable implies GS^k stable",
            ClaimId::T3 => "for M' a multiple of M, Ch(M) stable implies Ch(M') stable",
            ClaimId::T4 => "for k > l, GS^l has at least as many blocking students as GS^k",
            ClaimId::T5 => {
                "under a common priority and any sincere set, the SD^l equilibrium has at least as many blocking students as the SD^k equilibrium"
            }
            ClaimId::T6 => {
                "with semi-sophisticated students, the GS^l outcome has at least as many blocking students as the GS^k outcome"
            }
            ClaimId::TM => {
                "blocking students of beta^k manipulate beta^k; manipulating students of GS^k block GS^k"
            }
            ClaimId::C1 => "beta^k not manipulable implies stable; GS^k stable implies not manipulable",
            ClaimId::P5 => "under a common priority, SD^k stable iff not manipulable",
            ClaimId::P6 => "FPF^k stable implies GS^k not manipulable",
            ClaimId::RH => {
                "all stable matchings match the same students and fill schools equally; DA is stable and student-optimal"
            }
            ClaimId::L3 => "every blocking student of GS under per-student truncation is unmatched",
            ClaimId::L5 => "for per-student limits l <= k, GS^l has at least as many blocking students as GS^k",
            ClaimId::L6 => {
                "GS^l on the semi-sophisticated profile equals GS on the true lists cut at l plus dropped schools"
            }
            ClaimId::PE => "under a common priority, a stable beta^k equilibrium implies a stable SD^k equilibrium",
        }
    }

    pub fn needs_common_priority(self) -> bool {
        matches!(self, ClaimId::P1 | ClaimId::T5 | ClaimId::P5 | ClaimId::PE)
    }
}

impl fmt::Display for ClaimId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for ClaimId {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClaimId::ALL
            .into_iter()
            .find(|c| c.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| VerifyError::UnknownClaim(s.to_string()))
    }
}

/// Constraint values a claim is checked at.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimParams {
    /// Values of `k`; claims comparing two constraints use those above `l`.
    pub ks: Vec<usize>,
    pub l: usize,
    /// `(M, M')` round lengths for the Chinese parallel comparison.
    pub e_pairs: Vec<(usize, usize)>,
}

impl Default for ClaimParams {
    fn default() -> Self {
        ClaimParams { ks: vec![2, 3], l: 2, e_pairs: vec![(1, 2), (1, 3), (2, 4)] }
    }
}

impl ClaimParams {
    fn above_l(&self) -> impl Iterator<Item = usize> + '_ {
        self.ks.iter().copied().filter(move |&k| k > self.l)
    }

    fn validate(&self, claim: ClaimId) -> Result<(), VerifyError> {
        let bad = |msg: String| Err(VerifyError::InvalidParams(msg));
        match claim {
            ClaimId::T3 => {
                if self.e_pairs.is_empty() {
                    return bad("no (M, M') pairs given".into());
                }
                for &(a, b) in &self.e_pairs {
                    if a == 0 || b == 0 || b % a != 0 {
                        return bad(format!("({a}, {b}): both must be positive and M' a multiple of M"));
                    }
                }
                Ok(())
            }
            ClaimId::T2 | ClaimId::T4 | ClaimId::T5 | ClaimId::T6 => {
                let min_l = if matches!(claim, ClaimId::T5 | ClaimId::T6) { 2 } else { 1 };
                if self.l < min_l {
                    return bad(format!("l must be at least {min_l}"));
                }
                if self.above_l().next().is_none() {
                    return bad(format!("need some k above l = {}", self.l));
                }
                Ok(())
            }
            ClaimId::RH | ClaimId::L3 | ClaimId::L5 => Ok(()),
            ClaimId::L6 => {
                if self.l < 2 {
                    return bad("l must be at least 2".into());
                }
                Ok(())
            }
            _ => {
                if self.ks.is_empty() || self.ks.iter().any(|&k| k < 2) {
                    return bad(format!("every k must be at least 2, got {:?}", self.ks));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum ClaimResult {
    Confirmed,
    Counterexample { index: usize, instance: RawInstance, details: String },
}

/// Outcome of a fixed witness for the strict part of a claim.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessCheck {
    pub name: String,
    pub holds: bool,
    pub details: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClaimReport {
    pub claim: ClaimId,
    pub statement: String,
    pub family: String,
    pub params: ClaimParams,
    pub instances_checked: usize,
    /// Instances outside the claim's hypotheses, e.g. without a common
    /// priority.
    pub instances_skipped: usize,
    /// Instances where the comparison is strict.
    pub strict_instances: usize,
    pub result: ClaimResult,
    pub witnesses: Vec<WitnessCheck>,
    pub passed: bool,
    /// Not serialised, so reports stay byte-identical across runs.
    #[serde(skip)]
    pub wall_time: Duration,
}

enum Verdict {
    Skip,
    Hold { strict: bool },
    Violated(String),
}

fn run(spec: &MechanismSpec, inst: &Instance) -> Result<Matching, VerifyError> {
    Ok(run_mechanism(spec, inst)?)
}

fn count(m: &Matching, inst: &Instance) -> usize {
    blocking_students(m, inst).len()
}

fn show(v: &[StudentId]) -> String {
    format!("{{{}}}", v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", "))
}

/// Every subset of schools as a list, in mask order.
fn school_subsets(m: usize, non_empty: bool) -> Vec<Vec<SchoolId>> {
    let start = usize::from(non_empty);
    (start..(1usize << m)).map(|mask| (0..m).filter(|s| mask >> s & 1 == 1).map(SchoolId).collect()).collect()
}

fn fpf_sets(inst: &Instance, include_empty: bool) -> Vec<Vec<SchoolId>> {
    let own = inst.fpf_schools();
    if own.is_empty() {
        school_subsets(inst.n_schools(), !include_empty)
    } else {
        vec![own]
    }
}

/// Uniform limits `1..=m` plus staggered vectors `1 + (i + offset) mod m`.
fn limit_vectors(n: usize, m: usize) -> Vec<ConstraintVector> {
    let mut out: Vec<Vec<usize>> = (1..=m).map(|k| vec![k; n]).collect();
    for offset in 0..n.max(1) {
        out.push((0..n).map(|i| 1 + (i + offset) % m).collect());
    }
    out.sort();
    out.dedup();
    out.into_iter().map(|v| ConstraintVector::new(v).expect("limits are positive")).collect()
}

fn gs_with_limits(inst: &Instance, limits: &ConstraintVector) -> Matching {
    deferred_acceptance_on_profile(&inst.profile_with_limits(limits), inst.priorities(), inst.capacities(), None)
}

fn partitions(n: usize) -> impl Iterator<Item = SophisticationPartition> {
    (0..(1usize << n)).map(move |mask| SophisticationPartition::from_mask((0..n).map(|i| mask >> i & 1 == 1).collect()))
}

fn evaluate(claim: ClaimId, p: &ClaimParams, inst: &Instance) -> Result<Verdict, VerifyError> {
    if claim.needs_common_priority() && !inst.has_common_priority() {
        return Ok(Verdict::Skip);
    }
    let mut strict = false;
    match claim {
        ClaimId::T1 => {
            for &k in &p.ks {
                let b = is_stable(&run(&MechanismSpec::boston().with_k(k), inst)?, inst);
                let g = is_stable(&run(&MechanismSpec::gs().with_k(k), inst)?, inst);
                if b && !g {
                    return Ok(Verdict::Violated(format!("k={k}: beta^k stable, GS^k unstable")));
                }
                strict |= !b && g;
            }
        }
        ClaimId::P1 => {
            for set in fpf_sets(inst, false) {
                let with_set = inst.with_fpf_schools(&set);
                for &k in &p.ks {
                    let f = is_stable(&run(&MechanismSpec::fpf().with_k(k), &with_set)?, inst);
                    let s = is_stable(&run(&MechanismSpec::sd().with_k(k), inst)?, inst);
                    if f && !s {
                        return Ok(Verdict::Violated(format!("k={k}, fpf {set:?}: FPF^k stable, SD^k unstable")));
                    }
                    strict |= !f && s;
                }
            }
        }
        ClaimId::L1 => {
            let full = deferred_acceptance(inst);
            for &k in &p.ks {
                let g = run(&MechanismSpec::gs().with_k(k), inst)?;
                if is_stable(&g, inst) != (g == full) {
                    return Ok(Verdict::Violated(format!("k={k}: GS^k = {g}, GS = {full}")));
                }
            }
        }
        ClaimId::T2 => {
            let sl = is_stable(&run(&MechanismSpec::gs().with_k(p.l), inst)?, inst);
            for k in p.above_l() {
                let sk = is_stable(&run(&MechanismSpec::gs().with_k(k), inst)?, inst);
                if sl && !sk {
                    return Ok(Verdict::Violated(format!("k={k}, l={}: GS^l stable, GS^k unstable", p.l)));
                }
                strict |= !sl && sk;
            }
        }
        ClaimId::T3 => {
            for &(a, b) in &p.e_pairs {
                let sa = is_stable(&run(&MechanismSpec::chinese(a), inst)?, inst);
                let sb = is_stable(&run(&MechanismSpec::chinese(b), inst)?, inst);
                if sa && !sb {
                    return Ok(Verdict::Violated(format!("Ch({a}) stable, Ch({b}) unstable")));
                }
                strict |= !sa && sb;
            }
        }
        ClaimId::T4 => {
            let cl = count(&run(&MechanismSpec::gs().with_k(p.l), inst)?, inst);
            for k in p.above_l() {
                let ck = count(&run(&MechanismSpec::gs().with_k(k), inst)?, inst);
                if cl < ck {
                    return Ok(Verdict::Violated(format!(
                        "k={k}, l={}: {cl} blocking under GS^l, {ck} under GS^k",
                        p.l
                    )));
                }
                strict |= cl > ck;
            }
        }
        ClaimId::T5 => {
            for part in partitions(inst.n_students()) {
                let cl = count(&sd_equilibrium_outcome(inst, &part, p.l)?.matching, inst);
                for k in p.above_l() {
                    let ck = count(&sd_equilibrium_outcome(inst, &part, k)?.matching, inst);
                    if cl < ck {
                        return Ok(Verdict::Violated(format!(
                            "sincere {}, k={k}, l={}: {cl} blocking at l, {ck} at k",
                            show(&part.sincere()),
                            p.l
                        )));
                    }
                    strict |= cl > ck;
                }
            }
        }
        ClaimId::T6 => {
            let cl = count(&semi_sophisticated_outcome(inst, p.l)?.matching, inst);
            for k in p.above_l() {
                let ck = count(&semi_sophisticated_outcome(inst, k)?.matching, inst);
                if cl < ck {
                    return Ok(Verdict::Violated(format!("k={k}, l={}: {cl} blocking at l, {ck} at k", p.l)));
                }
                strict |= cl > ck;
            }
        }
        ClaimId::TM => {
            for &k in &p.ks {
                let spec = MechanismSpec::boston().with_k(k);
                let blocking = blocking_students(&run(&spec, inst)?, inst);
                let manip = manipulating_students(&spec, inst)?;
                if let Some(i) = blocking.iter().find(|i| !manip.contains(i)) {
                    return Ok(Verdict::Violated(format!("k={k}: {i} blocks beta^k but cannot manipulate it")));
                }
                let spec = MechanismSpec::gs().with_k(k);
                let blocking = blocking_students(&run(&spec, inst)?, inst);
                let manip = manipulating_students(&spec, inst)?;
                if let Some(i) = manip.iter().find(|i| !blocking.contains(i)) {
                    return Ok(Verdict::Violated(format!("k={k}: {i} manipulates GS^k but does not block it")));
                }
            }
        }
        ClaimId::C1 => {
            for &k in &p.ks {
                let spec = MechanismSpec::boston().with_k(k);
                if manipulating_students(&spec, inst)?.is_empty() && !is_stable(&run(&spec, inst)?, inst) {
                    return Ok(Verdict::Violated(format!("k={k}: beta^k not manipulable but unstable")));
                }
                let spec = MechanismSpec::gs().with_k(k);
                if is_stable(&run(&spec, inst)?, inst) {
                    let manip = manipulating_students(&spec, inst)?;
                    if !manip.is_empty() {
                        return Ok(Verdict::Violated(format!("k={k}: GS^k stable but {} manipulate", show(&manip))));
                    }
                }
            }
        }
        ClaimId::P5 => {
            for &k in &p.ks {
                let spec = MechanismSpec::sd().with_k(k);
                let stable = is_stable(&run(&spec, inst)?, inst);
                let manip = manipulating_students(&spec, inst)?;
                if stable != manip.is_empty() {
                    return Ok(Verdict::Violated(format!(
                        "k={k}: SD^k stable = {stable}, manipulating students {}",
                        show(&manip)
                    )));
                }
            }
        }
        ClaimId::P6 => {
            for &k in &p.ks {
                let mut manip: Option<Vec<StudentId>> = None;
                for set in fpf_sets(inst, true) {
                    let with_set = inst.with_fpf_schools(&set);
                    if !is_stable(&run(&MechanismSpec::fpf().with_k(k), &with_set)?, inst) {
                        continue;
                    }
                    let m = match &manip {
                        Some(m) => m,
                        None => manip.insert(manipulating_students(&MechanismSpec::gs().with_k(k), inst)?),
                    };
                    if !m.is_empty() {
                        return Ok(Verdict::Violated(format!(
                            "k={k}, fpf {set:?}: FPF^k stable but {} manipulate GS^k",
                            show(m)
                        )));
                    }
                }
            }
        }
        ClaimId::RH => {
            let set = stable_set_bruteforce(inst)?;
            let da = deferred_acceptance(inst);
            if !set.contains(&da) {
                return Ok(Verdict::Violated(format!("DA outcome {da} is not among the stable matchings")));
            }
            for other in &set {
                for i in inst.students() {
                    let pref = inst.preference(i).schools();
                    if outcome_rank(pref, other.school_of(i)) < outcome_rank(pref, da.school_of(i)) {
                        return Ok(Verdict::Violated(format!("{i} prefers stable matching {other} to DA {da}")));
                    }
                }
                if other.matched_students() != da.matched_students()
                    || other.fill_counts(inst.n_schools()) != da.fill_counts(inst.n_schools())
                {
                    return Ok(Verdict::Violated(format!(
                        "stable matchings {other} and {da} differ in who is matched"
                    )));
                }
            }
        }
        ClaimId::L3 => {
            for limits in limit_vectors(inst.n_students(), inst.n_schools()) {
                let mu = gs_with_limits(inst, &limits);
                if let Some(i) = blocking_students(&mu, inst).into_iter().find(|&i| mu.is_matched(i)) {
                    return Ok(Verdict::Violated(format!(
                        "limits {:?}: {i} blocks {mu} while matched",
                        limits.limits()
                    )));
                }
            }
        }
        ClaimId::L5 => {
            let vectors = limit_vectors(inst.n_students(), inst.n_schools());
            let counts: Vec<usize> = vectors.iter().map(|v| count(&gs_with_limits(inst, v), inst)).collect();
            for (a, va) in vectors.iter().enumerate() {
                for (b, vb) in vectors.iter().enumerate() {
                    let below = va.limits().iter().zip(vb.limits()).all(|(x, y)| x <= y);
                    if a != b && below {
                        if counts[a] < counts[b] {
                            return Ok(Verdict::Violated(format!(
                                "limits {:?} give {} blocking, larger limits {:?} give {}",
                                va.limits(),
                                counts[a],
                                vb.limits(),
                                counts[b]
                            )));
                        }
                        strict |= counts[a] > counts[b];
                    }
                }
            }
        }
        ClaimId::L6 => {
            let mut ls: Vec<usize> = std::iter::once(p.l).chain(p.ks.iter().copied()).filter(|&l| l >= 2).collect();
            ls.sort_unstable();
            ls.dedup();
            for l in ls {
                semi_sophisticated_outcome(inst, l)?;
            }
        }
        ClaimId::PE => {
            for part in partitions(inst.n_students()) {
                for &k in &p.ks {
                    let b = is_stable(&boston_equilibrium_outcome(inst, &part, k)?.matching, inst);
                    let s = is_stable(&sd_equilibrium_outcome(inst, &part, k)?.matching, inst);
                    if b && !s {
                        return Ok(Verdict::Violated(format!(
                            "sincere {}, k={k}: beta^k equilibrium stable, SD^k equilibrium unstable",
                            show(&part.sincere())
                        )));
                    }
                    strict |= !b && s;
                }
            }
        }
    }
    Ok(Verdict::Hold { strict })
}

fn evaluate_or_report(claim: ClaimId, p: &ClaimParams, inst: &Instance) -> Verdict {
    evaluate(claim, p, inst).unwrap_or_else(|e| Verdict::Violated(format!("error: {e}")))
}

/// Re-runs a claim on one standalone instance. `Some(details)` when the
/// claim still fails there.
pub fn replay_counterexample(
    claim: ClaimId,
    params: &ClaimParams,
    raw: &RawInstance,
) -> Result<Option<String>, VerifyError> {
    let inst = validate_instance(raw).map_err(|e| VerifyError::InvalidConfig(e.to_string()))?.instance;
    Ok(match evaluate_or_report(claim, params, &inst) {
        Verdict::Violated(d) => Some(d),
        _ => None,
    })
}

/// `n` students all listing `s1..sk` over `k + 1` unit schools, common
/// identity priority. Constraint `k` leaves it stable; any shorter one
/// leaves empty seats that unmatched students want.
pub fn counting_witness(k: usize) -> Instance {
    let prefs = vec![PreferenceList::new((0..k).map(SchoolId).collect()); k + 2];
    Instance::with_common_priority(prefs, PriorityOrder::identity(k + 2), vec![1; k + 1], &[])
        .expect("witness is valid")
}

/// `M + 2` students over `M + 1` unit schools where `Ch(M)` is unstable and
/// any longer round length is stable. `M − 1` filler students hold top
/// priority and want only `s2..sM`; two students list every school in
/// order and the last lists `s(M+1)` first.
pub fn chinese_witness(m: usize) -> Instance {
    let fillers = m - 1;
    let mut prefs: Vec<PreferenceList> = (0..fillers).map(|j| PreferenceList::new(vec![SchoolId(j + 1)])).collect();
    let all: Vec<SchoolId> = (0..=m).map(SchoolId).collect();
    prefs.push(PreferenceList::new(all.clone()));
    prefs.push(PreferenceList::new(all));
    let mut last = vec![SchoolId(m)];
    last.extend((0..m).map(SchoolId));
    prefs.push(PreferenceList::new(last));
    Instance::with_common_priority(prefs, PriorityOrder::identity(m + 2), vec![1; m + 1], &[])
        .expect("witness is valid")
}

fn witness_pair(name: String, inst: &Instance, weaker: &MechanismSpec, stronger: &MechanismSpec) -> WitnessCheck {
    let check = || -> Result<(bool, String), VerifyError> {
        let a = run(weaker, inst)?;
        let b = run(stronger, inst)?;
        let (sa, sb) = (is_stable(&a, inst), is_stable(&b, inst));
        Ok((!sa && sb, format!("{weaker} = {a} (stable: {sa}); {stronger} = {b} (stable: {sb})")))
    };
    match check() {
        Ok((holds, details)) => WitnessCheck { name, holds, details },
        Err(e) => WitnessCheck { name, holds: false, details: format!("error: {e}") },
    }
}

fn witnesses(claim: ClaimId, p: &ClaimParams) -> Vec<WitnessCheck> {
    let t1 = fixture_instance(FixtureId::T1Proof, Completion::Ascending);
    match claim {
        ClaimId::T1 => {
            p.ks.iter()
                .map(|&k| {
                    witness_pair(
                        format!("T1PROOF, k={k}"),
                        &t1,
                        &MechanismSpec::boston().with_k(k),
                        &MechanismSpec::gs().with_k(k),
                    )
                })
                .collect()
        }
        ClaimId::P1 => {
            let inst = t1.with_fpf_schools(&[SchoolId(1)]);
            p.ks.iter()
                .map(|&k| {
                    witness_pair(
                        format!("T1PROOF with fpf {{s2}}, k={k}"),
                        &inst,
                        &MechanismSpec::fpf().with_k(k),
                        &MechanismSpec::sd().with_k(k),
                    )
                })
                .collect()
        }
        ClaimId::T2 => p
            .above_l()
            .map(|k| {
                witness_pair(
                    format!("counting family, k={k}"),
                    &counting_witness(k),
                    &MechanismSpec::gs().with_k(p.l),
                    &MechanismSpec::gs().with_k(k),
                )
            })
            .collect(),
        ClaimId::T3 => p
            .e_pairs
            .iter()
            .filter(|&&(a, b)| b > a)
            .map(|&(a, b)| {
                witness_pair(
                    format!("chinese witness, M={a}, M'={b}"),
                    &chinese_witness(a),
                    &MechanismSpec::chinese(a),
                    &MechanismSpec::chinese(b),
                )
            })
            .collect(),
        ClaimId::T4 => p
            .above_l()
            .map(|k| {
                let inst = counting_witness(k);
                let name = format!("counting family, k={k}");
                let counts = run(&MechanismSpec::gs().with_k(p.l), &inst)
                    .and_then(|a| Ok((count(&a, &inst), count(&run(&MechanismSpec::gs().with_k(k), &inst)?, &inst))));
                match counts {
                    Ok((cl, ck)) => WitnessCheck {
                        name,
                        holds: cl > ck,
                        details: format!("{cl} blocking under GS^{}, {ck} under GS^{k}", p.l),
                    },
                    Err(e) => WitnessCheck { name, holds: false, details: format!("error: {e}") },
                }
            })
            .collect(),
        ClaimId::PE => {
            p.ks.iter()
                .map(|&k| {
                    let part = SophisticationPartition::all_sincere(t1.n_students());
                    let name = format!("T1PROOF all sincere, k={k}");
                    let res = boston_equilibrium_outcome(&t1, &part, k)
                        .and_then(|b| Ok((b.matching, sd_equilibrium_outcome(&t1, &part, k)?.matching)));
                    match res {
                        Ok((b, s)) => {
                            let (sb, ss) = (is_stable(&b, &t1), is_stable(&s, &t1));
                            WitnessCheck {
                                name,
                                holds: !sb && ss,
                                details: format!(
                                    "beta^{k} equilibrium {b} (stable: {sb}); SD^{k} equilibrium {s} (stable: {ss})"
                                ),
                            }
                        }
                        Err(e) => WitnessCheck { name, holds: false, details: format!("error: {e}") },
                    }
                })
                .collect()
        }
        ClaimId::TM => {
            let inst = fixture_instance(FixtureId::Ex3n7, Completion::Ascending);
            let spec = MechanismSpec::boston().with_k(3);
            let name = "EX3n7: i4 blocks and manipulates beta^3".to_string();
            let res = run(&spec, &inst)
                .and_then(|m| Ok((blocking_students(&m, &inst), manipulating_students(&spec, &inst)?)));
            vec![match res {
                Ok((b, mp)) => WitnessCheck {
                    name,
                    holds: b.contains(&StudentId(3)) && mp.contains(&StudentId(3)),
                    details: format!("blocking {}, manipulating {}", show(&b), show(&mp)),
                },
                Err(e) => WitnessCheck { name, holds: false, details: format!("error: {e}") },
            }]
        }
        ClaimId::C1 => {
            // the converse of the second part fails: unstable yet not manipulable
            let inst = fixture_instance(FixtureId::Ex5, Completion::Ascending);
            let spec = MechanismSpec::gs().with_k(2);
            let name = "EX5: GS^2 unstable and not manipulable".to_string();
            let res = run(&spec, &inst).and_then(|m| Ok((is_stable(&m, &inst), manipulating_students(&spec, &inst)?)));
            vec![match res {
                Ok((st, mp)) => WitnessCheck {
                    name,
                    holds: !st && mp.is_empty(),
                    details: format!("stable: {st}, manipulating {}", show(&mp)),
                },
                Err(e) => WitnessCheck { name, holds: false, details: format!("error: {e}") },
            }]
        }
        _ => Vec::new(),
    }
}

#[derive(Default)]
struct Tally {
    checked: usize,
    skipped: usize,
    strict: usize,
    first: Option<(usize, String)>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.checked += other.checked;
        self.skipped += other.skipped;
        self.strict += other.strict;
        self.first = match (self.first, other.first) {
            (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        self
    }
}

fn guard(claim: ClaimId, config: &FamilyConfig) -> Result<(), VerifyError> {
    use crate::fairness::{BRUTEFORCE_MAX_SCHOOLS, BRUTEFORCE_MAX_STUDENTS};
    if claim == ClaimId::RH
        && (config.students.1 > BRUTEFORCE_MAX_STUDENTS || config.schools.1 > BRUTEFORCE_MAX_SCHOOLS)
    {
        return Err(VerifyError::SizeGuard(format!(
            "stable-set enumeration allows at most {BRUTEFORCE_MAX_STUDENTS} students and {BRUTEFORCE_MAX_SCHOOLS} schools"
        )));
    }
    if matches!(claim, ClaimId::T5 | ClaimId::PE) && config.students.1 > 10 {
        return Err(VerifyError::SizeGuard("sincere-set sweeps allow at most 10 students".into()));
    }
    Ok(())
}

/// Checks `claim` on every instance of the family described by `config`.
/// The reported counterexample is the one with the lowest family index,
/// whatever the schedule.
pub fn check_claim(claim: ClaimId, config: &FamilyConfig, params: &ClaimParams) -> Result<ClaimReport, VerifyError> {
    params.validate(claim)?;
    guard(claim, config)?;
    let family = enumerate_instances(config)?;
    let start = Instant::now();
    let tally = (0..family.len())
        .into_par_iter()
        .fold(Tally::default, |mut t, idx| {
            match evaluate_or_report(claim, params, &family.get(idx)) {
                Verdict::Skip => t.skipped += 1,
                Verdict::Hold { strict } => {
                    t.checked += 1;
                    t.strict += usize::from(strict);
                }
                Verdict::Violated(d) => {
                    t.checked += 1;
                    if t.first.as_ref().is_none_or(|(i, _)| idx < *i) {
                        t.first = Some((idx, d));
                    }
                }
            }
            t
        })
        .reduce(Tally::default, Tally::merge);
    let result = match tally.first {
        None => ClaimResult::Confirmed,
        Some((index, details)) => ClaimResult::Counterexample { index, instance: family.get(index).to_raw(), details },
    };
    let witnesses = witnesses(claim, params);
    let passed = result == ClaimResult::Confirmed && witnesses.iter().all(|w| w.holds);
    Ok(ClaimReport {
        claim,
        statement: claim.statement().to_string(),
        family: config.summary(),
        params: params.clone(),
        instances_checked: tally.checked,
        instances_skipped: tally.skipped,
        strict_instances: tally.strict,
        result,
        witnesses,
        passed,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::generate::PrioritySet;

    #[test]
    fn claim_ids_parse() {
        for c in ClaimId::ALL {
            assert_eq!(c.to_string().parse::<ClaimId>().unwrap(), c);
        }
        assert!(matches!("T9".parse::<ClaimId>(), Err(VerifyError::UnknownClaim(_))));
    }

    #[test]
    fn params_are_checked() {
        let cfg = FamilyConfig::exhaustive(2, 2, PrioritySet::Canonical(1));
        let p = ClaimParams { ks: vec![1], ..ClaimParams::default() };
        assert!(matches!(check_claim(ClaimId::T1, &cfg, &p), Err(VerifyError::InvalidParams(_))));
        let p = ClaimParams { e_pairs: vec![(2, 3)], ..ClaimParams::default() };
        assert!(matches!(check_claim(ClaimId::T3, &cfg, &p), Err(VerifyError::InvalidParams(_))));
        let p = ClaimParams { ks: vec![2], l: 2, ..ClaimParams::default() };
        assert!(matches!(check_claim(ClaimId::T4, &cfg, &p), Err(VerifyError::InvalidParams(_))));
    }

    #[test]
    fn witnesses_hold() {
        for k in 2..=4 {
            let w = counting_witness(k);
            assert!(is_stable(&run(&MechanismSpec::gs().with_k(k), &w).unwrap(), &w));
            assert!(!is_stable(&run(&MechanismSpec::gs().with_k(k - 1), &w).unwrap(), &w));
        }
        for m in 1..=3 {
            let w = chinese_witness(m);
            assert!(!is_stable(&run(&MechanismSpec::chinese(m), &w).unwrap(), &w));
            assert!(is_stable(&run(&MechanismSpec::chinese(2 * m), &w).unwrap(), &w));
        }
        assert_eq!(chinese_witness(1), fixture_instance(FixtureId::T1Proof, Completion::Ascending));
    }

    #[test]
    fn small_exhaustive_claims_pass() {
        let cfg = FamilyConfig::exhaustive(3, 2, PrioritySet::Canonical(2));
        let p = ClaimParams { ks: vec![2], l: 1, e_pairs: vec![(1, 2)] };
        for c in
            [ClaimId::T1, ClaimId::L1, ClaimId::T3, ClaimId::TM, ClaimId::C1, ClaimId::RH, ClaimId::L3, ClaimId::L5]
        {
            let r = check_claim(c, &cfg, &p).unwrap();
            assert_eq!(r.result, ClaimResult::Confirmed, "{c}");
            assert_eq!(r.instances_checked, 250);
        }
    }

    #[test]
    fn limit_vectors_cover_uniform_and_staggered() {
        let v = limit_vectors(3, 2);
        let raw: Vec<Vec<usize>> = v.iter().map(|c| c.limits().to_vec()).collect();
        assert!(raw.contains(&vec![1, 1, 1]));
        assert!(raw.contains(&vec![2, 2, 2]));
        assert!(raw.contains(&vec![1, 2, 1]));
        assert!(raw.contains(&vec![2, 1, 2]));
    }
}
