//! The worked examples as fully specified instances, and their field-by-field
//! reproduction.
//!
//! Table entries left open in the source examples are completed with the
//! remaining indices in ascending order; a descending completion is also
//! run and must display the same results.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::fairness::{blocking_pairs, blocking_students, is_stable, stable_set_bruteforce, BlockingPair};
use crate::mechanisms::{chinese_parallel, fpf_adjusted_priorities, run_mechanism, MechanismSpec};
use crate::model::{
    truncate_preferences, ConstraintVector, Instance, Matching, PreferenceList, PriorityOrder, SchoolId, StudentId,
};
use crate::strategy::{
    boston_equilibrium_outcome, competitive_schools, gs_manipulating_students_fast, manipulating_students,
    sd_equilibrium_outcome, semi_sophisticated_outcome, SophisticationPartition,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FixtureId {
    #[serde(rename = "EX1")]
    Ex1,
    #[serde(rename = "EX2")]
    Ex2,
    #[serde(rename = "EX3n7")]
    Ex3n7,
    #[serde(rename = "EX5")]
    Ex5,
    #[serde(rename = "EX42")]
    Ex42,
    #[serde(rename = "T1PROOF")]
    T1Proof,
}

impl FixtureId {
    pub const ALL: [FixtureId; 6] =
        [FixtureId::Ex1, FixtureId::Ex2, FixtureId::Ex3n7, FixtureId::Ex5, FixtureId::Ex42, FixtureId::T1Proof];

    pub fn name(self) -> &'static str {
        match self {
            FixtureId::Ex1 => "EX1",
            FixtureId::Ex2 => "EX2",
            FixtureId::Ex3n7 => "EX3n7",
            FixtureId::Ex5 => "EX5",
            FixtureId::Ex42 => "EX42",
            FixtureId::T1Proof => "T1PROOF",
        }
    }
}

impl fmt::Display for FixtureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FixtureId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FixtureId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown fixture {s}; expected one of EX1, EX2, EX3n7, EX5, EX42, T1PROOF"))
    }
}

/// How open table entries are filled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completion {
    Ascending,
    Descending,
}

/// `given` (1-based) followed, when `open`, by every other index in
/// `completion` order. Returns 0-based indices.
fn complete(given: &[usize], n: usize, open: bool, completion: Completion) -> Vec<usize> {
    let mut out: Vec<usize> = given.iter().map(|x| x - 1).collect();
    if open {
        let mut rest: Vec<usize> = (0..n).filter(|x| !out.contains(x)).collect();
        if completion == Completion::Descending {
            rest.reverse();
        }
        out.extend(rest);
    }
    out
}

struct Table<'a> {
    n_students: usize,
    n_schools: usize,
    /// (listed schools, list continues arbitrarily)
    prefs: &'a [(&'a [usize], bool)],
    /// (listed students, order continues arbitrarily)
    priorities: &'a [(&'a [usize], bool)],
    fpf: &'a [usize],
}

impl Table<'_> {
    fn build(&self, completion: Completion) -> Instance {
        let prefs = self
            .prefs
            .iter()
            .map(|&(given, open)| {
                PreferenceList::new(
                    complete(given, self.n_schools, open, completion).into_iter().map(SchoolId).collect(),
                )
            })
            .collect();
        let priorities = self
            .priorities
            .iter()
            .map(|&(given, open)| {
                PriorityOrder::from_indices(&complete(given, self.n_students, open, completion))
                    .expect("fixture priority is a permutation")
            })
            .collect();
        let fpf: Vec<SchoolId> = self.fpf.iter().map(|s| SchoolId(s - 1)).collect();
        Instance::new(prefs, priorities, vec![1; self.n_schools], &fpf).expect("fixture is valid")
    }
}

/// The fixture instance, with open entries completed as requested.
pub fn fixture_instance(id: FixtureId, completion: Completion) -> Instance {
    match id {
        FixtureId::Ex1 => Table {
            n_students: 7,
            n_schools: 5,
            prefs: &[
                (&[1, 2, 3, 4], false),
                (&[1, 3], false),
                (&[4, 3], false),
                (&[1, 2, 3], false),
                (&[2, 1, 3], false),
                (&[1, 2, 5, 3, 4], false),
                (&[5, 1, 2], false),
            ],
            priorities: &[(&[4], true), (&[5], true), (&[3, 1, 2], true), (&[1, 6, 3], true), (&[7], true)],
            fpf: &[3],
        }
        .build(completion),
        FixtureId::Ex2 => Table {
            n_students: 5,
            n_schools: 4,
            prefs: &[
                (&[1, 2, 3], false),
                (&[1, 2, 3], false),
                (&[2, 1, 3], false),
                (&[3, 1, 2], false),
                (&[3, 4], true),
            ],
            priorities: &[(&[3, 1], true), (&[2, 4], true), (&[1, 5], true), (&[5], true)],
            fpf: &[],
        }
        .build(completion),
        FixtureId::Ex3n7 => {
            let common: (&[usize], bool) = (&[1, 2, 3, 4, 5, 6, 7], false);
            Table {
                n_students: 7,
                n_schools: 5,
                prefs: &[
                    (&[1], true),
                    (&[2], true),
                    (&[3], true),
                    (&[1, 4, 5], true),
                    (&[1, 2, 3, 5], false),
                    (&[1, 2, 3, 5], false),
                    (&[4, 5], true),
                ],
                priorities: &[common; 5],
                fpf: &[],
            }
            .build(completion)
        }
        FixtureId::Ex5 => Table {
            n_students: 4,
            n_schools: 4,
            prefs: &[(&[1], true), (&[1, 2, 3], false), (&[2, 3], true), (&[3, 2], true)],
            priorities: &[(&[1], true), (&[4, 3, 2, 1], false), (&[3, 2, 4, 1], false), (&[], true)],
            fpf: &[],
        }
        .build(completion),
        FixtureId::Ex42 => Table {
            n_students: 3,
            n_schools: 3,
            prefs: &[(&[1, 2, 3], false), (&[1, 2, 3], false), (&[2, 1, 3], false)],
            priorities: &[(&[1, 2, 3], false), (&[2, 3, 1], false), (&[3, 1, 2], false)],
            fpf: &[],
        }
        .build(completion),
        FixtureId::T1Proof => Table {
            n_students: 3,
            n_schools: 2,
            prefs: &[(&[1, 2], false), (&[1, 2], false), (&[2, 1], false)],
            priorities: &[(&[1, 2, 3], false), (&[1, 2, 3], false)],
            fpf: &[],
        }
        .build(completion),
    }
}

/// One displayed value compared with its recomputation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldCheck {
    pub field: String,
    pub expected: String,
    pub actual: String,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Reproduction {
    pub fixture: FixtureId,
    pub instance_digest: String,
    pub checks: Vec<FieldCheck>,
    pub passed: bool,
}

fn m(entries: &[Option<usize>]) -> Matching {
    Matching::from_indices(&entries.iter().map(|e| e.map(|s| s - 1)).collect::<Vec<_>>())
}

fn students(ids: &[usize]) -> Vec<StudentId> {
    ids.iter().map(|i| StudentId(i - 1)).collect()
}

fn show_students(v: &[StudentId]) -> String {
    format!("{{{}}}", v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", "))
}

fn show_list(p: &PreferenceList) -> String {
    p.schools().iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
}

fn show_pairs(v: &[BlockingPair]) -> String {
    let parts: Vec<String> = v.iter().map(|p| format!("({},{})", p.student, p.school)).collect();
    format!("{{{}}}", parts.join(", "))
}

struct Checks(Vec<FieldCheck>);

impl Checks {
    fn eq<T: PartialEq + fmt::Display>(&mut self, field: &str, expected: T, actual: T) {
        self.push(field, expected.to_string(), actual.to_string(), expected == actual);
    }

    fn push(&mut self, field: &str, expected: String, actual: String, ok: bool) {
        self.0.push(FieldCheck { field: field.to_string(), expected, actual, ok });
    }

    fn students(&mut self, field: &str, expected: &[usize], actual: &[StudentId]) {
        let expected = students(expected);
        self.push(field, show_students(&expected), show_students(actual), expected == actual);
    }

    fn has_pair(&mut self, field: &str, pairs: &[BlockingPair], i: usize, s: usize, present: bool) {
        let found = pairs.iter().any(|p| p.student == StudentId(i - 1) && p.school == SchoolId(s - 1));
        let label = |yes: bool| if yes { format!("contains (i{i},s{s})") } else { format!("lacks (i{i},s{s})") };
        self.push(field, label(present), format!("{} in {}", label(found), show_pairs(pairs)), found == present);
    }
}

fn run(spec: &MechanismSpec, instance: &Instance) -> Matching {
    run_mechanism(spec, instance).expect("fixture specs are runnable")
}

fn checks_for(id: FixtureId, inst: &Instance) -> Vec<FieldCheck> {
    let mut c = Checks(Vec::new());
    match id {
        FixtureId::Ex1 => {
            let fpf4 = run(&MechanismSpec::fpf().with_k(4), inst);
            let gs4 = run(&MechanismSpec::gs().with_k(4), inst);
            c.eq("FPF^4", m(&[Some(4), None, Some(3), Some(1), Some(2), None, Some(5)]), fpf4.clone());
            c.eq("GS^4", m(&[Some(3), None, Some(4), Some(1), Some(2), None, Some(5)]), gs4.clone());
            c.eq("FPF^4 stable", true, is_stable(&fpf4, inst));
            c.eq("GS^4 stable", false, is_stable(&gs4, inst));
            c.has_pair("GS^4 blocking pairs", &blocking_pairs(&gs4, inst), 6, 4, true);
            c.eq(
                "P_i6 truncated at 4",
                show_list(&PreferenceList::from_indices(&[0, 1, 4, 2])),
                show_list(&truncate_preferences(inst.preference(StudentId(5)), 4)),
            );
            let truncated =
                inst.with_preferences(inst.preferences().iter().map(|p| truncate_preferences(p, 4)).collect());
            let adjusted = fpf_adjusted_priorities(&truncated);
            let head: Vec<StudentId> = adjusted[2].ranking()[..3].to_vec();
            c.push(
                "adjusted order at s3 begins",
                show_students(&students(&[3, 2, 1])),
                show_students(&head),
                head == students(&[3, 2, 1]),
            );
            let set = stable_set_bruteforce(inst).expect("fixture within brute-force guard");
            c.eq("stable matchings", 1, set.len());
            c.eq("FPF^4 in stable set", true, set.contains(&fpf4));
        }
        FixtureId::Ex2 => {
            let gs2 = run(&MechanismSpec::gs().with_k(2), inst);
            c.eq("GS^2", m(&[None, Some(2), Some(1), None, Some(3)]), gs2.clone());
            c.students("GS^2 blocking students", &[1], &blocking_students(&gs2, inst));
            let pairs = blocking_pairs(&gs2, inst);
            c.has_pair("GS^2 blocking pairs", &pairs, 1, 3, true);
            c.has_pair("GS^2 blocking pairs", &pairs, 2, 2, false);
            let limits = ConstraintVector::new(vec![2, 1, 2, 2, 2]).expect("positive limits");
            let short = run(&MechanismSpec::gs().with_limits(limits), inst);
            c.eq("GS^2 with i2 at 1", m(&[Some(1), None, Some(2), None, Some(3)]), short.clone());
            c.students("GS^2 with i2 at 1 blocking students", &[2, 4], &blocking_students(&short, inst));
            let pairs = blocking_pairs(&short, inst);
            c.has_pair("GS^2 with i2 at 1 blocking pairs", &pairs, 2, 2, true);
            c.has_pair("GS^2 with i2 at 1 blocking pairs", &pairs, 1, 3, false);
        }
        FixtureId::Ex3n7 => {
            let b3 = run(&MechanismSpec::boston().with_k(3), inst);
            let gs3 = run(&MechanismSpec::gs().with_k(3), inst);
            let sd3 = run(&MechanismSpec::sd().with_k(3), inst);
            c.eq("beta^3", m(&[Some(1), Some(2), Some(3), Some(5), None, None, Some(4)]), b3.clone());
            c.eq("GS^3", m(&[Some(1), Some(2), Some(3), Some(4), None, None, Some(5)]), gs3.clone());
            c.eq("SD^3", gs3.clone(), sd3);
            c.students("beta^3 blocking students", &[4], &blocking_students(&b3, inst));
            c.has_pair("beta^3 blocking pairs", &blocking_pairs(&b3, inst), 4, 4, true);
            c.students("GS^3 blocking students", &[5, 6], &blocking_students(&gs3, inst));
            c.eq("beta^3 stable", false, is_stable(&b3, inst));
            c.eq("Ch(1)", b3.clone(), chinese_parallel(inst, 1).expect("e is positive"));
            c.eq("Ch(3)", gs3.clone(), chinese_parallel(inst, 3).expect("e is positive"));
            let manip = manipulating_students(&MechanismSpec::boston().with_k(3), inst).expect("within guard");
            c.push(
                "i4 manipulates beta^3",
                "true".into(),
                manip.contains(&StudentId(3)).to_string(),
                manip.contains(&StudentId(3)),
            );
        }
        FixtureId::Ex5 => {
            let gs2 = run(&MechanismSpec::gs().with_k(2), inst);
            c.eq("GS^2", m(&[Some(1), None, Some(2), Some(3)]), gs2.clone());
            c.eq("GS^2 stable", false, is_stable(&gs2, inst));
            c.has_pair("GS^2 blocking pairs", &blocking_pairs(&gs2, inst), 2, 3, true);
            let mut prefs = inst.preferences().to_vec();
            prefs[1] = PreferenceList::from_indices(&[2]);
            let dev = run(&MechanismSpec::gs().with_k(2), &inst.with_preferences(prefs));
            c.eq("GS^2 with i2 reporting s3 only", m(&[Some(1), None, Some(3), Some(2)]), dev);
            let manip = manipulating_students(&MechanismSpec::gs().with_k(2), inst).expect("within guard");
            c.students("GS^2 manipulating students", &[], &manip);
            let fast = gs_manipulating_students_fast(inst, 2).expect("k above one");
            c.students("GS^2 manipulating students (fast)", &[], &fast);
        }
        FixtureId::Ex42 => {
            let comp = competitive_schools(inst);
            let shown: Vec<String> = comp.competitive.iter().map(|s| s.to_string()).collect();
            c.push(
                "competitive schools",
                "{s1}".into(),
                format!("{{{}}}", shown.join(", ")),
                comp.competitive == [SchoolId(0)],
            );
            let g: Vec<String> = comp.guaranteed.iter().map(|g| g.map_or("-".to_string(), |s| s.to_string())).collect();
            c.push("guaranteed", "s1,-,-".into(), g.join(","), comp.guaranteed == [Some(SchoolId(0)), None, None]);
            let out = semi_sophisticated_outcome(inst, 2).expect("both computations agree");
            c.eq("report of 1", "s1,s2,s3".to_string(), show_list(&out.profile[0]));
            c.eq("report of 2", "s2,s3".to_string(), show_list(&out.profile[1]));
            c.eq("report of 3", "s2,s3".to_string(), show_list(&out.profile[2]));
            c.eq("GS^2 outcome", m(&[Some(1), Some(2), Some(3)]), out.matching.clone());
            c.eq("outcome stable", true, is_stable(&out.matching, inst));
            c.eq("outcome is GS", run(&MechanismSpec::gs(), inst), out.matching.clone());
            c.eq(
                "r",
                "0,1,1".to_string(),
                out.dropped_preferred.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","),
            );
            c.eq(
                "limits",
                "2,3,3".to_string(),
                out.limits.limits().iter().map(|r| r.to_string()).collect::<Vec<_>>().join(","),
            );
        }
        FixtureId::T1Proof => {
            for k in [2, 3] {
                let b = run(&MechanismSpec::boston().with_k(k), inst);
                let gs = run(&MechanismSpec::gs().with_k(k), inst);
                c.eq(&format!("beta^{k}"), m(&[Some(1), None, Some(2)]), b.clone());
                c.eq(&format!("beta^{k} stable"), false, is_stable(&b, inst));
                c.has_pair(&format!("beta^{k} blocking pairs"), &blocking_pairs(&b, inst), 2, 2, true);
                c.eq(&format!("GS^{k}"), m(&[Some(1), Some(2), None]), gs.clone());
                c.eq(&format!("GS^{k} stable"), true, is_stable(&gs, inst));
                let eq = boston_equilibrium_outcome(inst, &SophisticationPartition::all_sophisticated(3), k)
                    .expect("common priority");
                c.eq(&format!("beta^{k} equilibrium, all sophisticated"), gs.clone(), eq.matching);
                let sd = sd_equilibrium_outcome(inst, &SophisticationPartition::all_sophisticated(3), k)
                    .expect("common priority");
                c.eq(&format!("SD^{k} equilibrium, all sophisticated"), gs, sd.matching);
            }
        }
    }
    c.0
}

/// Recomputes every displayed value of the example under both
/// completions. Checks are reported for the ascending completion; any
/// field that differs under the descending completion is reported as an
/// extra failed check.
pub fn reproduce_paper_example(id: FixtureId) -> Reproduction {
    let asc = fixture_instance(id, Completion::Ascending);
    let desc = fixture_instance(id, Completion::Descending);
    let mut checks = checks_for(id, &asc);
    if asc != desc {
        for (a, d) in checks.clone().iter().zip(checks_for(id, &desc)) {
            if a.actual != d.actual || !d.ok {
                checks.push(FieldCheck {
                    field: format!("{} (descending completion)", a.field),
                    expected: a.actual.clone(),
                    actual: d.actual,
                    ok: false,
                });
            }
        }
    }
    let passed = checks.iter().all(|c| c.ok);
    Reproduction { fixture: id, instance_digest: asc.digest(), checks, passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn completion_orders() {
        assert_eq!(complete(&[3, 1], 4, true, Completion::Ascending), vec![2, 0, 1, 3]);
        assert_eq!(complete(&[3, 1], 4, true, Completion::Descending), vec![2, 0, 3, 1]);
        assert_eq!(complete(&[3, 1], 4, false, Completion::Descending), vec![2, 0]);
    }

    #[test]
    fn fixture_ids_parse() {
        for id in FixtureId::ALL {
            assert_eq!(id.name().parse::<FixtureId>().unwrap(), id);
        }
        assert!("EX9".parse::<FixtureId>().is_err());
    }

    #[test]
    fn every_fixture_reproduces() {
        for id in FixtureId::ALL {
            let r = reproduce_paper_example(id);
            let failed: Vec<_> = r.checks.iter().filter(|c| !c.ok).collect();
            assert!(failed.is_empty(), "{id}: {failed:#?}");
        }
    }
}
