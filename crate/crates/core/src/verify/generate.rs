//! Instance families: exhaustive enumeration of small shapes and seeded
//! random sampling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::model::{Instance, PreferenceList, PriorityOrder, SchoolId};
use crate::strategy::{all_reports, Report};

pub const EXHAUSTIVE_MAX_STUDENTS: usize = 4;
pub const EXHAUSTIVE_MAX_SCHOOLS: usize = 3;
pub const RANDOM_MAX_SCHOOLS: usize = 6;
pub const RANDOM_MAX_STUDENTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorityMode {
    Common,
    Arbitrary,
}

/// Priority profiles paired with every preference profile in an
/// exhaustive sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrioritySet {
    /// Every common order; needs [`PriorityMode::Common`].
    AllCommon,
    /// The first `n` canonical profiles: identity common order, then a
    /// per-school rotation (arbitrary mode) or the reversed order (common
    /// mode).
    Canonical(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Enumeration {
    Exhaustive { priorities: PrioritySet },
    Random { seed: u64, samples: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FpfPolicy {
    None,
    All,
    Fixed(Vec<usize>),
    /// Uniform over non-empty subsets; random families only.
    RandomNonEmpty,
}

/// Describes a family of instances. Size ranges are inclusive.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub students: (usize, usize),
    pub schools: (usize, usize),
    pub capacity: (u32, u32),
    pub priority: PriorityMode,
    pub enumeration: Enumeration,
    pub fpf: FpfPolicy,
}

impl FamilyConfig {
    pub fn random(students: (usize, usize), schools: (usize, usize), seed: u64, samples: usize) -> Self {
        FamilyConfig {
            students,
            schools,
            capacity: (1, 1),
            priority: PriorityMode::Arbitrary,
            enumeration: Enumeration::Random { seed, samples },
            fpf: FpfPolicy::None,
        }
    }

    pub fn exhaustive(n_students: usize, n_schools: usize, priorities: PrioritySet) -> Self {
        FamilyConfig {
            students: (n_students, n_students),
            schools: (n_schools, n_schools),
            capacity: (1, 1),
            priority: PriorityMode::Arbitrary,
            enumeration: Enumeration::Exhaustive { priorities },
            fpf: FpfPolicy::None,
        }
    }

    pub fn with_priority(mut self, mode: PriorityMode) -> Self {
        self.priority = mode;
        self
    }

    pub fn with_capacity(mut self, lo: u32, hi: u32) -> Self {
        self.capacity = (lo, hi);
        self
    }

    pub fn with_fpf(mut self, fpf: FpfPolicy) -> Self {
        self.fpf = fpf;
        self
    }

    /// One-line description used in reports.
    pub fn summary(&self) -> String {
        let range = |(a, b): (usize, usize)| if a == b { a.to_string() } else { format!("{a}..{b}") };
        let caps = if self.capacity.0 == self.capacity.1 {
            self.capacity.0.to_string()
        } else {
            format!("{}..{}", self.capacity.0, self.capacity.1)
        };
        let prio = match self.priority {
            PriorityMode::Common => "common",
            PriorityMode::Arbitrary => "arbitrary",
        };
        let mode = match self.enumeration {
            Enumeration::Exhaustive { priorities: PrioritySet::AllCommon } => {
                "exhaustive, all common orders".to_string()
            }
            Enumeration::Exhaustive { priorities: PrioritySet::Canonical(n) } => {
                format!("exhaustive, {n} priority profile(s)")
            }
            Enumeration::Random { seed, samples } => format!("random, seed {seed}, {samples} samples"),
        };
        let fpf = match &self.fpf {
            FpfPolicy::None => "none".to_string(),
            FpfPolicy::All => "all".to_string(),
            FpfPolicy::Fixed(v) => format!("{v:?}"),
            FpfPolicy::RandomNonEmpty => "random non-empty".to_string(),
        };
        format!(
            "{} students, {} schools, capacity {caps}, {prio} priorities, fpf {fpf}, {mode}",
            range(self.students),
            range(self.schools)
        )
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        let bad = |msg: String| Err(VerifyError::InvalidConfig(msg));
        if self.students.0 == 0 || self.students.0 > self.students.1 {
            return bad(format!("student range {:?} is empty or starts at 0", self.students));
        }
        if self.schools.0 == 0 || self.schools.0 > self.schools.1 {
            return bad(format!("school range {:?} is empty or starts at 0", self.schools));
        }
        if self.capacity.0 == 0 || self.capacity.0 > self.capacity.1 {
            return bad(format!("capacity range {:?} is empty or starts at 0", self.capacity));
        }
        if let FpfPolicy::Fixed(v) = &self.fpf {
            if v.iter().any(|&s| s >= self.schools.0) {
                return bad(format!("fpf schools {v:?} exceed the smallest school count"));
            }
        }
        match self.enumeration {
            Enumeration::Exhaustive { priorities } => {
                if self.students.0 != self.students.1 || self.schools.0 != self.schools.1 {
                    return bad("exhaustive families need a fixed shape".into());
                }
                if self.capacity.0 != self.capacity.1 {
                    return bad("exhaustive families need a fixed capacity".into());
                }
                if self.students.0 > EXHAUSTIVE_MAX_STUDENTS || self.schools.0 > EXHAUSTIVE_MAX_SCHOOLS {
                    return Err(VerifyError::SizeGuard(format!(
                        "exhaustive sweeps allow at most {EXHAUSTIVE_MAX_STUDENTS} students and {EXHAUSTIVE_MAX_SCHOOLS} schools"
                    )));
                }
                if self.fpf == FpfPolicy::RandomNonEmpty {
                    return bad("random fpf subsets need a random family".into());
                }
                match priorities {
                    PrioritySet::AllCommon if self.priority != PriorityMode::Common => {
                        bad("all common orders need common priority mode".into())
                    }
                    PrioritySet::Canonical(n) if !(1..=2).contains(&n) => {
                        bad(format!("{n} canonical priority profiles requested; 1 or 2 exist"))
                    }
                    _ => Ok(()),
                }
            }
            Enumeration::Random { .. } => {
                if self.schools.1 > RANDOM_MAX_SCHOOLS || self.students.1 > RANDOM_MAX_STUDENTS {
                    return Err(VerifyError::SizeGuard(format!(
                        "random families allow at most {RANDOM_MAX_STUDENTS} students and {RANDOM_MAX_SCHOOLS} schools"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// An indexable family: instance `idx` can be rebuilt on its own, so
/// workers may split the index range freely.
#[derive(Clone, Debug)]
pub struct Family {
    config: FamilyConfig,
    len: usize,
    reports: Vec<Report>,
    priority_profiles: Vec<Vec<PriorityOrder>>,
}

impl Family {
    pub fn config(&self) -> &FamilyConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Instance number `idx` of the canonical order.
    pub fn get(&self, idx: usize) -> Instance {
        assert!(idx < self.len, "index {idx} outside a family of {}", self.len);
        match self.config.enumeration {
            Enumeration::Random { seed, .. } => random_instance(&self.config, sample_seed(seed, idx)),
            Enumeration::Exhaustive { .. } => {
                let n = self.config.students.0;
                let m = self.config.schools.0;
                let r = self.reports.len();
                let mut code = idx;
                let mut prefs = Vec::with_capacity(n);
                for _ in 0..n {
                    prefs.push(self.reports[code % r].clone());
                    code /= r;
                }
                // the student encoded last varies slowest; reverse so student 0 varies slowest
                prefs.reverse();
                let priorities = self.priority_profiles[code].clone();
                let caps = vec![self.config.capacity.0; m];
                let fpf = fixed_fpf(&self.config.fpf, m);
                Instance::new(prefs, priorities, caps, &fpf).expect("enumerated instances are valid")
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Instance> + '_ {
        (0..self.len).map(|i| self.get(i))
    }
}

fn fixed_fpf(policy: &FpfPolicy, n_schools: usize) -> Vec<SchoolId> {
    match policy {
        FpfPolicy::None | FpfPolicy::RandomNonEmpty => Vec::new(),
        FpfPolicy::All => (0..n_schools).map(SchoolId).collect(),
        FpfPolicy::Fixed(v) => v.iter().map(|&s| SchoolId(s)).collect(),
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for p in &out {
            for x in 0..n {
                if !p.contains(&x) {
                    let mut q = p.clone();
                    q.push(x);
                    next.push(q);
                }
            }
        }
        out = next;
    }
    out
}

fn canonical_priorities(mode: PriorityMode, n: usize, m: usize, count: usize) -> Vec<Vec<PriorityOrder>> {
    let identity = PriorityOrder::identity(n);
    let mut out = vec![vec![identity; m]];
    if count > 1 {
        let second = match mode {
            PriorityMode::Arbitrary => (0..m)
                .map(|s| {
                    let order: Vec<usize> = (0..n).map(|j| (j + s) % n).collect();
                    PriorityOrder::from_indices(&order).expect("rotation is a permutation")
                })
                .collect(),
            PriorityMode::Common => {
                let rev: Vec<usize> = (0..n).rev().collect();
                vec![PriorityOrder::from_indices(&rev).expect("reversal is a permutation"); m]
            }
        };
        out.push(second);
    }
    out
}

/// The family described by `config`, in canonical order.
pub fn enumerate_instances(config: &FamilyConfig) -> Result<Family, VerifyError> {
    config.validate()?;
    match config.enumeration {
        Enumeration::Random { samples, .. } => {
            Ok(Family { config: config.clone(), len: samples, reports: Vec::new(), priority_profiles: Vec::new() })
        }
        Enumeration::Exhaustive { priorities } => {
            let n = config.students.0;
            let m = config.schools.0;
            let reports = all_reports(m).map_err(|e| VerifyError::SizeGuard(e.to_string()))?;
            let priority_profiles = match priorities {
                PrioritySet::AllCommon => permutations(n)
                    .into_iter()
                    .map(|p| vec![PriorityOrder::from_indices(&p).expect("permutation"); m])
                    .collect(),
                PrioritySet::Canonical(c) => canonical_priorities(config.priority, n, m, c),
            };
            let len = reports
                .len()
                .checked_pow(n as u32)
                .and_then(|x| x.checked_mul(priority_profiles.len()))
                .ok_or_else(|| VerifyError::SizeGuard("family size overflows".into()))?;
            Ok(Family { config: config.clone(), len, reports, priority_profiles })
        }
    }
}

/// Seed of sample `idx` in a random family seeded with `seed`.
pub fn sample_seed(seed: u64, idx: usize) -> u64 {
    // splitmix64 finaliser over the pair
    let mut z = seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform_list(rng: &mut ChaCha8Rng, m: usize) -> PreferenceList {
    // Uniform over ordered subsets: choose the length with weight m!/(m−len)!,
    // then a uniformly random arrangement of that length.
    let weights: Vec<u64> = (0..=m).map(|len| ((m - len + 1)..=m).map(|x| x as u64).product()).collect();
    let total: u64 = weights.iter().sum();
    let mut pick = rng.random_range(0..total);
    let mut len = 0;
    while pick >= weights[len] {
        pick -= weights[len];
        len += 1;
    }
    let mut schools: Vec<SchoolId> = (0..m).map(SchoolId).collect();
    schools.shuffle(rng);
    schools.truncate(len);
    PreferenceList::new(schools)
}

fn random_order(rng: &mut ChaCha8Rng, n: usize) -> PriorityOrder {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    PriorityOrder::from_indices(&order).expect("shuffle keeps a permutation")
}

/// A uniformly drawn member of the family, fully determined by `seed`.
/// The enumeration mode of `config` is ignored.
pub fn random_instance(config: &FamilyConfig, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(config.students.0 as u32..=config.students.1 as u32) as usize;
    let m = rng.random_range(config.schools.0 as u32..=config.schools.1 as u32) as usize;
    let prefs: Vec<PreferenceList> = (0..n).map(|_| uniform_list(&mut rng, m)).collect();
    let priorities = match config.priority {
        PriorityMode::Common => vec![random_order(&mut rng, n); m],
        PriorityMode::Arbitrary => (0..m).map(|_| random_order(&mut rng, n)).collect(),
    };
    let caps: Vec<u32> = (0..m).map(|_| rng.random_range(config.capacity.0..=config.capacity.1)).collect();
    let fpf: Vec<SchoolId> = match &config.fpf {
        FpfPolicy::RandomNonEmpty => {
            let mask = rng.random_range(1u32..(1u32 << m));
            (0..m).filter(|s| mask >> s & 1 == 1).map(SchoolId).collect()
        }
        other => fixed_fpf(other, m).into_iter().filter(|s| s.0 < m).collect(),
    };
    Instance::new(prefs, priorities, caps, &fpf).expect("generated instances are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;
    use std::collections::HashSet;

    #[test]
    fn two_students_one_school() {
        let cfg = FamilyConfig::exhaustive(2, 1, PrioritySet::Canonical(1));
        let fam = enumerate_instances(&cfg).unwrap();
        assert_eq!(fam.len(), 4);
        let distinct: HashSet<_> = fam.iter().collect();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn full_sweep_size() {
        let cfg = FamilyConfig::exhaustive(4, 3, PrioritySet::Canonical(1));
        assert_eq!(enumerate_instances(&cfg).unwrap().len(), 65_536);
        let cfg = FamilyConfig::exhaustive(4, 3, PrioritySet::AllCommon).with_priority(PriorityMode::Common);
        assert_eq!(enumerate_instances(&cfg).unwrap().len(), 65_536 * 24);
    }

    #[test]
    fn exhaustive_without_duplicates() {
        let cfg = FamilyConfig::exhaustive(3, 2, PrioritySet::Canonical(2));
        let fam = enumerate_instances(&cfg).unwrap();
        assert_eq!(fam.len(), 5usize.pow(3) * 2);
        let distinct: HashSet<_> = fam.iter().collect();
        assert_eq!(distinct.len(), fam.len());
    }

    #[test]
    fn guards() {
        let cfg = FamilyConfig::exhaustive(5, 3, PrioritySet::Canonical(1));
        assert!(matches!(enumerate_instances(&cfg), Err(VerifyError::SizeGuard(_))));
        let cfg = FamilyConfig::exhaustive(3, 3, PrioritySet::AllCommon);
        assert!(matches!(enumerate_instances(&cfg), Err(VerifyError::InvalidConfig(_))));
        let cfg = FamilyConfig::exhaustive(3, 3, PrioritySet::Canonical(1)).with_fpf(FpfPolicy::RandomNonEmpty);
        assert!(matches!(enumerate_instances(&cfg), Err(VerifyError::InvalidConfig(_))));
    }

    #[test]
    fn seeds_are_deterministic() {
        let cfg = FamilyConfig::random((2, 5), (1, 4), 7, 10);
        assert_eq!(random_instance(&cfg, 11), random_instance(&cfg, 11));
        let differing = (0..100).filter(|&s| random_instance(&cfg, s) != random_instance(&cfg, s + 1)).count();
        assert!(differing > 90);
    }

    #[test]
    fn generated_instances_validate() {
        let cfg = FamilyConfig::random((1, 6), (1, 4), 3, 200).with_capacity(1, 3).with_fpf(FpfPolicy::RandomNonEmpty);
        for inst in enumerate_instances(&cfg).unwrap().iter() {
            assert!(validate_instance(&inst.to_raw()).is_ok());
            assert!(!inst.fpf_schools().is_empty());
        }
    }
}
