//! Reference implementations written straight from the definitions,
//! sharing nothing with the library beyond the data types.

#![allow(dead_code)]

use proptest::prelude::*;
use school_choice::model::{Instance, Matching, PreferenceList, PriorityOrder, SchoolId, StudentId};

/// Index of `s` in `list`, `None` if unacceptable.
fn pos(list: &[SchoolId], s: SchoolId) -> Option<usize> {
    list.iter().position(|&x| x == s)
}

fn prio_pos(inst: &Instance, s: SchoolId, i: usize) -> usize {
    inst.priority(s).ranking().iter().position(|&j| j.0 == i).unwrap()
}

/// Simultaneous-rounds student-proposing deferred acceptance on `lists`.
pub fn da(inst: &Instance, lists: &[Vec<SchoolId>]) -> Matching {
    let n = inst.n_students();
    let mut next = vec![0usize; n];
    let mut held: Vec<Vec<usize>> = vec![Vec::new(); inst.n_schools()];
    loop {
        let holding: Vec<bool> = (0..n).map(|i| held.iter().any(|h| h.contains(&i))).collect();
        let proposers: Vec<usize> = (0..n).filter(|&i| !holding[i] && next[i] < lists[i].len()).collect();
        if proposers.is_empty() {
            break;
        }
        for &i in &proposers {
            let s = lists[i][next[i]];
            next[i] += 1;
            held[s.0].push(i);
        }
        for (s, h) in held.iter_mut().enumerate() {
            h.sort_by_key(|&i| prio_pos(inst, SchoolId(s), i));
            h.truncate(inst.capacity(SchoolId(s)) as usize);
        }
    }
    let mut m = Matching::unmatched(n);
    for (s, h) in held.iter().enumerate() {
        for &i in h {
            m.assign(StudentId(i), Some(SchoolId(s)));
        }
    }
    m
}

/// Immediate acceptance: in step t every unassigned student applies to her
/// t-th choice; schools fill remaining seats by priority.
pub fn boston(inst: &Instance, lists: &[Vec<SchoolId>]) -> Matching {
    let n = inst.n_students();
    let mut m = Matching::unmatched(n);
    let mut left: Vec<u32> = inst.capacities().to_vec();
    let max_len = lists.iter().map(Vec::len).max().unwrap_or(0);
    for t in 0..max_len {
        for (s, seats) in left.iter_mut().enumerate() {
            let mut applicants: Vec<usize> =
                (0..n).filter(|&i| !m.is_matched(StudentId(i)) && lists[i].get(t) == Some(&SchoolId(s))).collect();
            applicants.sort_by_key(|&i| prio_pos(inst, SchoolId(s), i));
            for i in applicants.into_iter().take(*seats as usize) {
                m.assign(StudentId(i), Some(SchoolId(s)));
                *seats -= 1;
            }
        }
    }
    m
}

/// Students in common priority order each take their best school with a
/// free seat.
pub fn serial_dictatorship(inst: &Instance, lists: &[Vec<SchoolId>]) -> Matching {
    let mut m = Matching::unmatched(inst.n_students());
    let mut left: Vec<u32> = inst.capacities().to_vec();
    for &i in inst.priority(SchoolId(0)).ranking() {
        if let Some(&s) = lists[i.0].iter().find(|s| left[s.0] > 0) {
            left[s.0] -= 1;
            m.assign(i, Some(s));
        }
    }
    m
}

/// Rounds of DA on residual seats with lists cut at `r * e`.
pub fn chinese(inst: &Instance, e: usize) -> Matching {
    let n = inst.n_students();
    let m_schools = inst.n_schools();
    let mut m = Matching::unmatched(n);
    let mut r = 1;
    loop {
        let fill = m.fill_counts(m_schools);
        let caps: Vec<u32> = (0..m_schools).map(|s| inst.capacity(SchoolId(s)) - fill[s] as u32).collect();
        let residual = Instance::new(
            inst.preferences().to_vec(),
            inst.priorities().to_vec(),
            caps.iter().map(|&c| c.max(1)).collect(),
            &[],
        )
        .unwrap();
        let lists: Vec<Vec<SchoolId>> = (0..n)
            .map(|i| {
                if m.is_matched(StudentId(i)) {
                    Vec::new()
                } else {
                    // schools with no seat left are dropped from the list, which
                    // cannot change who is admitted elsewhere in this round
                    inst.preference(StudentId(i)).prefix(r * e).iter().copied().filter(|s| caps[s.0] > 0).collect()
                }
            })
            .collect();
        let round = da(&residual, &lists);
        for i in 0..n {
            if let Some(s) = round.school_of(StudentId(i)) {
                m.assign(StudentId(i), Some(s));
            }
        }
        if r * e >= m_schools {
            return m;
        }
        r += 1;
    }
}

/// All `(i, s)` where `i` prefers `s` to her assignment and `s` has a free
/// seat or admits someone of lower priority than `i`.
pub fn blocking_pairs(inst: &Instance, m: &Matching) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..inst.n_students() {
        let list = inst.preference(StudentId(i)).schools();
        let mine = m.school_of(StudentId(i)).and_then(|s| pos(list, s)).unwrap_or(list.len());
        for (rank, &s) in list.iter().enumerate() {
            if rank >= mine {
                break;
            }
            let occupants: Vec<usize> =
                (0..inst.n_students()).filter(|&j| m.school_of(StudentId(j)) == Some(s)).collect();
            let free = (occupants.len() as u32) < inst.capacity(s);
            if free || occupants.iter().any(|&j| prio_pos(inst, s, j) > prio_pos(inst, s, i)) {
                out.push((i, s.0));
            }
        }
    }
    out
}

pub fn blocking_count(inst: &Instance, m: &Matching) -> usize {
    let mut students: Vec<usize> = blocking_pairs(inst, m).into_iter().map(|p| p.0).collect();
    students.dedup();
    students.len()
}

pub fn truncated(inst: &Instance, k: usize) -> Vec<Vec<SchoolId>> {
    inst.preferences().iter().map(|p| p.prefix(k).to_vec()).collect()
}

pub fn full(inst: &Instance) -> Vec<Vec<SchoolId>> {
    truncated(inst, usize::MAX)
}

/// Every stable matching, by enumerating each student's options
/// (unassigned or any acceptable school) and filtering.
pub fn stable_set(inst: &Instance) -> Vec<Matching> {
    let n = inst.n_students();
    let options: Vec<Vec<Option<SchoolId>>> = (0..n)
        .map(|i| {
            std::iter::once(None).chain(inst.preference(StudentId(i)).schools().iter().map(|&s| Some(s))).collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let m = Matching::from_assignment((0..n).map(|i| options[i][idx[i]]).collect());
        if m.respects_capacities(inst) && blocking_pairs(inst, &m).is_empty() {
            out.push(m);
        }
        let mut j = 0;
        while j < n {
            idx[j] += 1;
            if idx[j] < options[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == n {
            break;
        }
    }
    out.sort();
    out
}

/// Small instances with arbitrary priorities, capacities 1..=2 and a
/// random FPF subset.
pub fn instances(max_students: usize, max_schools: usize) -> impl Strategy<Value = Instance> {
    (1..=max_students, 1..=max_schools).prop_flat_map(|(n, m)| {
        let list = Just((0..m).collect::<Vec<usize>>())
            .prop_shuffle()
            .prop_flat_map(move |v| (0..=m).prop_map(move |len| v[..len].to_vec()));
        let order = Just((0..n).collect::<Vec<usize>>()).prop_shuffle();
        (
            proptest::collection::vec(list, n),
            proptest::collection::vec(order, m),
            proptest::collection::vec(1u32..=2, m),
            proptest::collection::vec(any::<bool>(), m),
        )
            .prop_map(|(prefs, prios, caps, fpf)| {
                let fpf: Vec<SchoolId> = fpf.iter().enumerate().filter(|(_, &b)| b).map(|(s, _)| SchoolId(s)).collect();
                Instance::new(
                    prefs.iter().map(|p| PreferenceList::from_indices(p)).collect(),
                    prios.iter().map(|o| PriorityOrder::from_indices(o).unwrap()).collect(),
                    caps,
                    &fpf,
                )
                .unwrap()
            })
    })
}

/// As `instances`, with one priority order shared by every school.
pub fn common_instances(max_students: usize, max_schools: usize) -> impl Strategy<Value = Instance> {
    instances(max_students, max_schools).prop_map(|inst| {
        let common = inst.priority(SchoolId(0)).clone();
        Instance::new(
            inst.preferences().to_vec(),
            vec![common; inst.n_schools()],
            inst.capacities().to_vec(),
            &inst.fpf_schools(),
        )
        .unwrap()
    })
}
