//! Constructive K-fold marriage: Hall-type feasibility with min-cut
//! certificates, a deterministic flow-based solver, and the Omega_delta
//! index sets of biorthogonal samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A family of finite candidate sets `N_i` over indices `i = 1..=|I|`,
/// with multiplicity `K`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarriageInstance {
    /// `sets[i]` lists the admissible partners of index `i + 1`; 1-based values.
    pub sets: Vec<Vec<usize>>,
    pub k: usize,
}

impl MarriageInstance {
    pub fn new(sets: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        if sets.iter().any(|s| s.iter().any(|&n| n == 0)) {
            return Err(Error::InvalidArgument("partners are 1-based".into()));
        }
        let mut sets = sets;
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
        }
        Ok(Self { sets, k })
    }

    fn max_partner(&self) -> usize {
        self.sets
            .iter()
            .flat_map(|s| s.iter().copied())
            .max()
            .unwrap_or(0)
    }
}

/// Partition of `I` into classes `1..=K`, each class carrying an injective
/// assignment into the partner sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarriageSolution {
    /// `classes[i]` is the class of index `i + 1`, in `1..=K`.
    pub classes: Vec<usize>,
    /// `partners[i]` is the assigned partner of index `i + 1`, 1-based.
    pub partners: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub enum Feasibility {
    /// Max-flow saturates every demand; the value equals `|I|`.
    Feasible { flow_value: usize },
    /// A set `F` with `|F| > K |union of N_i over F|`; 1-based indices.
    Infeasible { violating: Vec<usize> },
}

/// Deterministic Edmonds-Karp max-flow on a fixed node layout:
/// source, one node per index, one node per partner, sink.
struct FlowNetwork {
    // edges[e] = (to, capacity); flow kept separately; e^1 is the reverse edge
    edges: Vec<(usize, i64)>,
    flow: Vec<i64>,
    adjacency: Vec<Vec<usize>>,
}

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            flow: Vec::new(),
            adjacency: vec![Vec::new(); nodes],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, capacity: i64) {
        let e = self.edges.len();
        self.edges.push((to, capacity));
        self.edges.push((from, 0));
        self.flow.push(0);
        self.flow.push(0);
        self.adjacency[from].push(e);
        self.adjacency[to].push(e + 1);
    }

    fn residual(&self, e: usize) -> i64 {
        self.edges[e].1 - self.flow[e]
    }

    /// Shortest augmenting paths in fixed adjacency order: deterministic.
    fn max_flow(&mut self, source: usize, sink: usize) -> i64 {
        let mut total = 0;
        loop {
            let mut pred: Vec<Option<usize>> = vec![None; self.adjacency.len()];
            let mut queue = std::collections::VecDeque::new();
            queue.push_back(source);
            pred[source] = Some(usize::MAX);
            while let Some(u) = queue.pop_front() {
                if u == sink {
                    break;
                }
                for &e in &self.adjacency[u] {
                    let (to, _) = self.edges[e];
                    if pred[to].is_none() && self.residual(e) > 0 {
                        pred[to] = Some(e);
                        queue.push_back(to);
                    }
                }
            }
            if pred[sink].is_none() {
                return total;
            }
            let mut bottleneck = i64::MAX;
            let mut v = sink;
            while v != source {
                let e = pred[v].unwrap();
                bottleneck = bottleneck.min(self.residual(e));
                v = self.edges[e ^ 1].0;
            }
            let mut v = sink;
            while v != source {
                let e = pred[v].unwrap();
                self.flow[e] += bottleneck;
                self.flow[e ^ 1] -= bottleneck;
                v = self.edges[e ^ 1].0;
            }
            total += bottleneck;
        }
    }

    /// Nodes reachable from the source in the residual graph.
    fn source_side(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.adjacency.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[source] = true;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adjacency[u] {
                let (to, _) = self.edges[e];
                if !seen[to] && self.residual(e) > 0 {
                    seen[to] = true;
                    queue.push_back(to);
                }
            }
        }
        seen
    }
}

/// Node layout: 0 = source, 1..=i_count = indices, then partners, then sink.
fn build_network(inst: &MarriageInstance) -> (FlowNetwork, usize, usize) {
    let i_count = inst.sets.len();
    let n_count = inst.max_partner();
    let sink = 1 + i_count + n_count;
    let mut net = FlowNetwork::new(sink + 1);
    // middle edges get effectively infinite capacity so every min cut
    // consists of source and sink edges only, yielding the deficiency form
    let inf = (i_count as i64) + 1;
    for (i, set) in inst.sets.iter().enumerate() {
        net.add_edge(0, 1 + i, 1);
        for &n in set {
            net.add_edge(1 + i, i_count + n, inf);
        }
    }
    for n in 1..=n_count {
        net.add_edge(i_count + n, sink, inst.k as i64);
    }
    (net, sink, i_count)
}

/// Feasibility via max-flow; infeasibility comes with a violating `F`
/// extracted from the min cut, satisfying `|F| > K |union of N_i, i in F|`.
pub fn hall_defect_check(inst: &MarriageInstance) -> Result<Feasibility> {
    let (mut net, sink, i_count) = build_network(inst);
    let flow = net.max_flow(0, sink);
    if flow == inst.sets.len() as i64 {
        return Ok(Feasibility::Feasible {
            flow_value: flow as usize,
        });
    }
    let side = net.source_side(0);
    let violating: Vec<usize> = (0..i_count).filter(|&i| side[1 + i]).map(|i| i + 1).collect();
    let union: std::collections::BTreeSet<usize> = violating
        .iter()
        .flat_map(|&i| inst.sets[i - 1].iter().copied())
        .collect();
    debug_assert!(violating.len() > inst.k * union.len());
    Ok(Feasibility::Infeasible { violating })
}

/// Flow saturating all demands, then a greedy class coloring: the partners
/// matched to each `n` are taken in increasing index order and placed into
/// classes `1, 2, ...`; at most `K` per `n`, so `K` classes suffice and each
/// class meets every `n` at most once, making its assignment injective.
pub fn k_fold_marriage(inst: &MarriageInstance) -> Result<MarriageSolution> {
    let (mut net, sink, i_count) = build_network(inst);
    let flow = net.max_flow(0, sink);
    if flow != i_count as i64 {
        let side = net.source_side(0);
        let violating = (0..i_count).filter(|&i| side[1 + i]).map(|i| i + 1).collect();
        return Err(Error::Infeasible { violating });
    }
    let mut partners = vec![0usize; i_count];
    for i in 0..i_count {
        for &e in &net.adjacency[1 + i] {
            if e % 2 == 0 && net.flow[e] > 0 {
                partners[i] = net.edges[e].0 - i_count;
            }
        }
    }
    let mut classes = vec![0usize; i_count];
    let mut used_at: std::collections::BTreeMap<usize, usize> = Default::default();
    for i in 0..i_count {
        let slot = used_at.entry(partners[i]).or_insert(0);
        *slot += 1;
        classes[i] = *slot;
    }
    let solution = MarriageSolution { classes, partners };
    debug_assert!(verify_marriage(inst, &solution));
    Ok(solution)
}

/// Checks the conclusion clauses: classes within `1..=K`, partners admissible,
/// and each class assignment injective.
pub fn verify_marriage(inst: &MarriageInstance, sol: &MarriageSolution) -> bool {
    let i_count = inst.sets.len();
    if sol.classes.len() != i_count || sol.partners.len() != i_count {
        return false;
    }
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..i_count {
        let (j, n) = (sol.classes[i], sol.partners[i]);
        if j == 0 || j > inst.k || !inst.sets[i].contains(&n) {
            return false;
        }
        if !seen.insert((j, n)) {
            return false;
        }
    }
    true
}

/// Backtracking existence oracle over all (class, partner) assignments.
/// Exponential; desk-scale instances only.
pub fn brute_force_feasible(inst: &MarriageInstance) -> bool {
    fn go(
        inst: &MarriageInstance,
        i: usize,
        taken: &mut std::collections::BTreeSet<(usize, usize)>,
    ) -> bool {
        if i == inst.sets.len() {
            return true;
        }
        for &n in &inst.sets[i] {
            for j in 1..=inst.k {
                if taken.insert((j, n)) {
                    if go(inst, i + 1, taken) {
                        return true;
                    }
                    taken.remove(&(j, n));
                }
            }
        }
        false
    }
    go(inst, 0, &mut Default::default())
}

/// Sampled biorthogonal data: `Y[i][n] = x_n*(y_i)`, `Z[i][n] = z_i*(x_n)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiorthogonalSample {
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub delta: f64,
}

impl BiorthogonalSample {
    pub fn new(y: Vec<Vec<f64>>, z: Vec<Vec<f64>>, delta: f64) -> Result<Self> {
        if delta <= 0.0 {
            return Err(Error::InvalidArgument("delta must be positive".into()));
        }
        if y.len() != z.len() || y.iter().zip(&z).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::InvalidArgument("Y and Z dimensions differ".into()));
        }
        if y.is_empty() || y[0].is_empty() || y.iter().any(|r| r.len() != y[0].len()) {
            return Err(Error::InvalidArgument("matrices must be rectangular and nonempty".into()));
        }
        Ok(Self { y, z, delta })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaDelta {
    /// `{n : max_i |Y[i][n] Z[i][n]| >= delta}`, 1-based.
    pub union: Vec<usize>,
    /// Per-row sets `Omega_i`, same convention.
    pub per_row: Vec<Vec<usize>>,
}

pub fn omega_delta(sample: &BiorthogonalSample) -> OmegaDelta {
    let cols = sample.y[0].len();
    let per_row: Vec<Vec<usize>> = sample
        .y
        .iter()
        .zip(&sample.z)
        .map(|(yr, zr)| {
            (0..cols)
                .filter(|&n| (yr[n] * zr[n]).abs() >= sample.delta)
                .map(|n| n + 1)
                .collect()
        })
        .collect();
    let mut union: Vec<usize> = per_row.iter().flatten().copied().collect();
    union.sort_unstable();
    union.dedup();
    OmegaDelta { union, per_row }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn inst(sets: &[&[usize]], k: usize) -> MarriageInstance {
        MarriageInstance::new(sets.iter().map(|s| s.to_vec()).collect(), k).unwrap()
    }

    #[test]
    fn hall_check_examples() {
        let shared = inst(&[&[1], &[1]], 1);
        match hall_defect_check(&shared).unwrap() {
            Feasibility::Infeasible { violating } => assert_eq!(violating, vec![1, 2]),
            _ => panic!("expected infeasible"),
        }

        let shared2 = inst(&[&[1], &[1]], 2);
        assert!(matches!(
            hall_defect_check(&shared2).unwrap(),
            Feasibility::Feasible { flow_value: 2 }
        ));

        let identity = inst(&[&[1], &[2], &[3], &[4], &[5]], 1);
        assert!(matches!(
            hall_defect_check(&identity).unwrap(),
            Feasibility::Feasible { flow_value: 5 }
        ));
    }

    #[test]
    fn marriage_examples() {
        let shared2 = inst(&[&[1], &[1]], 2);
        let sol = k_fold_marriage(&shared2).unwrap();
        assert!(verify_marriage(&shared2, &sol));
        assert_eq!(sol.partners, vec![1, 1]);
        assert_ne!(sol.classes[0], sol.classes[1]);

        let identity = inst(&[&[1], &[2], &[3]], 1);
        let sol = k_fold_marriage(&identity).unwrap();
        assert_eq!(sol.partners, vec![1, 2, 3]);
        assert_eq!(sol.classes, vec![1, 1, 1]);

        let shared1 = inst(&[&[1], &[1]], 1);
        assert!(matches!(
            k_fold_marriage(&shared1),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn verify_rejects_malformed_solutions() {
        let instance = inst(&[&[1, 2], &[1, 2]], 1);
        let good = MarriageSolution {
            classes: vec![1, 1],
            partners: vec![1, 2],
        };
        assert!(verify_marriage(&instance, &good));
        let non_injective = MarriageSolution {
            classes: vec![1, 1],
            partners: vec![1, 1],
        };
        assert!(!verify_marriage(&instance, &non_injective));
        let missing = MarriageSolution {
            classes: vec![1],
            partners: vec![1],
        };
        assert!(!verify_marriage(&instance, &missing));
        let inadmissible = MarriageSolution {
            classes: vec![1, 1],
            partners: vec![1, 3],
        };
        assert!(!verify_marriage(&instance, &inadmissible));
    }

    #[test]
    fn randomized_suite_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let i_count = rng.gen_range(1..=8usize);
            let n_count = rng.gen_range(1..=8usize);
            let k = rng.gen_range(1..=3usize);
            let sets: Vec<Vec<usize>> = (0..i_count)
                .map(|_| {
                    let size = rng.gen_range(1..=n_count);
                    let mut s: Vec<usize> =
                        (0..size).map(|_| rng.gen_range(1..=n_count)).collect();
                    s.sort_unstable();
                    s.dedup();
                    s
                })
                .collect();
            let instance = MarriageInstance::new(sets, k).unwrap();
            let oracle = brute_force_feasible(&instance);
            match hall_defect_check(&instance).unwrap() {
                Feasibility::Feasible { .. } => {
                    assert!(oracle);
                    let sol = k_fold_marriage(&instance).unwrap();
                    assert!(verify_marriage(&instance, &sol));
                }
                Feasibility::Infeasible { violating } => {
                    assert!(!oracle);
                    let union: std::collections::BTreeSet<usize> = violating
                        .iter()
                        .flat_map(|&i| instance.sets[i - 1].iter().copied())
                        .collect();
                    assert!(violating.len() > instance.k * union.len());
                }
            }
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let instance = inst(&[&[1, 2, 3], &[1, 2], &[2, 3], &[1, 3]], 2);
        let a = k_fold_marriage(&instance).unwrap();
        let b = k_fold_marriage(&instance).unwrap();
        assert_eq!(a.partners, b.partners);
        assert_eq!(a.classes, b.classes);
    }

    #[test]
    fn omega_delta_examples() {
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let s = BiorthogonalSample::new(eye.clone(), eye, 0.5).unwrap();
        let o = omega_delta(&s);
        assert_eq!(o.union, vec![1, 2]);
        assert_eq!(o.per_row, vec![vec![1], vec![2]]);

        let perm = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let s = BiorthogonalSample::new(perm.clone(), perm, 0.5).unwrap();
        let o = omega_delta(&s);
        assert_eq!(o.per_row, vec![vec![2], vec![1]]);

        let y = vec![vec![0.5, 0.5]];
        let z = vec![vec![1.0, 1.0]];
        let s = BiorthogonalSample::new(y, z, 0.6).unwrap();
        assert!(omega_delta(&s).per_row[0].is_empty());
    }

    #[test]
    fn omega_delta_is_antitone_in_delta() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let rows = rng.gen_range(1..=4usize);
            let cols = rng.gen_range(1..=6usize);
            let y: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let z: Vec<Vec<f64>> = (0..rows)
                .map(|_| (0..cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let small = omega_delta(&BiorthogonalSample::new(y.clone(), z.clone(), 0.1).unwrap());
            let large = omega_delta(&BiorthogonalSample::new(y, z, 0.4).unwrap());
            assert!(large.union.iter().all(|n| small.union.contains(n)));
        }
    }
}
