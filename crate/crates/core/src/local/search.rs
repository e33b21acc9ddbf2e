//! Exhaustive enumeration of deterministic triangle models with small sources.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::NetworkTopology;

use super::model::{evaluate_model, HiddenSource, ResponseTable, RingLocalModel};
use super::target::{Objective, Target};

/// Full enumeration covers 4^(c²) tables per party; beyond c = 2 that is out of reach.
pub const MAX_EXHAUSTIVE_CARDINALITY: usize = 2;

/// Source weights on the optional grid move in steps of 1/WEIGHT_GRID.
pub const WEIGHT_GRID: u32 = 64;

/// Cap on candidate-times-weight-evaluation work when optimizing weights.
pub const WEIGHT_GRID_BUDGET: u128 = 500_000_000;

const MAX_WEIGHT_SWEEPS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub step: u64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub objective: Objective,
    pub cardinality: usize,
    pub value: f64,
    pub witness: RingLocalModel,
    pub candidates: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TracePoint>,
}

impl SearchResult {
    /// Re-evaluates the witness from scratch; the stored value must agree.
    pub fn reevaluate(&self, target: Option<&Target>) -> Result<f64> {
        self.objective
            .evaluate(&evaluate_model(&self.witness)?, target)
    }
}

#[derive(Clone, Debug)]
pub struct ExhaustiveOptions {
    pub cardinality: usize,
    pub objective: Objective,
    pub target: Option<Target>,
    /// Keep only tables whose four rows are a permutation of the outcomes (c = 2).
    pub bijective_responses: bool,
    /// Also tune each source's weights on the 1/64 grid by coordinate ascent.
    pub optimize_weights: bool,
}

impl ExhaustiveOptions {
    pub fn new(cardinality: usize, objective: Objective) -> Self {
        Self {
            cardinality,
            objective,
            target: None,
            bijective_responses: false,
            optimize_weights: false,
        }
    }
}

fn table_outcomes(code: u32, rows: usize) -> Vec<u8> {
    (0..rows)
        .map(|row| ((code >> (2 * (rows - 1 - row))) & 3) as u8)
        .collect()
}

fn is_bijective(code: u32) -> bool {
    let mut seen = [false; 4];
    for a in table_outcomes(code, 4) {
        if std::mem::replace(&mut seen[a as usize], true) {
            return false;
        }
    }
    true
}

/// Evaluates one deterministic triangle model with precomputed tables.
struct Scorer<'a> {
    c: usize,
    objective: Objective,
    target: Option<&'a Target>,
    /// Target cells sorted by decreasing probability, for the Linf tail.
    sorted_cells: Vec<usize>,
    target_total: f64,
    /// Fine outcome index → target cell.
    cell_of: [usize; 64],
}

impl<'a> Scorer<'a> {
    fn new(c: usize, objective: Objective, target: Option<&'a Target>) -> Self {
        let mut cell_of = [0usize; 64];
        let (mut sorted_cells, mut target_total) = (Vec::new(), 0.0);
        if let Some(t) = target {
            for (i, slot) in cell_of.iter_mut().enumerate() {
                *slot = t.cell_of(i);
            }
            sorted_cells = (0..t.cells().len()).collect();
            sorted_cells.sort_by(|&a, &b| t.cells()[b].total_cmp(&t.cells()[a]).then(a.cmp(&b)));
            target_total = t.cells().iter().sum();
        }
        Self {
            c,
            objective,
            target,
            sorted_cells,
            target_total,
            cell_of,
        }
    }

    /// `tables[i][l·c + r]` is party i's outcome (0-based); `w[s][v]` the source weights.
    fn value(&self, tables: [&[u8]; 3], w: &[[f64; 2]; 3]) -> f64 {
        let c = self.c;
        let mut support: [(usize, f64); 8] = [(usize::MAX, 0.0); 8];
        let mut len = 0;
        let mut all_equal = 0.0;
        for s0 in 0..c {
            for s1 in 0..c {
                for s2 in 0..c {
                    let mass = w[0][s0] * w[1][s1] * w[2][s2];
                    if mass == 0.0 {
                        continue;
                    }
                    let a0 = tables[0][s2 * c + s0];
                    let a1 = tables[1][s0 * c + s1];
                    let a2 = tables[2][s1 * c + s2];
                    if self.objective.maximizes() {
                        if a0 == a1 && a1 == a2 {
                            all_equal += mass;
                        }
                        continue;
                    }
                    let cell = self.cell_of[(a0 as usize) * 16 + (a1 as usize) * 4 + a2 as usize];
                    match support[..len].iter_mut().find(|e| e.0 == cell) {
                        Some(e) => e.1 += mass,
                        None => {
                            support[len] = (cell, mass);
                            len += 1;
                        }
                    }
                }
            }
        }
        let target = match (self.objective, self.target) {
            (Objective::MaxAllEqual, _) => return all_equal,
            (_, Some(t)) => t.cells(),
            (_, None) => unreachable!("target checked up front"),
        };
        let support = &support[..len];
        match self.objective {
            Objective::MinL1ToTarget => {
                self.target_total
                    + support
                        .iter()
                        .map(|&(cell, m)| (m - target[cell]).abs() - target[cell])
                        .sum::<f64>()
            }
            _ => {
                let inside = support
                    .iter()
                    .map(|&(cell, m)| (m - target[cell]).abs())
                    .fold(0.0, f64::max);
                let outside = self
                    .sorted_cells
                    .iter()
                    .find(|cell| !support.iter().any(|e| e.0 == **cell))
                    .map_or(0.0, |&cell| target[cell]);
                inside.max(outside)
            }
        }
    }
}

fn grid_weights(k: u32) -> [f64; 2] {
    [
        k as f64 / WEIGHT_GRID as f64,
        (WEIGHT_GRID - k) as f64 / WEIGHT_GRID as f64,
    ]
}

/// Coordinate ascent over the binary source weights; returns (score, grid counts).
fn tune_weights(scorer: &Scorer, tables: [&[u8]; 3]) -> (f64, [u32; 3]) {
    let mut ks = [WEIGHT_GRID / 2; 3];
    let weights = |ks: &[u32; 3]| {
        [
            grid_weights(ks[0]),
            grid_weights(ks[1]),
            grid_weights(ks[2]),
        ]
    };
    let mut best = scorer.objective.score(scorer.value(tables, &weights(&ks)));
    for _ in 0..MAX_WEIGHT_SWEEPS {
        let mut improved = false;
        for s in 0..3 {
            for k in 0..=WEIGHT_GRID {
                let mut trial = ks;
                trial[s] = k;
                let score = scorer
                    .objective
                    .score(scorer.value(tables, &weights(&trial)));
                if score > best {
                    best = score;
                    ks = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    (best, ks)
}

#[derive(Clone, Copy)]
struct Best {
    score: f64,
    codes: [u32; 3],
    ks: [u32; 3],
}

impl Best {
    fn better(self, other: Best) -> Best {
        // higher score wins; ties go to the lexicographically smaller witness
        if other.score > self.score
            || (other.score == self.score && (other.codes, other.ks) < (self.codes, self.ks))
        {
            other
        } else {
            self
        }
    }
}

/// Enumerates every deterministic response triple on the triangle with
/// sources of the given cardinality, uniform unless weights are tuned.
pub fn exhaustive_search(opts: &ExhaustiveOptions) -> Result<SearchResult> {
    let c = opts.cardinality;
    if c == 0 {
        return Err(Error::Domain("cardinality must be at least 1".into()));
    }
    if c > MAX_EXHAUSTIVE_CARDINALITY {
        let per_party = 1u128 << (2 * c * c).min(127);
        return Err(Error::capacity(
            "response tables per party",
            per_party,
            1 << (2 * MAX_EXHAUSTIVE_CARDINALITY * MAX_EXHAUSTIVE_CARDINALITY),
        ));
    }
    if opts.objective.needs_target() && opts.target.is_none() {
        return Err(Error::InvalidTarget(format!(
            "{} needs a target",
            opts.objective
        )));
    }
    if let Some(t) = &opts.target {
        t.check_parties(3)?;
    }
    if opts.bijective_responses && c != 2 {
        return Err(Error::Domain(
            "bijective responses need cardinality 2".into(),
        ));
    }
    let rows = c * c;
    let codes: Vec<u32> = (0..1u32 << (2 * rows))
        .filter(|&code| !opts.bijective_responses || is_bijective(code))
        .collect();
    let tables: Vec<Vec<u8>> = codes
        .iter()
        .map(|&code| table_outcomes(code, rows))
        .collect();
    let m = tables.len();
    let candidates = (m as u64).pow(3);
    let tune = opts.optimize_weights && c == 2;
    if tune {
        let work =
            candidates as u128 * (MAX_WEIGHT_SWEEPS as u128 * 3 * (WEIGHT_GRID as u128 + 1) + 1);
        if work > WEIGHT_GRID_BUDGET {
            return Err(Error::capacity(
                "weight-grid evaluations",
                work,
                WEIGHT_GRID_BUDGET,
            ));
        }
    }

    let scorer = Scorer::new(c, opts.objective, opts.target.as_ref());
    let uniform = if c == 2 { [0.5, 0.5] } else { [1.0, 0.0] };
    let uniform = [uniform; 3];
    let start = Best {
        score: f64::NEG_INFINITY,
        codes: [u32::MAX; 3],
        ks: [u32::MAX; 3],
    };

    let best = (0..m)
        .into_par_iter()
        .map(|i0| {
            let mut best = start;
            for i1 in 0..m {
                for i2 in 0..m {
                    let t = [
                        tables[i0].as_slice(),
                        tables[i1].as_slice(),
                        tables[i2].as_slice(),
                    ];
                    let (score, ks) = if tune {
                        tune_weights(&scorer, t)
                    } else {
                        (
                            scorer.objective.score(scorer.value(t, &uniform)),
                            [WEIGHT_GRID / 2; 3],
                        )
                    };
                    best = best.better(Best {
                        score,
                        codes: [codes[i0], codes[i1], codes[i2]],
                        ks,
                    });
                }
            }
            best
        })
        .reduce(|| start, Best::better);

    let sources = (0..3)
        .map(|s| {
            if c == 1 {
                HiddenSource::uniform(1)
            } else {
                HiddenSource::new(grid_weights(best.ks[s]).to_vec())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let responses = (0..3)
        .map(|party| {
            let outcomes: Vec<u8> = table_outcomes(best.codes[party], rows)
                .iter()
                .map(|a| a + 1)
                .collect();
            ResponseTable::deterministic(party, c, c, &outcomes)
        })
        .collect::<Result<Vec<_>>>()?;
    let witness = RingLocalModel::new(NetworkTopology::triangle(), sources, responses)?;
    let value = opts
        .objective
        .evaluate(&evaluate_model(&witness)?, opts.target.as_ref())?;
    Ok(SearchResult {
        objective: opts.objective,
        cardinality: c,
        value,
        witness,
        candidates,
        trace: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurements::ejm_basis;
    use crate::network::joint_distribution_naive;

    #[test]
    fn cardinality_one_is_trivially_perfect() {
        let r = exhaustive_search(&ExhaustiveOptions::new(1, Objective::MaxAllEqual)).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.candidates, 64);
        // smallest witness: everyone answers 1
        for resp in r.witness.responses() {
            assert_eq!(resp.deterministic_outcomes().unwrap(), vec![1]);
        }
    }

    #[test]
    fn capacity_and_argument_errors() {
        assert!(
            exhaustive_search(&ExhaustiveOptions::new(3, Objective::MaxAllEqual))
                .unwrap_err()
                .is_capacity()
        );
        assert!(exhaustive_search(&ExhaustiveOptions::new(0, Objective::MaxAllEqual)).is_err());
        assert!(exhaustive_search(&ExhaustiveOptions::new(1, Objective::MinL1ToTarget)).is_err());
        let mut opts = ExhaustiveOptions::new(2, Objective::MaxAllEqual);
        opts.optimize_weights = true;
        assert!(exhaustive_search(&opts).unwrap_err().is_capacity());
    }

    #[test]
    fn sparse_distances_match_dense_evaluation() {
        let d = joint_distribution_naive(NetworkTopology::triangle(), &ejm_basis()).unwrap();
        for target in [Target::new(&d), Target::coarse_grained(&d)] {
            for objective in [Objective::MinL1ToTarget, Objective::MinLinfToTarget] {
                let scorer = Scorer::new(2, objective, Some(&target));
                for codes in [[0u32, 0, 0], [27, 228, 141], [255, 1, 64], [99, 99, 17]] {
                    let t: Vec<Vec<u8>> = codes.iter().map(|&c| table_outcomes(c, 4)).collect();
                    let fast = scorer.value([&t[0], &t[1], &t[2]], &[[0.5, 0.5]; 3]);
                    let responses = (0..3)
                        .map(|p| {
                            let o: Vec<u8> = t[p].iter().map(|a| a + 1).collect();
                            ResponseTable::deterministic(p, 2, 2, &o).unwrap()
                        })
                        .collect();
                    let m = RingLocalModel::new(
                        NetworkTopology::triangle(),
                        vec![HiddenSource::uniform(2).unwrap(); 3],
                        responses,
                    )
                    .unwrap();
                    let dense = objective
                        .evaluate(&evaluate_model(&m).unwrap(), Some(&target))
                        .unwrap();
                    assert!((fast - dense).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn bijective_search_with_weights_reaches_one_half() {
        let mut opts = ExhaustiveOptions::new(2, Objective::MaxAllEqual);
        opts.bijective_responses = true;
        let r = exhaustive_search(&opts).unwrap();
        assert_eq!(r.candidates, 13824);
        assert!(r.value >= 0.5);
        assert!((r.reevaluate(None).unwrap() - r.value).abs() < 1e-12);
        opts.optimize_weights = true;
        let tuned = exhaustive_search(&opts).unwrap();
        assert!(tuned.value >= r.value);
        assert!((tuned.reevaluate(None).unwrap() - tuned.value).abs() < 1e-12);
    }
}
