//! Hidden sources, response tables and their exact and sampled evaluation.

use std::collections::BTreeMap;
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{JointDistribution, NetworkTopology, TopologyKind, MAX_TABLE_PARTIES};

/// Tolerance on row and weight normalization.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Largest number of joint hidden-value assignments accepted by [`evaluate_model`].
pub const MAX_HIDDEN_CONFIGURATIONS: u128 = 100_000_000;

fn check_probability_vector(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::InvalidModel(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidModel(format!("{what} sums to {total}")));
    }
    Ok(())
}

/// An independent random variable shared by two neighbouring parties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSource", into = "RawSource")]
pub struct HiddenSource {
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSource {
    card: usize,
    weights: Vec<f64>,
}

impl TryFrom<RawSource> for HiddenSource {
    type Error = Error;

    fn try_from(raw: RawSource) -> Result<Self> {
        if raw.card != raw.weights.len() {
            return Err(Error::InvalidModel(format!(
                "source declares cardinality {} but lists {} weights",
                raw.card,
                raw.weights.len()
            )));
        }
        HiddenSource::new(raw.weights)
    }
}

impl From<HiddenSource> for RawSource {
    fn from(s: HiddenSource) -> Self {
        RawSource {
            card: s.weights.len(),
            weights: s.weights,
        }
    }
}

impl HiddenSource {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidModel(
                "source cardinality must be at least 1".into(),
            ));
        }
        check_probability_vector(&weights, "source weights")?;
        Ok(Self { weights })
    }

    pub fn uniform(cardinality: usize) -> Result<Self> {
        if cardinality == 0 {
            return Err(Error::InvalidModel(
                "source cardinality must be at least 1".into(),
            ));
        }
        Ok(Self {
            weights: vec![1.0 / cardinality as f64; cardinality],
        })
    }

    pub fn cardinality(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, value: usize) -> f64 {
        self.weights[value]
    }
}

/// Output distribution of one party for every (left, right) pair of hidden values.
#[derive(Clone, Debug, PartialEq)]
pub struct ResponseTable {
    party: usize,
    left_card: usize,
    right_card: usize,
    /// Row for (l, r) at index l·right_card + r; column k is outcome k+1.
    rows: Vec<[f64; 4]>,
}

impl ResponseTable {
    pub fn new(
        party: usize,
        left_card: usize,
        right_card: usize,
        rows: Vec<[f64; 4]>,
    ) -> Result<Self> {
        if left_card == 0 || right_card == 0 {
            return Err(Error::InvalidModel(
                "response cardinalities must be at least 1".into(),
            ));
        }
        if rows.len() != left_card * right_card {
            return Err(Error::InvalidModel(format!(
                "party {party}: {} rows for a {left_card}x{right_card} table",
                rows.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            check_probability_vector(
                row,
                &format!("party {party} row ({},{})", i / right_card, i % right_card),
            )?;
        }
        Ok(Self {
            party,
            left_card,
            right_card,
            rows,
        })
    }

    /// Deterministic table from outcomes in 1..=4, listed row by row.
    pub fn deterministic(
        party: usize,
        left_card: usize,
        right_card: usize,
        outcomes: &[u8],
    ) -> Result<Self> {
        let rows = outcomes
            .iter()
            .map(|&a| {
                if !(1..=4).contains(&a) {
                    return Err(Error::InvalidModel(format!("outcome {a} outside 1..=4")));
                }
                let mut row = [0.0; 4];
                row[a as usize - 1] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(party, left_card, right_card, rows)
    }

    pub fn party(&self) -> usize {
        self.party
    }

    pub fn left_card(&self) -> usize {
        self.left_card
    }

    pub fn right_card(&self) -> usize {
        self.right_card
    }

    pub fn row(&self, left: usize, right: usize) -> &[f64; 4] {
        &self.rows[left * self.right_card + right]
    }

    pub fn rows(&self) -> &[[f64; 4]] {
        &self.rows
    }

    pub fn is_deterministic(&self) -> bool {
        self.rows.iter().all(|row| {
            row.iter().filter(|&&p| p == 1.0).count() == 1
                && row.iter().all(|&p| p == 0.0 || p == 1.0)
        })
    }

    /// Outcomes (1..=4) row by row, if deterministic.
    pub fn deterministic_outcomes(&self) -> Option<Vec<u8>> {
        if !self.is_deterministic() {
            return None;
        }
        Some(
            self.rows
                .iter()
                .map(|row| row.iter().position(|&p| p == 1.0).unwrap() as u8 + 1)
                .collect(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct RawResponse {
    party: usize,
    rows: BTreeMap<String, [f64; 4]>,
}

fn parse_key(key: &str) -> Option<(usize, usize)> {
    let inner = key.trim().strip_prefix('(')?.strip_suffix(')')?;
    let (l, r) = inner.split_once(',')?;
    Some((l.trim().parse().ok()?, r.trim().parse().ok()?))
}

impl Serialize for ResponseTable {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut rows = BTreeMap::new();
        for l in 0..self.left_card {
            for r in 0..self.right_card {
                rows.insert(format!("({l},{r})"), *self.row(l, r));
            }
        }
        RawResponse {
            party: self.party,
            rows,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ResponseTable {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawResponse::deserialize(deserializer)?;
        let mut parsed = Vec::with_capacity(raw.rows.len());
        for (key, row) in &raw.rows {
            let (l, r) =
                parse_key(key).ok_or_else(|| D::Error::custom(format!("bad row key {key:?}")))?;
            parsed.push((l, r, *row));
        }
        let left_card = parsed.iter().map(|p| p.0 + 1).max().unwrap_or(0);
        let right_card = parsed.iter().map(|p| p.1 + 1).max().unwrap_or(0);
        if parsed.len() != left_card * right_card {
            return Err(D::Error::custom(format!(
                "party {}: rows do not cover a full {left_card}x{right_card} grid",
                raw.party
            )));
        }
        let mut rows = vec![[0.0; 4]; parsed.len()];
        for (l, r, row) in parsed {
            rows[l * right_card + r] = row;
        }
        ResponseTable::new(raw.party, left_card, right_card, rows).map_err(D::Error::custom)
    }
}

/// A classical model on a polygon (N sources) or open line (N+1 sources).
/// Party i reads the sources returned by `NetworkTopology::party_sources(i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct RingLocalModel {
    topology: NetworkTopology,
    sources: Vec<HiddenSource>,
    responses: Vec<ResponseTable>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    sources: Vec<HiddenSource>,
    responses: Vec<ResponseTable>,
}

impl TryFrom<RawModel> for RingLocalModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let n = raw.responses.len();
        let kind = if raw.sources.len() == n {
            TopologyKind::Polygon
        } else if raw.sources.len() == n + 1 {
            TopologyKind::OpenLine
        } else {
            return Err(Error::InvalidModel(format!(
                "{} sources for {n} parties fits neither a polygon nor an open line",
                raw.sources.len()
            )));
        };
        let topology =
            NetworkTopology::new(kind, n).map_err(|e| Error::InvalidModel(e.to_string()))?;
        RingLocalModel::new(topology, raw.sources, raw.responses)
    }
}

impl From<RingLocalModel> for RawModel {
    fn from(m: RingLocalModel) -> Self {
        RawModel {
            sources: m.sources,
            responses: m.responses,
        }
    }
}

impl RingLocalModel {
    pub fn new(
        topology: NetworkTopology,
        sources: Vec<HiddenSource>,
        responses: Vec<ResponseTable>,
    ) -> Result<Self> {
        if sources.len() != topology.n_sources() {
            return Err(Error::InvalidModel(format!(
                "{topology} needs {} sources, got {}",
                topology.n_sources(),
                sources.len()
            )));
        }
        if responses.len() != topology.n_parties() {
            return Err(Error::InvalidModel(format!(
                "{topology} needs {} response tables, got {}",
                topology.n_parties(),
                responses.len()
            )));
        }
        for (i, resp) in responses.iter().enumerate() {
            if resp.party != i {
                return Err(Error::InvalidModel(format!(
                    "response table {i} is labelled party {}",
                    resp.party
                )));
            }
            let (l, r) = topology.party_sources(i);
            if resp.left_card != sources[l].cardinality()
                || resp.right_card != sources[r].cardinality()
            {
                return Err(Error::InvalidModel(format!(
                    "party {i} table is {}x{} but its sources have cardinalities {} and {}",
                    resp.left_card,
                    resp.right_card,
                    sources[l].cardinality(),
                    sources[r].cardinality()
                )));
            }
        }
        Ok(Self {
            topology,
            sources,
            responses,
        })
    }

    pub fn topology(&self) -> NetworkTopology {
        self.topology
    }

    pub fn n_parties(&self) -> usize {
        self.topology.n_parties()
    }

    pub fn sources(&self) -> &[HiddenSource] {
        &self.sources
    }

    pub fn responses(&self) -> &[ResponseTable] {
        &self.responses
    }

    pub fn is_deterministic(&self) -> bool {
        self.responses.iter().all(ResponseTable::is_deterministic)
    }

    /// Number of joint hidden-value assignments, saturating at u128::MAX.
    pub fn hidden_configurations(&self) -> u128 {
        self.sources
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.cardinality() as u128))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)
            .map_err(|e| Error::Domain(format!("{}: {e}", path.display())))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Domain(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

fn check_capacity(m: &RingLocalModel) -> Result<()> {
    let n = m.n_parties();
    if n > MAX_TABLE_PARTIES {
        return Err(Error::capacity(
            "dense outcome table parties",
            n as u128,
            MAX_TABLE_PARTIES as u128,
        ));
    }
    let configs = m.hidden_configurations();
    if configs > MAX_HIDDEN_CONFIGURATIONS {
        return Err(Error::capacity(
            "hidden configurations",
            configs,
            MAX_HIDDEN_CONFIGURATIONS,
        ));
    }
    Ok(())
}

/// Exact outcome distribution, contracting the chain of parties one source
/// at a time. For a polygon the source to the left of party 0 is held fixed
/// and closed again at the last party.
pub fn evaluate_model(m: &RingLocalModel) -> Result<JointDistribution> {
    check_capacity(m)?;
    let top = m.topology;
    let n = top.n_parties();
    let closed = top.kind() == TopologyKind::Polygon;
    let first = &m.sources[top.party_sources(0).0];
    let mut out = vec![0.0; 1 << (2 * n)];

    for x in 0..first.cardinality() {
        let w0 = first.weight(x);
        if w0 == 0.0 {
            continue;
        }
        // state[prefix * card + value of the most recent source]
        let mut card = first.cardinality();
        let mut state = vec![0.0; card];
        state[x] = w0;
        for (i, resp) in m.responses.iter().enumerate() {
            let right = &m.sources[top.party_sources(i).1];
            let closing = closed && i == n - 1;
            let rc = right.cardinality();
            let mut next = vec![0.0; state.len() / card * 4 * rc];
            for (idx, &v) in state.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let (prefix, l) = (idx / card, idx % card);
                for r in 0..rc {
                    let w = match closing {
                        true if r == x => 1.0,
                        true => 0.0,
                        false => right.weight(r),
                    };
                    if w == 0.0 {
                        continue;
                    }
                    let row = resp.row(l, r);
                    for (a, &pa) in row.iter().enumerate() {
                        if pa != 0.0 {
                            next[(prefix * 4 + a) * rc + r] += v * w * pa;
                        }
                    }
                }
            }
            state = next;
            card = rc;
        }
        for (prefix, chunk) in state.chunks(card).enumerate() {
            out[prefix] += chunk.iter().sum::<f64>();
        }
    }
    JointDistribution::new(top, "local model", out)
}

/// p(a_1 = … = a_N) without building the full table: a trace (polygon) or
/// boundary contraction (open line) of per-outcome weighted matrices.
pub fn all_equal_probability(m: &RingLocalModel) -> f64 {
    let top = m.topology;
    let n = top.n_parties();
    let first = &m.sources[top.party_sources(0).0];
    let closed = top.kind() == TopologyKind::Polygon;
    let mut total = 0.0;
    for k in 0..4 {
        for x in 0..first.cardinality() {
            let w0 = first.weight(x);
            if w0 == 0.0 {
                continue;
            }
            let mut vec = vec![0.0; first.cardinality()];
            vec[x] = w0;
            for (i, resp) in m.responses.iter().enumerate() {
                let right = &m.sources[top.party_sources(i).1];
                let closing = closed && i == n - 1;
                let mut next = vec![0.0; right.cardinality()];
                for (l, &v) in vec.iter().enumerate() {
                    if v == 0.0 {
                        continue;
                    }
                    for (r, slot) in next.iter_mut().enumerate() {
                        let w = match closing {
                            true if r == x => 1.0,
                            true => 0.0,
                            false => right.weight(r),
                        };
                        *slot += v * w * resp.row(l, r)[k];
                    }
                }
                vec = next;
            }
            total += vec.iter().sum::<f64>();
        }
    }
    total
}

/// Monte-Carlo estimate of the outcome distribution from `shots` draws.
pub fn sample_model(m: &RingLocalModel, shots: u64, seed: u64) -> Result<JointDistribution> {
    if shots == 0 {
        return Err(Error::Range("shots must be at least 1".into()));
    }
    check_capacity(m)?;
    let top = m.topology;
    let n = top.n_parties();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source_dists = m
        .sources
        .iter()
        .map(|s| WeightedIndex::new(s.weights()).map_err(|e| Error::InvalidModel(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let row_dists = m
        .responses
        .iter()
        .map(|resp| {
            resp.rows
                .iter()
                .map(|row| WeightedIndex::new(row).map_err(|e| Error::InvalidModel(e.to_string())))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0u64; 1 << (2 * n)];
    let mut values = vec![0usize; m.sources.len()];
    for _ in 0..shots {
        for (v, d) in values.iter_mut().zip(&source_dists) {
            *v = d.sample(&mut rng);
        }
        let mut index = 0usize;
        for (i, resp) in m.responses.iter().enumerate() {
            let (l, r) = top.party_sources(i);
            let a = row_dists[i][values[l] * resp.right_card + values[r]].sample(&mut rng);
            index = index * 4 + a;
        }
        counts[index] += 1;
    }
    let probs = counts.iter().map(|&c| c as f64 / shots as f64).collect();
    JointDistribution::new(top, "sampled local model", probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(m: &RingLocalModel) -> Vec<f64> {
        let top = m.topology();
        let cards: Vec<usize> = m.sources().iter().map(HiddenSource::cardinality).collect();
        let n = top.n_parties();
        let mut out = vec![0.0; 1 << (2 * n)];
        let total: usize = cards.iter().product();
        for mut code in 0..total {
            let mut values = vec![0; cards.len()];
            let mut weight = 1.0;
            for (s, &c) in cards.iter().enumerate() {
                values[s] = code % c;
                code /= c;
                weight *= m.sources()[s].weight(values[s]);
            }
            // distribute over all outcome tuples
            for (index, slot) in out.iter_mut().enumerate() {
                let mut p = weight;
                let mut rest = index;
                for i in (0..n).rev() {
                    let a = rest % 4;
                    rest /= 4;
                    let (l, r) = top.party_sources(i);
                    p *= m.responses()[i].row(values[l], values[r])[a];
                }
                *slot += p;
            }
        }
        out
    }

    fn random_model(top: NetworkTopology, cards: &[usize], seed: u64) -> RingLocalModel {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normalized = |len: usize| {
            let v: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s: f64 = v.iter().sum();
            v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        let sources: Vec<HiddenSource> = cards
            .iter()
            .map(|&c| HiddenSource::new(normalized(c)).unwrap())
            .collect();
        let responses = (0..top.n_parties())
            .map(|i| {
                let (l, r) = top.party_sources(i);
                let rows = (0..cards[l] * cards[r])
                    .map(|_| {
                        let v = normalized(4);
                        [v[0], v[1], v[2], v[3]]
                    })
                    .collect();
                ResponseTable::new(i, cards[l], cards[r], rows).unwrap()
            })
            .collect();
        RingLocalModel::new(top, sources, responses).unwrap()
    }

    #[test]
    fn evaluation_matches_brute_force() {
        let cases = [
            (NetworkTopology::triangle(), vec![2, 3, 2]),
            (NetworkTopology::polygon(2).unwrap(), vec![3, 2]),
            (NetworkTopology::polygon(4).unwrap(), vec![2, 2, 3, 1]),
            (NetworkTopology::open_line(1).unwrap(), vec![2, 3]),
            (NetworkTopology::open_line(3).unwrap(), vec![2, 1, 3, 2]),
        ];
        for (seed, (top, cards)) in cases.into_iter().enumerate() {
            let m = random_model(top, &cards, seed as u64);
            let exact = evaluate_model(&m).unwrap();
            let oracle = brute_force(&m);
            for (a, b) in exact.probs().iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-14, "{top}");
            }
            assert!((all_equal_probability(&m) - exact.all_equal()).abs() < 1e-14);
        }
    }

    #[test]
    fn json_round_trip() {
        let m = random_model(NetworkTopology::open_line(2).unwrap(), &[2, 3, 1], 7);
        let back = RingLocalModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
        let m = random_model(NetworkTopology::triangle(), &[2, 2, 2], 8);
        let text = m.to_json().unwrap();
        assert!(text.contains("\"(1,0)\""));
        assert!(text.contains("\"card\": 2"));
        assert_eq!(RingLocalModel::from_json(&text).unwrap(), m);
    }

    #[test]
    fn invalid_models_are_rejected() {
        assert!(HiddenSource::new(vec![0.5, 0.6]).is_err());
        assert!(HiddenSource::new(vec![]).is_err());
        assert!(HiddenSource::new(vec![1.5, -0.5]).is_err());
        assert!(ResponseTable::new(0, 1, 1, vec![[0.5, 0.5, 0.5, 0.0]]).is_err());
        assert!(ResponseTable::deterministic(0, 1, 1, &[5]).is_err());
        let s = HiddenSource::uniform(2).unwrap();
        let r = ResponseTable::deterministic(0, 2, 2, &[1, 2, 3, 4]).unwrap();
        // wrong number of sources for a triangle
        assert!(RingLocalModel::new(
            NetworkTopology::triangle(),
            vec![s.clone(); 2],
            vec![r.clone(); 3]
        )
        .is_err());
        // mislabelled party
        assert!(RingLocalModel::new(
            NetworkTopology::triangle(),
            vec![s.clone(); 3],
            vec![r.clone(); 3]
        )
        .is_err());
        let text = r#"{"sources":[{"card":2,"weights":[0.5,0.5]}],"responses":[]}"#;
        assert!(RingLocalModel::from_json(text).is_err());
        let text = r#"{"sources":[{"card":3,"weights":[0.5,0.5]},{"card":1,"weights":[1.0]}],
            "responses":[{"party":0,"rows":{"(0,0)":[1,0,0,0]}}]}"#;
        assert!(RingLocalModel::from_json(text).is_err());
    }

    #[test]
    fn capacity_limit() {
        let s = HiddenSource::uniform(100).unwrap();
        let r = |i| ResponseTable::new(i, 100, 100, vec![[0.25; 4]; 10_000]).unwrap();
        let m = RingLocalModel::new(
            NetworkTopology::polygon(5).unwrap(),
            vec![s; 5],
            (0..5).map(r).collect(),
        )
        .unwrap();
        assert!(evaluate_model(&m).unwrap_err().is_capacity());
    }

    #[test]
    fn sampling_converges() {
        let m = random_model(NetworkTopology::triangle(), &[2, 2, 2], 3);
        let exact = evaluate_model(&m).unwrap();
        let shots = 200_000;
        let est = sample_model(&m, shots, 11).unwrap();
        for (p, q) in exact.probs().iter().zip(est.probs()) {
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            assert!((p - q).abs() <= 5.0 * sigma + 1e-12);
        }
        assert_eq!(
            sample_model(&m, 1000, 5).unwrap(),
            sample_model(&m, 1000, 5).unwrap()
        );
        assert!(sample_model(&m, 0, 5).is_err());
    }

    #[test]
    fn deterministic_detection() {
        let r = ResponseTable::deterministic(0, 2, 1, &[3, 1]).unwrap();
        assert!(r.is_deterministic());
        assert_eq!(r.deterministic_outcomes(), Some(vec![3, 1]));
        let r = ResponseTable::new(0, 1, 1, vec![[0.5, 0.5, 0.0, 0.0]]).unwrap();
        assert!(!r.is_deterministic());
        assert_eq!(r.deterministic_outcomes(), None);
    }
}
