use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TopologyKind {
    /// N parties in a chain with a dangling half-singlet at each end.
    OpenLine,
    /// N parties on a ring, one source per edge.
    Polygon,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTopology")]
pub struct NetworkTopology {
    kind: TopologyKind,
    n_parties: usize,
}

#[derive(Deserialize)]
struct RawTopology {
    kind: TopologyKind,
    n_parties: usize,
}

impl TryFrom<RawTopology> for NetworkTopology {
    type Error = Error;
    fn try_from(raw: RawTopology) -> Result<Self> {
        Self::new(raw.kind, raw.n_parties)
    }
}

impl NetworkTopology {
    pub fn new(kind: TopologyKind, n_parties: usize) -> Result<Self> {
        let min = match kind {
            TopologyKind::OpenLine => 1,
            TopologyKind::Polygon => 2,
        };
        if n_parties < min {
            return Err(Error::Range(format!(
                "{kind:?} needs at least {min} parties, got {n_parties}"
            )));
        }
        Ok(Self { kind, n_parties })
    }

    pub fn open_line(n_parties: usize) -> Result<Self> {
        Self::new(TopologyKind::OpenLine, n_parties)
    }

    pub fn polygon(n_parties: usize) -> Result<Self> {
        Self::new(TopologyKind::Polygon, n_parties)
    }

    pub fn triangle() -> Self {
        Self {
            kind: TopologyKind::Polygon,
            n_parties: 3,
        }
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn n_parties(&self) -> usize {
        self.n_parties
    }

    /// N+1 for an open line (two dangling ends), N for a polygon.
    pub fn n_sources(&self) -> usize {
        match self.kind {
            TopologyKind::OpenLine => self.n_parties + 1,
            TopologyKind::Polygon => self.n_parties,
        }
    }

    /// Indices of the (left, right) sources of `party`.
    pub fn party_sources(&self, party: usize) -> (usize, usize) {
        assert!(party < self.n_parties, "party {party} out of range");
        match self.kind {
            TopologyKind::OpenLine => (party, party + 1),
            TopologyKind::Polygon => ((party + self.n_parties - 1) % self.n_parties, party),
        }
    }

    pub fn is_triangle(&self) -> bool {
        self.kind == TopologyKind::Polygon && self.n_parties == 3
    }
}

impl fmt::Display for NetworkTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TopologyKind::OpenLine => write!(f, "open line of {} parties", self.n_parties),
            TopologyKind::Polygon => write!(f, "{}-gon", self.n_parties),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_counts() {
        assert_eq!(NetworkTopology::open_line(4).unwrap().n_sources(), 5);
        assert_eq!(NetworkTopology::polygon(4).unwrap().n_sources(), 4);
        assert!(NetworkTopology::polygon(1).is_err());
        assert!(NetworkTopology::open_line(0).is_err());
    }

    #[test]
    fn triangle_adjacency() {
        let t = NetworkTopology::triangle();
        assert_eq!(t.party_sources(0), (2, 0));
        assert_eq!(t.party_sources(1), (0, 1));
        assert_eq!(t.party_sources(2), (1, 2));
    }

    #[test]
    fn deserialization_validates() {
        let ok: NetworkTopology =
            serde_json::from_str(r#"{"kind":"POLYGON","n_parties":3}"#).unwrap();
        assert!(ok.is_triangle());
        assert!(
            serde_json::from_str::<NetworkTopology>(r#"{"kind":"POLYGON","n_parties":1}"#).is_err()
        );
    }
}
