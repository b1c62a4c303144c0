//! Report profiles: what the seller and the buyers tell the mechanism.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Money;

/// Opaque vertex identifier. The total order (lexicographic) is the
/// tie-breaking order used by every mechanism.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(String);

impl VertexId {
    pub fn new(id: impl Into<String>) -> Self {
        VertexId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId(s.to_string())
    }
}

impl From<String> for VertexId {
    fn from(s: String) -> Self {
        VertexId(s)
    }
}

/// A single buyer's report: her bid and the neighbors she diffuses to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Report {
    pub bid: Money,
    pub diffuse: BTreeSet<VertexId>,
}

impl Report {
    pub fn new<I, V>(bid: Money, diffuse: I) -> Self
    where
        I: IntoIterator<Item = V>,
        V: Into<VertexId>,
    {
        Report { bid, diffuse: diffuse.into_iter().map(Into::into).collect() }
    }
}

/// The auction input. When used as a *true* profile, bids are private values
/// and diffusion sets are the full neighbor sets `r(i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportProfile {
    pub seller: VertexId,
    pub seller_neighbors: BTreeSet<VertexId>,
    /// Externally trusted vertices.
    pub gamma0: BTreeSet<VertexId>,
    pub reports: BTreeMap<VertexId, Report>,
}

impl ReportProfile {
    pub fn new(seller: impl Into<VertexId>) -> Self {
        ReportProfile {
            seller: seller.into(),
            seller_neighbors: BTreeSet::new(),
            gamma0: BTreeSet::new(),
            reports: BTreeMap::new(),
        }
    }

    pub fn with_seller_neighbors<I, V>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = V>,
        V: Into<VertexId>,
    {
        self.seller_neighbors.extend(ids.into_iter().map(Into::into));
        self
    }

    pub fn with_gamma0<I, V>(mut self, ids: I) -> Self
    where
        I: IntoIterator<Item = V>,
        V: Into<VertexId>,
    {
        self.gamma0.extend(ids.into_iter().map(Into::into));
        self
    }

    /// Adds (or replaces) a buyer report.
    pub fn with_report<I, V>(mut self, id: impl Into<VertexId>, bid: Money, diffuse: I) -> Self
    where
        I: IntoIterator<Item = V>,
        V: Into<VertexId>,
    {
        self.reports.insert(id.into(), Report::new(bid, diffuse));
        self
    }

    pub fn bid(&self, id: &VertexId) -> Option<&Money> {
        self.reports.get(id).map(|r| &r.bid)
    }

    pub fn buyers(&self) -> impl Iterator<Item = &VertexId> {
        self.reports.keys()
    }

    /// Checks the structural invariants: no seller report, no dangling
    /// references, non-negative bids. Unknown `gamma0` members are not an
    /// error; they are dropped when the trusted set is computed.
    pub fn validate(&self) -> Result<()> {
        if self.reports.contains_key(&self.seller) {
            return Err(Error::SellerReport(self.seller.clone()));
        }
        for id in &self.seller_neighbors {
            if *id != self.seller && !self.reports.contains_key(id) {
                return Err(Error::DanglingId { id: id.clone(), context: "seller_neighbors".into() });
            }
        }
        for (owner, report) in &self.reports {
            if report.bid.is_negative() {
                return Err(Error::NegativeBid { id: owner.clone(), bid: report.bid.to_string() });
            }
            for id in &report.diffuse {
                if *id != self.seller && !self.reports.contains_key(id) {
                    return Err(Error::DanglingId { id: id.clone(), context: format!("the diffusion set of {owner}") });
                }
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: ProfileDocument = serde_json::from_str(s)?;
        doc.into_profile()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_document(&self) -> ProfileDocument {
        ProfileDocument {
            seller: self.seller.clone(),
            seller_neighbors: self.seller_neighbors.iter().cloned().collect(),
            gamma0: self.gamma0.iter().cloned().collect(),
            reports: self
                .reports
                .iter()
                .map(|(id, r)| ReportEntry {
                    id: id.clone(),
                    bid: r.bid.to_string(),
                    diffuse: r.diffuse.iter().cloned().collect(),
                })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("profile documents always serialize")
    }
}

/// On-disk JSON layout of a profile.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDocument {
    pub seller: VertexId,
    pub seller_neighbors: Vec<VertexId>,
    #[serde(default)]
    pub gamma0: Vec<VertexId>,
    pub reports: Vec<ReportEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportEntry {
    pub id: VertexId,
    pub bid: String,
    #[serde(default)]
    pub diffuse: Vec<VertexId>,
}

impl ProfileDocument {
    pub fn into_profile(self) -> Result<ReportProfile> {
        let mut profile = ReportProfile::new(self.seller);
        profile.seller_neighbors = self.seller_neighbors.into_iter().collect();
        profile.gamma0 = self.gamma0.into_iter().collect();
        for entry in self.reports {
            let bid: Money = entry.bid.parse()?;
            if bid.is_negative() {
                return Err(Error::NegativeBid { id: entry.id, bid: entry.bid });
            }
            if profile.reports.contains_key(&entry.id) {
                return Err(Error::DuplicateReport(entry.id));
            }
            profile.reports.insert(entry.id, Report::new(bid, entry.diffuse));
        }
        profile.validate()?;
        Ok(profile)
    }
}
