//! Small named profiles used throughout the tests, benches and CLI examples.

use crate::money::Money;
use crate::profile::{ReportProfile, VertexId};

fn none() -> Vec<VertexId> {
    Vec::new()
}

/// Seller knows `a` and `b`; only `a` knows `c` and `d`.
pub fn theta1() -> ReportProfile {
    ReportProfile::new("s")
        .with_seller_neighbors(["a", "b"])
        .with_report("a", Money::from_integer(5), ["c", "d"])
        .with_report("b", Money::from_integer(5), none())
        .with_report("c", Money::from_integer(10), none())
        .with_report("d", Money::from_integer(15), none())
}

/// As [`theta1`], but `b` also knows `c` and `d`.
pub fn theta2() -> ReportProfile {
    let mut p = theta1();
    p.reports.get_mut(&VertexId::from("b")).unwrap().diffuse = ["c", "d"].into_iter().map(VertexId::from).collect();
    p
}

/// Seller knows `x` and `a`; `a` is the only way to reach `b` and `c`.
pub fn f3() -> ReportProfile {
    ReportProfile::new("s")
        .with_seller_neighbors(["x", "a"])
        .with_report("x", Money::from_integer(30), none())
        .with_report("a", Money::from_integer(1), ["b", "c"])
        .with_report("b", Money::from_integer(50), none())
        .with_report("c", Money::from_integer(90), none())
}

/// A diamond on which running IDM on the trusted subgraph rewards hiding a
/// neighbor.
pub fn osm() -> ReportProfile {
    ReportProfile::new("s")
        .with_seller_neighbors(["a", "b"])
        .with_report("a", Money::from_integer(8), ["c"])
        .with_report("b", Money::from_integer(3), ["c"])
        .with_report("c", Money::from_integer(9), none())
}

/// Looks a fixture up by name.
pub fn by_name(name: &str) -> Option<ReportProfile> {
    match name {
        "theta1" => Some(theta1()),
        "theta2" => Some(theta2()),
        "f3" => Some(f3()),
        "osm" => Some(osm()),
        _ => None,
    }
}

pub const NAMES: [&str; 4] = ["theta1", "theta2", "f3", "osm"];
