//! Oracle values as records, for the `oracle` subcommand.
//!
//! | quantity | needs | records |
//! |---|---|---|
//! | `w1` | group, beta | `w1` |
//! | `loop_table` | group, beta, `r_max`, `t_max` | `wilson_loop_exact` per `(R, T)` |
//! | `enumeration` | Z2, beta, extents, boundary | `plaquette_exact` |
//! | `bch` | U1 or SU2, `epsilon`, `ndims` (beta unused) | `lattice_sum`, `continuum_integral`, `ratio` |
//!
//! Loop values are normalized, `<Re Tr W> / N`.

use serde_json::Value;

use super::{Provenance, Record};
use crate::error::{Error, Result};
use crate::group::GroupId;
use crate::lattice::{Boundary, LatticeShape};
use crate::oracle::{
    bch_action_check, exact_tiny_lattice, single_plaquette_expectation, two_dim_exact_loop, ExactObservable,
    SmoothConnection,
};

#[derive(Clone, Debug, PartialEq)]
pub struct OracleQuery {
    pub group: GroupId,
    pub beta: f64,
    pub quantity: String,
    pub r_max: usize,
    pub t_max: usize,
    pub extents: Vec<usize>,
    pub boundary: Boundary,
    pub epsilon: f64,
    pub ndims: usize,
}

impl OracleQuery {
    pub fn new(group: GroupId, beta: f64, quantity: impl Into<String>) -> Self {
        Self {
            group,
            beta,
            quantity: quantity.into(),
            r_max: 4,
            t_max: 4,
            extents: vec![2, 2],
            boundary: Boundary::Open,
            epsilon: 0.1,
            ndims: 4,
        }
    }
}

/// Unit box side for the continuum check.
const BCH_BOX_SIDE: f64 = 1.0;

pub fn oracle_query(q: &OracleQuery) -> Result<Vec<Record>> {
    let prov = Provenance::new("oracle".into(), 0);
    let base = |extra: &[(&'static str, Value)]| with_base(q, extra);
    match q.quantity.as_str() {
        "w1" => {
            let w = single_plaquette_expectation(q.group, q.beta)?;
            Ok(vec![prov.record(0, "w1", &base(&[]), w)])
        }
        "loop_table" => {
            let mut out = Vec::new();
            for r in 1..=q.r_max {
                for t in 1..=q.t_max {
                    let w = two_dim_exact_loop(q.group, q.beta, r, t)?;
                    out.push(prov.record(0, "wilson_loop_exact", &base(&[("R", r.into()), ("T", t.into())]), w));
                }
            }
            Ok(out)
        }
        "enumeration" => {
            let shape = LatticeShape::new(&q.extents, q.boundary)?;
            let p = exact_tiny_lattice(q.group, &shape, q.beta, &ExactObservable::PlaquetteAverage)?;
            let b = match q.boundary {
                Boundary::Periodic => "periodic",
                Boundary::Open => "open",
            };
            let extra = [("extents", Value::from(q.extents.clone())), ("boundary", b.into())];
            Ok(vec![prov.record(0, "plaquette_exact", &base(&extra), p)])
        }
        "bch" => {
            let conn = match q.group {
                GroupId::SU2 => SmoothConnection::su2_catalog(q.ndims)?,
                GroupId::U1 => SmoothConnection::abelian_constant_curvature(q.ndims, 1.0)?,
                g => return Err(Error::usage(format!("bch check is available for U1 and SU2, not {g}"))),
            };
            let c = bch_action_check(&conn, q.epsilon, &vec![BCH_BOX_SIDE; q.ndims])?;
            let extra = [("epsilon", Value::from(q.epsilon)), ("ndims", Value::from(q.ndims))];
            let p = base(&extra);
            Ok(vec![
                prov.record(0, "lattice_sum", &p, c.lattice_sum),
                prov.record(0, "continuum_integral", &p, c.continuum_integral),
                prov.record(0, "ratio", &p, c.ratio),
            ])
        }
        other => Err(Error::usage(format!(
            "unknown oracle quantity `{other}` (expected w1, loop_table, enumeration or bch)"
        ))),
    }
}

fn with_base<'a>(q: &OracleQuery, extra: &[(&'a str, Value)]) -> Vec<(&'a str, Value)> {
    let mut v = vec![("group", Value::from(q.group.name()))];
    if q.quantity != "bch" {
        v.push(("beta", q.beta.into()));
    }
    v.extend(extra.iter().cloned());
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w1_and_loop_table() {
        let r = oracle_query(&OracleQuery::new(GroupId::U1, 1.0, "w1")).unwrap();
        assert!((r[0].value - 0.446_389_965_896_534_5).abs() < 1e-10);
        let mut q = OracleQuery::new(GroupId::Z2, 0.5, "loop_table");
        q.r_max = 2;
        q.t_max = 3;
        let t = oracle_query(&q).unwrap();
        assert_eq!(t.len(), 6);
        assert!((t[5].value - 0.5f64.tanh().powi(6)).abs() < 1e-15);
        assert_eq!(t[5].params["R"], 2);
    }

    #[test]
    fn enumeration_and_errors() {
        let r = oracle_query(&OracleQuery::new(GroupId::Z2, 0.5, "enumeration")).unwrap();
        assert!((r[0].value - 0.5f64.tanh()).abs() < 1e-14);
        assert!(oracle_query(&OracleQuery::new(GroupId::U1, 0.5, "enumeration")).is_err());
        assert!(oracle_query(&OracleQuery::new(GroupId::U1, 0.5, "nope")).is_err());
        assert!(oracle_query(&OracleQuery::new(GroupId::SU3, 0.5, "bch")).is_err());
    }
}
