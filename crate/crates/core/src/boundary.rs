//! Crossings of two receivers' SNR along one parameter.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::chernoff::ChernoffCache;
use crate::error::{domain, QiError, Result};
use crate::gaussian::QiScenario;
use crate::optimize::bisect;
use crate::receiver::{parse_receivers, receiver_snr, Receiver, SnrSource};
use crate::sweep::{Axis, AxisScale};

/// Points in the sign-change prescan.
pub const PRESCAN_POINTS: usize = 200;
/// Relative bracket width at which bisection stops.
pub const BOUNDARY_REL_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    Kappa,
    NS,
}

impl FromStr for Variable {
    type Err = QiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kappa" => Ok(Variable::Kappa),
            "ns" | "n_s" => Ok(Variable::NS),
            other => Err(domain(format!("unknown axis '{other}' (expected kappa or ns)"))),
        }
    }
}

/// One side of a comparison: a receiver, or the best of several.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Contender {
    Single(Receiver),
    BestOf(Vec<Receiver>),
}

impl Contender {
    fn members(&self) -> Vec<Receiver> {
        match self {
            Contender::Single(r) => vec![*r],
            Contender::BestOf(rs) => rs.clone(),
        }
    }
}

impl fmt::Display for Contender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Contender::Single(r) => write!(f, "{r}"),
            Contender::BestOf(rs) => {
                let names: Vec<&str> = rs.iter().map(|r| r.label()).collect();
                write!(f, "max({})", names.join(","))
            }
        }
    }
}

impl FromStr for Contender {
    type Err = QiError;

    /// `dhd` or a `+`/`,` separated list such as `dhd+opa+pc` for the best of them.
    fn from_str(s: &str) -> Result<Self> {
        let list = parse_receivers(&s.replace('+', ","))?;
        Ok(if list.len() == 1 {
            Contender::Single(list[0])
        } else {
            Contender::BestOf(list)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryQuery {
    pub a: Contender,
    pub b: Contender,
    /// Fixed parameters; the swept one is overwritten.
    pub base: QiScenario,
    pub variable: Variable,
    pub range: Axis,
    pub snr_source: SnrSource,
}

impl BoundaryQuery {
    /// Log-spaced search over `[1e-4, 1]`.
    pub fn new(a: Contender, b: Contender, base: QiScenario, variable: Variable) -> Self {
        Self {
            a,
            b,
            base,
            variable,
            range: Axis::log(1e-4, 1.0, PRESCAN_POINTS),
            snr_source: SnrSource::Formula,
        }
    }

    fn scenario_at(&self, x: f64) -> QiScenario {
        match self.variable {
            Variable::Kappa => self.base.with_kappa(x),
            Variable::NS => self.base.with_n_s(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub value: f64,
    /// SNR of either side at the crossing.
    pub snr: f64,
    /// Whether `a` leads just below the crossing.
    pub a_leads_below: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub a: String,
    pub b: String,
    pub variable: Variable,
    pub min: f64,
    pub max: f64,
    /// Empty when the difference never changes sign on the prescan.
    pub crossings: Vec<Crossing>,
}

struct Evaluator<'a> {
    query: &'a BoundaryQuery,
    cache: &'a ChernoffCache,
}

impl Evaluator<'_> {
    fn snr(&self, contender: &Contender, x: f64) -> Result<f64> {
        let s = self.query.scenario_at(x);
        let mut best = f64::NEG_INFINITY;
        for r in contender.members() {
            let v = if r == Receiver::Ci {
                self.cache.get(s.n_s, s.n_b, s.kappa, s.k_modes)?.snr_ci
            } else {
                receiver_snr(r, &s, self.query.snr_source)?
            };
            best = best.max(v);
        }
        Ok(best)
    }

    fn diff(&self, x: f64) -> Result<f64> {
        Ok(self.snr(&self.query.a, x)? - self.snr(&self.query.b, x)?)
    }
}

/// Every sign change of `SNR_a - SNR_b` found on the prescan, refined by
/// bisection.
pub fn find_boundaries(query: &BoundaryQuery, cache: &ChernoffCache) -> Result<BoundaryReport> {
    let mut problems = Vec::new();
    let axis = Axis { points: PRESCAN_POINTS, ..query.range };
    if !(axis.min < axis.max) {
        problems.push("range min must be < max".to_string());
    }
    if axis.scale == AxisScale::Log && !(axis.min > 0.0) {
        problems.push("log range needs min > 0".to_string());
    }
    if query.variable == Variable::Kappa && axis.max > 1.0 {
        problems.push("kappa range must stay within [0,1]".to_string());
    }
    if !problems.is_empty() {
        return Err(QiError::Spec(problems));
    }
    query.scenario_at(axis.min).validate()?;
    let eval = Evaluator { query, cache };
    let grid = axis.values();
    let diffs = grid.iter().map(|&x| eval.diff(x)).collect::<Result<Vec<_>>>()?;

    let mut crossings = Vec::new();
    for k in 0..grid.len() - 1 {
        let (d0, d1) = (diffs[k], diffs[k + 1]);
        if !(d0 * d1 < 0.0) {
            continue;
        }
        let mut failure = None;
        let x = bisect(
            |x| match eval.diff(x) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            grid[k],
            grid[k + 1],
            BOUNDARY_REL_TOL,
            axis.scale == AxisScale::Log,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        crossings.push(Crossing {
            value: x,
            snr: eval.snr(&query.a, x)?,
            a_leads_below: d0 > 0.0,
        });
    }
    Ok(BoundaryReport {
        a: query.a.to_string(),
        b: query.b.to_string(),
        variable: query.variable,
        min: axis.min,
        max: axis.max,
        crossings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(n_b: f64) -> QiScenario {
        QiScenario::new(0.01, 0.01, n_b, 1e7)
    }

    #[test]
    fn contender_parsing() {
        assert_eq!("dhd".parse::<Contender>().unwrap(), Contender::Single(Receiver::Dhd));
        assert_eq!(
            "dhd+opa".parse::<Contender>().unwrap(),
            Contender::BestOf(vec![Receiver::Dhd, Receiver::Opa])
        );
        assert_eq!(Contender::BestOf(vec![Receiver::Dhd, Receiver::Pc]).to_string(), "max(dHD,PC)");
    }

    #[test]
    fn pc_dhd_crossing_near_0009() {
        let q = BoundaryQuery::new(
            Contender::Single(Receiver::Dhd),
            Contender::Single(Receiver::Pc),
            base(30.0),
            Variable::Kappa,
        );
        let r = find_boundaries(&q, &ChernoffCache::new()).unwrap();
        assert_eq!(r.crossings.len(), 1);
        let c = r.crossings[0];
        assert!((0.0007..=0.0011).contains(&c.value), "{}", c.value);
        assert!(!c.a_leads_below);
    }

    #[test]
    fn identical_receivers_have_no_boundary() {
        let q = BoundaryQuery::new(
            Contender::Single(Receiver::Opa),
            Contender::Single(Receiver::Opa),
            base(30.0),
            Variable::Kappa,
        );
        assert!(find_boundaries(&q, &ChernoffCache::new()).unwrap().crossings.is_empty());
    }

    #[test]
    fn bad_range_is_rejected() {
        let mut q = BoundaryQuery::new(
            Contender::Single(Receiver::Dhd),
            Contender::Single(Receiver::Pc),
            base(30.0),
            Variable::Kappa,
        );
        q.range = Axis::log(0.0, 2.0, 10);
        let Err(QiError::Spec(p)) = find_boundaries(&q, &ChernoffCache::new()) else {
            panic!("expected spec error")
        };
        assert_eq!(p.len(), 2);
    }
}
