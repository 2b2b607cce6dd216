//! Genie-aided DoF upper bound and the achievable-vs-bound comparison.
//!
//! Doubling the sum rate and handing each receiver the other two messages,
//! then splitting every transmitter's sequence over the state sets
//! `both_state(i)`, `delta(i)`, `gamma(i)` and `theta(i)`, leaves only the
//! `theta` pieces and the receivers' observations outside the "both" state.
//! Bounding each of those by its length gives
//!
//! ```text
//! DoF <= 1/2 * [ l(theta1) + l(theta2) + l(theta3) + 3 - l(E3) - l(F3) - l(G3) ]
//! ```
//!
//! where `l(S)` is the probability mass of `S`. Only this closed form is
//! executed; the entropy chain behind it is not.

use num::{BigRational, ToPrimitive};
use serde::Serialize;

use crate::simulate::{accounting, Mode};
use crate::topology::{both_state, format_rational, theta, StateDistribution, User};

fn three() -> BigRational {
    BigRational::from_integer(3.into())
}

/// The masses entering the bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundTerms {
    pub theta: [BigRational; 3],
    pub both: [BigRational; 3],
}

pub fn bound_terms(d: &StateDistribution) -> BoundTerms {
    BoundTerms {
        theta: User::ALL.map(|i| d.mass(&theta(i))),
        both: User::ALL.map(|i| d.get(both_state(i)).clone()),
    }
}

/// Normalized sum-DoF upper bound, clamped by the trivial 3-link cut.
pub fn upper_bound(d: &StateDistribution) -> BigRational {
    let t = bound_terms(d);
    let bracket: BigRational =
        t.theta.iter().sum::<BigRational>() + three() - t.both.iter().sum::<BigRational>();
    let half = BigRational::new(1.into(), 2.into());
    (bracket * half).min(three())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundReport {
    pub distribution: StateDistribution,
    pub upper: BigRational,
    pub achievable_joint: BigRational,
    pub achievable_separate: BigRational,
    /// Joint scheme meets the bound. For non-uniform inputs this is a numeric
    /// coincidence flag, not an optimality claim.
    pub tight: bool,
    pub terms: BoundTerms,
}

pub fn gap_report(d: &StateDistribution) -> BoundReport {
    let upper = upper_bound(d);
    let achievable_joint = accounting(d, Mode::Joint);
    BoundReport {
        distribution: d.clone(),
        tight: achievable_joint == upper,
        achievable_separate: accounting(d, Mode::Separate),
        achievable_joint,
        upper,
        terms: bound_terms(d),
    }
}

#[derive(Serialize)]
struct Lambda {
    theta1: String,
    theta2: String,
    theta3: String,
    #[serde(rename = "E3")]
    e3: String,
    #[serde(rename = "F3")]
    f3: String,
    #[serde(rename = "G3")]
    g3: String,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    distribution: &'a StateDistribution,
    upper: String,
    achievable_joint: String,
    achievable_separate: String,
    tight: bool,
    joint_label: &'static str,
    lambda: Lambda,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper_float: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    achievable_joint_float: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    achievable_separate_float: Option<f64>,
}

impl BoundReport {
    pub fn gap(&self) -> BigRational {
        &self.upper - &self.achievable_joint
    }

    fn joint_label(&self) -> &'static str {
        if self.distribution.is_uniform() {
            "joint"
        } else {
            "heuristic achievable"
        }
    }

    pub fn to_json(&self, float: bool) -> String {
        let f = |r: &BigRational| float.then(|| r.to_f64().unwrap_or(f64::NAN));
        let t = &self.terms;
        let json = ReportJson {
            distribution: &self.distribution,
            upper: format_rational(&self.upper),
            achievable_joint: format_rational(&self.achievable_joint),
            achievable_separate: format_rational(&self.achievable_separate),
            tight: self.tight,
            joint_label: self.joint_label(),
            lambda: Lambda {
                theta1: format_rational(&t.theta[0]),
                theta2: format_rational(&t.theta[1]),
                theta3: format_rational(&t.theta[2]),
                e3: format_rational(&t.both[0]),
                f3: format_rational(&t.both[1]),
                g3: format_rational(&t.both[2]),
            },
            upper_float: f(&self.upper),
            achievable_joint_float: f(&self.achievable_joint),
            achievable_separate_float: f(&self.achievable_separate),
        };
        let mut s = serde_json::to_string_pretty(&json).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self, float: bool) -> String {
        let line = |name: &str, r: &BigRational| {
            if float {
                format!(
                    "{name}: {} ({:.6})\n",
                    format_rational(r),
                    r.to_f64().unwrap_or(f64::NAN)
                )
            } else {
                format!("{name}: {}\n", format_rational(r))
            }
        };
        let mut s = String::new();
        s.push_str(&line("upper bound", &self.upper));
        s.push_str(&line(
            &format!("achievable ({})", self.joint_label()),
            &self.achievable_joint,
        ));
        s.push_str(&line("achievable (separate)", &self.achievable_separate));
        s.push_str(&line("gap", &self.gap()));
        s.push_str(&format!("tight: {}\n", self.tight));
        s
    }
}

/// True when `lo <= x <= hi`.
pub fn within(x: &BigRational, lo: &BigRational, hi: &BigRational) -> bool {
    lo <= x && x <= hi
}

/// Range every valid distribution's bound falls in.
pub fn bound_range() -> (BigRational, BigRational) {
    (BigRational::new(3.into(), 2.into()), three())
}
