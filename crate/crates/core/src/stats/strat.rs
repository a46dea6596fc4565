//! Four-group comparison: diagnosis (+/-) crossed with predicted visual
//! damage (high/low). Ratios are taken against the dx-/low-VD group.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::cohort::{Continuous, Flag, IndividualRecord, Sex};
use super::events::{event_table, EventTable};
use super::quantile::{quartiles, Quartiles};
use super::StatsError;
use crate::classify::VdLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    DxPosHighVd,
    DxPosLowVd,
    DxNegHighVd,
    DxNegLowVd,
}

impl Group {
    pub const ALL: [Group; 4] = [Group::DxPosHighVd, Group::DxPosLowVd, Group::DxNegHighVd, Group::DxNegLowVd];
    pub const BASELINE: Group = Group::DxNegLowVd;

    pub fn of(dx: bool, vd: VdLabel) -> Group {
        match (dx, vd.is_high()) {
            (true, true) => Group::DxPosHighVd,
            (true, false) => Group::DxPosLowVd,
            (false, true) => Group::DxNegHighVd,
            (false, false) => Group::DxNegLowVd,
        }
    }

    pub fn index(self) -> usize {
        Group::ALL.iter().position(|&g| g == self).expect("listed")
    }

    pub fn high_vd(self) -> bool {
        matches!(self, Group::DxPosHighVd | Group::DxNegHighVd)
    }

    /// Prediction agrees with the diagnosis.
    pub fn aligned(self) -> bool {
        matches!(self, Group::DxPosHighVd | Group::DxNegLowVd)
    }

    pub fn name(self) -> &'static str {
        match self {
            Group::DxPosHighVd => "dx+/high_vd",
            Group::DxPosLowVd => "dx+/low_vd",
            Group::DxNegHighVd => "dx-/high_vd",
            Group::DxNegLowVd => "dx-/low_vd",
        }
    }
}

/// Ratio of two prevalences, undefined when the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ratio {
    Value(f64),
    Undefined,
}

impl Ratio {
    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(v),
            Ratio::Undefined => None,
        }
    }
}

impl fmt::Display for Ratio {
    /// One decimal place; full precision is kept in machine output.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Value(v) => write!(f, "{v:.1}"),
            Ratio::Undefined => f.write_str("undefined"),
        }
    }
}

pub fn prevalence_ratio(group_prev: f64, baseline_prev: f64) -> Ratio {
    if baseline_prev == 0.0 {
        Ratio::Undefined
    } else {
        Ratio::Value(group_prev / baseline_prev)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prevalence {
    pub flag: Flag,
    pub count: usize,
    pub n: usize,
    /// `None` for an empty group.
    pub prevalence: Option<f64>,
    pub ratio_vs_baseline: Ratio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSummary {
    pub variable: Continuous,
    /// Individuals with a value for this variable.
    pub n: usize,
    pub quartiles: Option<Quartiles>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: Group,
    pub n: usize,
    pub sex_counts: BTreeMap<Sex, usize>,
    pub prevalences: Vec<Prevalence>,
    pub variables: Vec<VariableSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratReport {
    pub cohort_size: usize,
    pub baseline: Group,
    pub groups: Vec<GroupSummary>,
    pub events: EventTable,
}

impl StratReport {
    pub fn group(&self, g: Group) -> &GroupSummary {
        &self.groups[g.index()]
    }

    pub fn prevalence(&self, g: Group, f: Flag) -> &Prevalence {
        &self.group(g).prevalences[f.index()]
    }
}

/// Group index of every individual, in input order.
pub fn assign_groups(
    individuals: &[IndividualRecord],
    vd: &BTreeMap<String, VdLabel>,
) -> Result<Vec<Group>, StatsError> {
    individuals
        .iter()
        .map(|r| {
            vd.get(&r.individual_id)
                .map(|&label| Group::of(r.hypertension_dx, label))
                .ok_or_else(|| StatsError::MissingVdLabel(r.individual_id.clone()))
        })
        .collect()
}

pub fn stratify(individuals: &[IndividualRecord], vd: &BTreeMap<String, VdLabel>) -> Result<StratReport, StatsError> {
    let groups = assign_groups(individuals, vd)?;
    let mut members: [Vec<&IndividualRecord>; 4] = Default::default();
    for (r, g) in individuals.iter().zip(&groups) {
        members[g.index()].push(r);
    }

    let prevalence_of = |rows: &[&IndividualRecord], f: Flag| {
        let count = rows.iter().filter(|r| r.flag(f)).count();
        (count, (!rows.is_empty()).then(|| count as f64 / rows.len() as f64))
    };
    let baseline = &members[Group::BASELINE.index()];

    let mut summaries = Vec::with_capacity(4);
    for g in Group::ALL {
        let rows = &members[g.index()];
        let mut sex_counts = BTreeMap::new();
        for r in rows {
            *sex_counts.entry(r.sex).or_insert(0) += 1;
        }
        let prevalences = Flag::ALL
            .iter()
            .map(|&f| {
                let (count, prevalence) = prevalence_of(rows, f);
                let ratio = match (prevalence, prevalence_of(baseline, f).1) {
                    (Some(p), Some(b)) => prevalence_ratio(p, b),
                    _ => Ratio::Undefined,
                };
                Prevalence {
                    flag: f,
                    count,
                    n: rows.len(),
                    prevalence,
                    ratio_vs_baseline: ratio,
                }
            })
            .collect();
        let variables = Continuous::ALL
            .iter()
            .map(|&v| {
                let values: Vec<f64> = rows.iter().filter_map(|r| r.value(v)).collect();
                VariableSummary {
                    variable: v,
                    n: values.len(),
                    quartiles: quartiles(&values).ok(),
                }
            })
            .collect();
        summaries.push(GroupSummary {
            group: g,
            n: rows.len(),
            sex_counts,
            prevalences,
            variables,
        });
    }
    Ok(StratReport {
        cohort_size: individuals.len(),
        baseline: Group::BASELINE,
        groups: summaries,
        events: event_table(individuals, vd)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::cohort::Sex;

    fn cohort(n: usize) -> Vec<IndividualRecord> {
        (0..n)
            .map(|i| {
                let mut r = IndividualRecord::new(&format!("p{i}"), 40.0 + i as f64, Sex::Male, i % 2 == 0);
                r.set_flag(Flag::DiabetesT2, i % 5 == 0);
                r.troponin_i = (i % 3 != 0).then_some(i as f64);
                r
            })
            .collect()
    }

    #[test]
    fn ratio_cases() {
        assert_eq!(prevalence_ratio(0.3, 0.3), Ratio::Value(1.0));
        let r = prevalence_ratio(0.098, 0.02).value().unwrap();
        assert!((r - 4.9).abs() < 1e-12);
        assert_eq!(prevalence_ratio(0.1, 0.0), Ratio::Undefined);
        assert_eq!(Ratio::Value(4.8999).to_string(), "4.9");
    }

    #[test]
    fn perfect_alignment_leaves_off_diagonal_empty() {
        let c = cohort(20);
        let vd = c
            .iter()
            .map(|r| (r.individual_id.clone(), VdLabel::from_high(r.hypertension_dx)))
            .collect();
        let rep = stratify(&c, &vd).unwrap();
        assert_eq!(rep.group(Group::DxPosLowVd).n, 0);
        assert_eq!(rep.group(Group::DxNegHighVd).n, 0);
        assert_eq!(rep.groups.iter().map(|g| g.n).sum::<usize>(), 20);
        let empty = rep.prevalence(Group::DxPosLowVd, Flag::DiabetesT2);
        assert_eq!(empty.prevalence, None);
        assert_eq!(empty.ratio_vs_baseline, Ratio::Undefined);
    }

    #[test]
    fn single_individual() {
        let c = cohort(1);
        let vd = BTreeMap::from([("p0".to_string(), VdLabel::LowVD)]);
        let rep = stratify(&c, &vd).unwrap();
        let sizes: Vec<usize> = rep.groups.iter().map(|g| g.n).collect();
        assert_eq!(sizes, vec![0, 1, 0, 0]);
    }

    #[test]
    fn missing_label_and_missing_values() {
        let c = cohort(6);
        let mut vd: BTreeMap<String, VdLabel> = c.iter().map(|r| (r.individual_id.clone(), VdLabel::LowVD)).collect();
        let rep = stratify(&c, &vd).unwrap();
        let trop = &rep.group(Group::DxNegLowVd).variables[1];
        assert_eq!(trop.variable, Continuous::TroponinI);
        // dx- are odd ids 1, 3, 5; troponin missing for 3.
        assert_eq!(trop.n, 2);
        vd.remove("p3");
        assert_eq!(stratify(&c, &vd), Err(StatsError::MissingVdLabel("p3".into())));
    }
}
