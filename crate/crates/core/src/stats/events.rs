//! Future-event counts by group and antihypertensive medication.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cohort::{Event, IndividualRecord};
use super::strat::{assign_groups, Group};
use super::StatsError;
use crate::classify::VdLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub event: Event,
    pub medicated: bool,
    /// Indexed by [`Group::index`].
    pub counts: [usize; 4],
}

impl EventRow {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn high_vd(&self) -> usize {
        Group::ALL
            .iter()
            .filter(|g| g.high_vd())
            .map(|g| self.counts[g.index()])
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumShare {
    pub medicated: bool,
    pub events: usize,
    pub high_vd_events: usize,
    /// `None` when the stratum has no events.
    pub high_vd_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTable {
    /// One row per (event, medication) pair, events outermost.
    pub rows: Vec<EventRow>,
    /// Medicated stratum first.
    pub shares: Vec<StratumShare>,
}

impl EventTable {
    pub fn row(&self, event: Event, medicated: bool) -> &EventRow {
        &self.rows[event.index() * 2 + usize::from(!medicated)]
    }

    pub fn share(&self, medicated: bool) -> &StratumShare {
        &self.shares[usize::from(!medicated)]
    }

    /// Share of all events, both strata pooled, in HighVD groups.
    pub fn overall_high_vd_share(&self) -> Option<f64> {
        let total: usize = self.shares.iter().map(|s| s.events).sum();
        let high: usize = self.shares.iter().map(|s| s.high_vd_events).sum();
        (total > 0).then(|| high as f64 / total as f64)
    }
}

pub fn event_table(individuals: &[IndividualRecord], vd: &BTreeMap<String, VdLabel>) -> Result<EventTable, StatsError> {
    let groups = assign_groups(individuals, vd)?;
    let mut rows = Vec::with_capacity(8);
    for e in Event::ALL {
        for medicated in [true, false] {
            let mut counts = [0usize; 4];
            for (r, g) in individuals.iter().zip(&groups) {
                if r.event(e) && r.antihypertensive_use() == medicated {
                    counts[g.index()] += 1;
                }
            }
            rows.push(EventRow { event: e, medicated, counts });
        }
    }
    let shares = [true, false]
        .into_iter()
        .map(|medicated| {
            let stratum = rows.iter().filter(|r| r.medicated == medicated);
            let events: usize = stratum.clone().map(EventRow::total).sum();
            let high: usize = stratum.map(EventRow::high_vd).sum();
            StratumShare {
                medicated,
                events,
                high_vd_events: high,
                high_vd_share: (events > 0).then(|| high as f64 / events as f64),
            }
        })
        .collect();
    Ok(EventTable { rows, shares })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::cohort::{Flag, Sex};

    #[test]
    fn no_events_all_zero() {
        let c: Vec<_> = (0..5).map(|i| IndividualRecord::new(&format!("p{i}"), 50.0, Sex::Female, i % 2 == 0)).collect();
        let vd = c.iter().map(|r| (r.individual_id.clone(), VdLabel::HighVD)).collect();
        let t = event_table(&c, &vd).unwrap();
        assert!(t.rows.iter().all(|r| r.total() == 0));
        assert_eq!(t.share(true).high_vd_share, None);
        assert_eq!(t.overall_high_vd_share(), None);
    }

    #[test]
    fn events_only_in_high_vd() {
        let mut c = Vec::new();
        let mut vd = BTreeMap::new();
        for i in 0..12 {
            let mut r = IndividualRecord::new(&format!("p{i}"), 50.0, Sex::Male, i % 3 == 0);
            let high = i % 2 == 0;
            r.set_flag(Flag::AntihypertensiveUse, i % 4 == 0);
            if high {
                r.set_event(Event::Mi5y, true);
                r.set_event(Event::CardiacDeath10y, i % 4 == 0);
            }
            vd.insert(r.individual_id.clone(), VdLabel::from_high(high));
            c.push(r);
        }
        let t = event_table(&c, &vd).unwrap();
        assert_eq!(t.overall_high_vd_share(), Some(1.0));
        assert_eq!(t.row(Event::Mi5y, true).total() + t.row(Event::Mi5y, false).total(), 6);
    }
}
