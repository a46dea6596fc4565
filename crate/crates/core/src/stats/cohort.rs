//! Individual-level clinical records and the cohort table format.
//!
//! The table is UTF-8, comma- or tab-separated, one row per individual,
//! with the header given by [`COLUMNS`]. Booleans are `0`/`1` (or
//! `true`/`false`); an empty cell marks a missing optional value.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sex {
    Female,
    Male,
    Other,
}

impl Sex {
    pub fn parse(s: &str) -> Option<Sex> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f" | "female" | "w" => Some(Sex::Female),
            "m" | "male" => Some(Sex::Male),
            "o" | "other" | "d" | "x" => Some(Sex::Other),
            _ => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Sex::Female => "F",
            Sex::Male => "M",
            Sex::Other => "O",
        }
    }
}

/// Binary conditions summarized as prevalences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    AntihypertensiveUse,
    AtrialFibrillation,
    CongestiveHeartFailure,
    PastMi,
    PastStroke,
    CoronaryArteryDisease,
    Cvd,
    Dyslipidemia,
    DiabetesT2,
    FamilyHistory,
}

impl Flag {
    pub const ALL: [Flag; 10] = [
        Flag::AntihypertensiveUse,
        Flag::AtrialFibrillation,
        Flag::CongestiveHeartFailure,
        Flag::PastMi,
        Flag::PastStroke,
        Flag::CoronaryArteryDisease,
        Flag::Cvd,
        Flag::Dyslipidemia,
        Flag::DiabetesT2,
        Flag::FamilyHistory,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Flag::AntihypertensiveUse => "antihypertensive_use",
            Flag::AtrialFibrillation => "atrial_fibrillation",
            Flag::CongestiveHeartFailure => "congestive_heart_failure",
            Flag::PastMi => "past_mi",
            Flag::PastStroke => "past_stroke",
            Flag::CoronaryArteryDisease => "coronary_artery_disease",
            Flag::Cvd => "cvd",
            Flag::Dyslipidemia => "dyslipidemia",
            Flag::DiabetesT2 => "diabetes_t2",
            Flag::FamilyHistory => "family_history",
        }
    }

    pub fn index(self) -> usize {
        Flag::ALL.iter().position(|&f| f == self).expect("listed")
    }
}

/// Future events within a horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Stroke5y,
    Mi5y,
    CardiacDeath5y,
    CardiacDeath10y,
}

impl Event {
    pub const ALL: [Event; 4] = [Event::Stroke5y, Event::Mi5y, Event::CardiacDeath5y, Event::CardiacDeath10y];

    pub fn column(self) -> &'static str {
        match self {
            Event::Stroke5y => "stroke_5y",
            Event::Mi5y => "mi_5y",
            Event::CardiacDeath5y => "cardiac_death_5y",
            Event::CardiacDeath10y => "cardiac_death_10y",
        }
    }

    pub fn index(self) -> usize {
        Event::ALL.iter().position(|&e| e == self).expect("listed")
    }
}

/// Continuous variables summarized by quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continuous {
    Age,
    TroponinI,
    NtProBnp,
    PlaqueCount,
    Score2,
}

impl Continuous {
    pub const ALL: [Continuous; 5] = [
        Continuous::Age,
        Continuous::TroponinI,
        Continuous::NtProBnp,
        Continuous::PlaqueCount,
        Continuous::Score2,
    ];

    pub fn column(self) -> &'static str {
        match self {
            Continuous::Age => "age",
            Continuous::TroponinI => "troponin_i",
            Continuous::NtProBnp => "nt_probnp",
            Continuous::PlaqueCount => "plaque_count",
            Continuous::Score2 => "score2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualRecord {
    pub individual_id: String,
    pub age: f64,
    pub sex: Sex,
    pub hypertension_dx: bool,
    /// Indexed by [`Flag::index`].
    pub flags: [bool; 10],
    pub troponin_i: Option<f64>,
    pub nt_probnp: Option<f64>,
    pub plaque_count: u32,
    pub score2: Option<f64>,
    /// Indexed by [`Event::index`].
    pub events: [bool; 4],
}

impl IndividualRecord {
    pub fn new(individual_id: &str, age: f64, sex: Sex, hypertension_dx: bool) -> Self {
        IndividualRecord {
            individual_id: individual_id.to_string(),
            age,
            sex,
            hypertension_dx,
            flags: [false; 10],
            troponin_i: None,
            nt_probnp: None,
            plaque_count: 0,
            score2: None,
            events: [false; 4],
        }
    }

    pub fn flag(&self, f: Flag) -> bool {
        self.flags[f.index()]
    }

    pub fn set_flag(&mut self, f: Flag, value: bool) {
        self.flags[f.index()] = value;
    }

    pub fn event(&self, e: Event) -> bool {
        self.events[e.index()]
    }

    pub fn set_event(&mut self, e: Event, value: bool) {
        self.events[e.index()] = value;
    }

    pub fn antihypertensive_use(&self) -> bool {
        self.flag(Flag::AntihypertensiveUse)
    }

    pub fn value(&self, v: Continuous) -> Option<f64> {
        match v {
            Continuous::Age => Some(self.age),
            Continuous::TroponinI => self.troponin_i,
            Continuous::NtProBnp => self.nt_probnp,
            Continuous::PlaqueCount => Some(f64::from(self.plaque_count)),
            Continuous::Score2 => self.score2,
        }
    }
}

/// Header of the cohort table, in order.
pub fn columns() -> Vec<&'static str> {
    let mut cols = vec!["individual_id", "age", "sex", "hypertension_dx"];
    cols.extend(Flag::ALL.iter().map(|f| f.column()));
    cols.extend(["troponin_i", "nt_probnp", "plaque_count", "score2"]);
    cols.extend(Event::ALL.iter().map(|e| e.column()));
    cols
}

fn malformed(line: usize, msg: impl std::fmt::Display) -> StatsError {
    StatsError::MalformedCohortTable(format!("row {line}: {msg}"))
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Some(true),
        "0" | "false" | "no" | "n" => Some(false),
        _ => None,
    }
}

pub fn parse_cohort(text: &str) -> Result<Vec<IndividualRecord>, StatsError> {
    let first_line = text.lines().next().unwrap_or("");
    let delimiter = if first_line.contains('\t') { b'\t' } else { b',' };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| StatsError::MalformedCohortTable(e.to_string()))?
        .clone();
    let pos = |name: &str| header.iter().position(|h| h == name);
    let mut index = Vec::new();
    for col in columns() {
        let p = pos(col).ok_or_else(|| StatsError::MalformedCohortTable(format!("missing column {col}")))?;
        index.push(p);
    }
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (row_no, row) in reader.records().enumerate() {
        let line = row_no + 2;
        let row = row.map_err(|e| malformed(line, e))?;
        let cell = |i: usize| row.get(index[i]).unwrap_or("");
        let boolean = |i: usize| {
            parse_bool(cell(i)).ok_or_else(|| malformed(line, format!("{} = {:?} is not 0/1", columns()[i], cell(i))))
        };
        let optional = |i: usize| -> Result<Option<f64>, StatsError> {
            let c = cell(i);
            if c.is_empty() {
                return Ok(None);
            }
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Some)
                .ok_or_else(|| malformed(line, format!("{} = {c:?} is not a number", columns()[i])))
        };
        let id = cell(0).to_string();
        if id.is_empty() {
            return Err(malformed(line, "empty individual_id"));
        }
        if !seen.insert(id.clone()) {
            return Err(malformed(line, format!("duplicate individual_id {id}")));
        }
        let age = optional(1)?.ok_or_else(|| malformed(line, "age missing"))?;
        if age <= 0.0 {
            return Err(malformed(line, format!("age {age} must be positive")));
        }
        let sex = Sex::parse(cell(2)).ok_or_else(|| malformed(line, format!("sex {:?}", cell(2))))?;
        let mut rec = IndividualRecord::new(&id, age, sex, boolean(3)?);
        let mut col = 4;
        for f in Flag::ALL {
            rec.set_flag(f, boolean(col)?);
            col += 1;
        }
        rec.troponin_i = optional(col)?;
        rec.nt_probnp = optional(col + 1)?;
        rec.plaque_count = cell(col + 2)
            .parse()
            .map_err(|_| malformed(line, format!("plaque_count {:?}", cell(col + 2))))?;
        rec.score2 = optional(col + 3)?;
        col += 4;
        for e in Event::ALL {
            rec.set_event(e, boolean(col)?);
            col += 1;
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn read_cohort(path: &Path) -> Result<Vec<IndividualRecord>, StatsError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| StatsError::MalformedCohortTable(format!("{}: {e}", path.display())))?;
    parse_cohort(&text)
}

pub fn render_cohort(records: &[IndividualRecord]) -> String {
    let mut out = columns().join(",");
    out.push('\n');
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let b = |v: bool| if v { "1" } else { "0" };
    for r in records {
        let mut cells = vec![
            r.individual_id.clone(),
            r.age.to_string(),
            r.sex.code().to_string(),
            b(r.hypertension_dx).to_string(),
        ];
        cells.extend(r.flags.iter().map(|&f| b(f).to_string()));
        cells.extend([opt(r.troponin_i), opt(r.nt_probnp), r.plaque_count.to_string(), opt(r.score2)]);
        cells.extend(r.events.iter().map(|&e| b(e).to_string()));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_cohort(path: &Path, records: &[IndividualRecord]) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(render_cohort(records).as_bytes())
}
