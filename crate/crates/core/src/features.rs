//! Participation records, the 19-column feature matrix and descriptive statistics.
//!
//! Bill-level aggregates (`n_sponsors` through `pct_female_sponsors`) count every participant
//! of the bill, the initiating sponsor included. Constituency columns are [`MISSING`] for
//! proportional-representation members.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Bill, Constituency, ElectionType, Gender, Ideology, Legislator};
use crate::matrix::{is_missing, Dataset, Matrix, MISSING};
use crate::table::{fmt_f64, Table};

pub const N_FEATURES: usize = 19;

/// Column names, in matrix order. Part of the external interface.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "gender",
    "election_type",
    "committee_type",
    "terms_elected",
    "electoral_population",
    "votes",
    "invalid_votes",
    "area_km2",
    "n_sponsors",
    "n_conservative_sponsors",
    "n_progressive_sponsors",
    "pct_conservative_sponsors",
    "pct_progressive_sponsors",
    "avg_terms_elected",
    "n_male_sponsors",
    "n_female_sponsors",
    "pct_male_sponsors",
    "pct_female_sponsors",
    "approval",
];

/// Column indices by role.
pub mod col {
    pub const GENDER: usize = 0;
    pub const ELECTION_TYPE: usize = 1;
    pub const COMMITTEE_TYPE: usize = 2;
    pub const TERMS_ELECTED: usize = 3;
    pub const ELECTORAL_POPULATION: usize = 4;
    pub const VOTES: usize = 5;
    pub const INVALID_VOTES: usize = 6;
    pub const AREA_KM2: usize = 7;
    pub const N_SPONSORS: usize = 8;
    pub const N_CONSERVATIVE: usize = 9;
    pub const N_PROGRESSIVE: usize = 10;
    pub const PCT_CONSERVATIVE: usize = 11;
    pub const PCT_PROGRESSIVE: usize = 12;
    pub const AVG_TERMS: usize = 13;
    pub const N_MALE: usize = 14;
    pub const N_FEMALE: usize = 15;
    pub const PCT_MALE: usize = 16;
    pub const PCT_FEMALE: usize = 17;
    pub const APPROVAL: usize = 18;
}

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FeatureError {
    #[error("bill {bill_id}: unknown legislator \"{legislator_id}\"")]
    UnknownLegislator { bill_id: String, legislator_id: String },
    #[error("bill {bill_id}: legislator \"{legislator_id}\" participates twice")]
    DuplicateParticipant { bill_id: String, legislator_id: String },
    #[error("unknown bill \"{0}\" in participation records")]
    UnknownBill(String),
    #[error("legislator {legislator_id}: constituency \"{constituency_id}\" not found")]
    MissingConstituency { legislator_id: String, constituency_id: String },
    #[error("no participation records")]
    Empty,
    #[error("{path}: {message}")]
    Read { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Sponsor,
    Cosponsor,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Sponsor => "sponsor",
            Role::Cosponsor => "cosponsor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParticipationRecord {
    pub bill_id: String,
    pub legislator_id: String,
    pub role: Role,
}

/// Expands bills into one record per (bill, participant): sponsor first, then cosponsors in
/// listed order.
pub fn build_participation(
    bills: &[Bill],
    legislators: &[Legislator],
) -> Result<Vec<ParticipationRecord>, FeatureError> {
    let known: HashSet<&str> = legislators.iter().map(|l| l.legislator_id.as_str()).collect();
    let mut out = Vec::new();
    for b in bills {
        let mut seen = HashSet::new();
        for (k, id) in b.participants().enumerate() {
            if !known.contains(id) {
                return Err(FeatureError::UnknownLegislator { bill_id: b.bill_id.clone(), legislator_id: id.into() });
            }
            if !seen.insert(id) {
                return Err(FeatureError::DuplicateParticipant {
                    bill_id: b.bill_id.clone(),
                    legislator_id: id.into(),
                });
            }
            out.push(ParticipationRecord {
                bill_id: b.bill_id.clone(),
                legislator_id: id.to_string(),
                role: if k == 0 { Role::Sponsor } else { Role::Cosponsor },
            });
        }
    }
    Ok(out)
}

/// Per-bill participant composition (features 9 to 19).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BillAggregate {
    pub n: f64,
    pub n_conservative: f64,
    pub n_progressive: f64,
    pub avg_terms: f64,
    pub n_male: f64,
    pub n_female: f64,
    pub approved: bool,
}

impl BillAggregate {
    fn write_into(&self, row: &mut [f64]) {
        row[col::N_SPONSORS] = self.n;
        row[col::N_CONSERVATIVE] = self.n_conservative;
        row[col::N_PROGRESSIVE] = self.n_progressive;
        row[col::PCT_CONSERVATIVE] = self.n_conservative / self.n;
        row[col::PCT_PROGRESSIVE] = self.n_progressive / self.n;
        row[col::AVG_TERMS] = self.avg_terms;
        row[col::N_MALE] = self.n_male;
        row[col::N_FEMALE] = self.n_female;
        row[col::PCT_MALE] = self.n_male / self.n;
        row[col::PCT_FEMALE] = self.n_female / self.n;
        row[col::APPROVAL] = if self.approved { 1.0 } else { 0.0 };
    }
}

struct Lookup<'a> {
    bills: HashMap<&'a str, &'a Bill>,
    legislators: HashMap<&'a str, &'a Legislator>,
    constituencies: HashMap<&'a str, &'a Constituency>,
}

impl<'a> Lookup<'a> {
    fn new(bills: &'a [Bill], legislators: &'a [Legislator], constituencies: &'a [Constituency]) -> Self {
        Self {
            bills: bills.iter().map(|b| (b.bill_id.as_str(), b)).collect(),
            legislators: legislators.iter().map(|l| (l.legislator_id.as_str(), l)).collect(),
            constituencies: constituencies.iter().map(|c| (c.constituency_id.as_str(), c)).collect(),
        }
    }

    fn legislator(&self, bill_id: &str, id: &str) -> Result<&'a Legislator, FeatureError> {
        self.legislators.get(id).copied().ok_or_else(|| FeatureError::UnknownLegislator {
            bill_id: bill_id.to_string(),
            legislator_id: id.to_string(),
        })
    }

    fn constituency(&self, l: &Legislator) -> Result<Option<&'a Constituency>, FeatureError> {
        match (l.election_type, &l.constituency_id) {
            (ElectionType::Constituency, Some(cid)) => {
                self.constituencies.get(cid.as_str()).copied().map(Some).ok_or_else(|| {
                    FeatureError::MissingConstituency {
                        legislator_id: l.legislator_id.clone(),
                        constituency_id: cid.clone(),
                    }
                })
            }
            _ => Ok(None),
        }
    }

    /// Aggregates over every participant of the bill.
    fn aggregate(&self, bill: &Bill) -> Result<BillAggregate, FeatureError> {
        let mut a = BillAggregate {
            n: 0.0,
            n_conservative: 0.0,
            n_progressive: 0.0,
            avg_terms: 0.0,
            n_male: 0.0,
            n_female: 0.0,
            approved: bill.approved(),
        };
        let mut terms = 0.0;
        for id in bill.participants() {
            let l = self.legislator(&bill.bill_id, id)?;
            a.n += 1.0;
            match l.ideology {
                Ideology::Conservative => a.n_conservative += 1.0,
                Ideology::Progressive => a.n_progressive += 1.0,
            }
            match l.gender {
                Gender::Male => a.n_male += 1.0,
                Gender::Female => a.n_female += 1.0,
            }
            terms += f64::from(l.terms_elected);
        }
        a.avg_terms = terms / a.n;
        Ok(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureOptions {
    /// Keep the bill-outcome column (`approval`); dropping it supports leakage checks.
    pub include_approval: bool,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self { include_approval: true }
    }
}

/// Feature rows, party labels (1 = conservative, 0 = progressive) and row ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub feature_names: Vec<String>,
    pub x: Matrix,
    pub labels: Vec<u8>,
    /// (bill_id, legislator_id) per row.
    pub row_ids: Vec<(String, String)>,
}

impl LabeledMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dataset(&self) -> Dataset {
        Dataset::new(self.x.clone(), self.labels.clone())
    }

    pub fn subset(&self, idx: &[usize]) -> LabeledMatrix {
        LabeledMatrix {
            feature_names: self.feature_names.clone(),
            x: self.x.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            row_ids: idx.iter().map(|&i| self.row_ids[i].clone()).collect(),
        }
    }

    pub fn row_id_strings(&self) -> Vec<String> {
        self.row_ids.iter().map(|(b, l)| format!("{b}:{l}")).collect()
    }

    /// Reads the layout written by [`LabeledMatrix::to_table`].
    pub fn read_csv(path: impl AsRef<std::path::Path>) -> Result<LabeledMatrix, FeatureError> {
        let path = path.as_ref();
        let err = |m: String| FeatureError::Read { path: path.display().to_string(), message: m };
        let mut rdr = csv::Reader::from_path(path).map_err(|e| err(e.to_string()))?;
        let header: Vec<String> = rdr.headers().map_err(|e| err(e.to_string()))?.iter().map(str::to_string).collect();
        if header.len() < 3
            || header[0] != "bill_id"
            || header[1] != "legislator_id"
            || header[header.len() - 1] != "label"
        {
            return Err(err("expected columns bill_id, legislator_id, <features>, label".into()));
        }
        let feature_names = header[2..header.len() - 1].to_vec();
        let p = feature_names.len();
        let (mut data, mut labels, mut row_ids) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| err(e.to_string()))?;
            let line = i + 2;
            for j in 0..p {
                let cell = &rec[j + 2];
                let v = if cell == crate::table::NA {
                    MISSING
                } else {
                    cell.parse::<f64>().map_err(|e| err(format!("line {line}, column {}: {e}", header[j + 2])))?
                };
                data.push(v);
            }
            let label = match &rec[p + 2] {
                "0" => 0,
                "1" => 1,
                other => return Err(err(format!("line {line}: label must be 0 or 1, found `{other}`"))),
            };
            labels.push(label);
            row_ids.push((rec[0].to_string(), rec[1].to_string()));
        }
        Ok(LabeledMatrix { feature_names, x: Matrix::from_vec(labels.len(), p, data), labels, row_ids })
    }

    /// Headered table: bill_id, legislator_id, feature columns, label.
    pub fn to_table(&self) -> Table {
        let mut header = vec!["bill_id".to_string(), "legislator_id".to_string()];
        header.extend(self.feature_names.iter().cloned());
        header.push("label".into());
        let mut t = Table::new(header);
        for (i, (b, l)) in self.row_ids.iter().enumerate() {
            let mut row = vec![b.clone(), l.clone()];
            row.extend(self.x.row(i).iter().map(|v| fmt_f64(*v)));
            row.push(self.labels[i].to_string());
            t.push(row);
        }
        t
    }
}

pub fn ideology_label(i: Ideology) -> u8 {
    match i {
        Ideology::Conservative => 1,
        Ideology::Progressive => 0,
    }
}

/// Builds the labelled feature matrix, one row per participation record.
pub fn build_feature_matrix(
    records: &[ParticipationRecord],
    bills: &[Bill],
    legislators: &[Legislator],
    constituencies: &[Constituency],
    options: FeatureOptions,
) -> Result<LabeledMatrix, FeatureError> {
    if records.is_empty() {
        return Err(FeatureError::Empty);
    }
    let lookup = Lookup::new(bills, legislators, constituencies);
    let mut aggregates: HashMap<&str, BillAggregate> = HashMap::new();
    let mut x = Matrix::zeros(records.len(), N_FEATURES);
    let mut labels = Vec::with_capacity(records.len());
    let mut row_ids = Vec::with_capacity(records.len());

    for (i, r) in records.iter().enumerate() {
        let bill = lookup
            .bills
            .get(r.bill_id.as_str())
            .copied()
            .ok_or_else(|| FeatureError::UnknownBill(r.bill_id.clone()))?;
        let agg = match aggregates.get(bill.bill_id.as_str()) {
            Some(a) => *a,
            None => {
                let a = lookup.aggregate(bill)?;
                aggregates.insert(bill.bill_id.as_str(), a);
                a
            }
        };
        let l = lookup.legislator(&r.bill_id, &r.legislator_id)?;
        let row = x.row_mut(i);
        row[col::GENDER] = if l.gender == Gender::Male { 1.0 } else { 0.0 };
        row[col::ELECTION_TYPE] = if l.election_type == ElectionType::Constituency { 1.0 } else { 0.0 };
        row[col::COMMITTEE_TYPE] = if l.on_transport_committee { 1.0 } else { 0.0 };
        row[col::TERMS_ELECTED] = f64::from(l.terms_elected);
        match lookup.constituency(l)? {
            Some(c) => {
                row[col::ELECTORAL_POPULATION] = c.electoral_population as f64;
                row[col::VOTES] = c.votes as f64;
                row[col::INVALID_VOTES] = c.invalid_votes as f64;
                row[col::AREA_KM2] = c.area_km2;
            }
            None => {
                row[col::ELECTORAL_POPULATION..=col::AREA_KM2].fill(MISSING);
            }
        }
        agg.write_into(row);
        labels.push(ideology_label(l.ideology));
        row_ids.push((r.bill_id.clone(), r.legislator_id.clone()));
    }

    let mut m =
        LabeledMatrix { feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(), x, labels, row_ids };
    if !options.include_approval {
        let keep: Vec<usize> = (0..N_FEATURES).filter(|&j| j != col::APPROVAL).collect();
        m.x = m.x.select_cols(&keep);
        m.feature_names.remove(col::APPROVAL);
    }
    Ok(m)
}

/// Participation counts and means laid out like a proposal-participation summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescriptiveStats {
    pub total: usize,
    pub conservative: usize,
    pub progressive: usize,
    pub male: usize,
    pub female: usize,
    pub constituency: usize,
    pub proportional: usize,
    pub committee_transport: usize,
    pub committee_other: usize,
    pub sponsor_role: usize,
    pub cosponsor_role: usize,
    pub approval_accept: usize,
    pub approval_reject: usize,
    pub mean_terms_elected: Option<f64>,
    pub mean_electoral_population: Option<f64>,
    pub mean_votes: Option<f64>,
    pub mean_invalid_votes: Option<f64>,
    pub mean_area_km2: Option<f64>,
    /// Record-weighted means of the bill-level columns.
    pub mean_n_sponsors: Option<f64>,
    pub mean_n_conservative_sponsors: Option<f64>,
    pub mean_n_progressive_sponsors: Option<f64>,
    pub mean_pct_conservative_sponsors: Option<f64>,
    pub mean_pct_progressive_sponsors: Option<f64>,
    pub mean_avg_terms_elected: Option<f64>,
    pub mean_n_male_sponsors: Option<f64>,
    pub mean_n_female_sponsors: Option<f64>,
    pub mean_pct_male_sponsors: Option<f64>,
    pub mean_pct_female_sponsors: Option<f64>,
}

#[derive(Default)]
struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    fn add(&mut self, v: f64) {
        if !is_missing(v) {
            self.sum += v;
            self.n += 1;
        }
    }

    fn get(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// Summary counts over participation records plus record-weighted means.
pub fn describe(
    records: &[ParticipationRecord],
    bills: &[Bill],
    legislators: &[Legislator],
    constituencies: &[Constituency],
) -> Result<DescriptiveStats, FeatureError> {
    let lookup = Lookup::new(bills, legislators, constituencies);
    let mut s = DescriptiveStats {
        total: records.len(),
        conservative: 0,
        progressive: 0,
        male: 0,
        female: 0,
        constituency: 0,
        proportional: 0,
        committee_transport: 0,
        committee_other: 0,
        sponsor_role: 0,
        cosponsor_role: 0,
        approval_accept: 0,
        approval_reject: 0,
        mean_terms_elected: None,
        mean_electoral_population: None,
        mean_votes: None,
        mean_invalid_votes: None,
        mean_area_km2: None,
        mean_n_sponsors: None,
        mean_n_conservative_sponsors: None,
        mean_n_progressive_sponsors: None,
        mean_pct_conservative_sponsors: None,
        mean_pct_progressive_sponsors: None,
        mean_avg_terms_elected: None,
        mean_n_male_sponsors: None,
        mean_n_female_sponsors: None,
        mean_pct_male_sponsors: None,
        mean_pct_female_sponsors: None,
    };
    let mut means: [Mean; 15] = Default::default();
    let mut aggregates: HashMap<&str, BillAggregate> = HashMap::new();
    let mut row = [0.0; N_FEATURES];

    for r in records {
        let bill = lookup
            .bills
            .get(r.bill_id.as_str())
            .copied()
            .ok_or_else(|| FeatureError::UnknownBill(r.bill_id.clone()))?;
        let l = lookup.legislator(&r.bill_id, &r.legislator_id)?;
        match l.ideology {
            Ideology::Conservative => s.conservative += 1,
            Ideology::Progressive => s.progressive += 1,
        }
        match l.gender {
            Gender::Male => s.male += 1,
            Gender::Female => s.female += 1,
        }
        match l.election_type {
            ElectionType::Constituency => s.constituency += 1,
            ElectionType::Proportional => s.proportional += 1,
        }
        if l.on_transport_committee {
            s.committee_transport += 1;
        } else {
            s.committee_other += 1;
        }
        match r.role {
            Role::Sponsor => s.sponsor_role += 1,
            Role::Cosponsor => s.cosponsor_role += 1,
        }
        if bill.approved() {
            s.approval_accept += 1;
        } else {
            s.approval_reject += 1;
        }
        means[0].add(f64::from(l.terms_elected));
        if let Some(c) = lookup.constituency(l)? {
            means[1].add(c.electoral_population as f64);
            means[2].add(c.votes as f64);
            means[3].add(c.invalid_votes as f64);
            means[4].add(c.area_km2);
        }
        let agg = match aggregates.get(bill.bill_id.as_str()) {
            Some(a) => *a,
            None => {
                let a = lookup.aggregate(bill)?;
                aggregates.insert(bill.bill_id.as_str(), a);
                a
            }
        };
        agg.write_into(&mut row);
        for (k, j) in (col::N_SPONSORS..=col::PCT_FEMALE).enumerate() {
            means[5 + k].add(row[j]);
        }
    }

    s.mean_terms_elected = means[0].get();
    s.mean_electoral_population = means[1].get();
    s.mean_votes = means[2].get();
    s.mean_invalid_votes = means[3].get();
    s.mean_area_km2 = means[4].get();
    s.mean_n_sponsors = means[5].get();
    s.mean_n_conservative_sponsors = means[6].get();
    s.mean_n_progressive_sponsors = means[7].get();
    s.mean_pct_conservative_sponsors = means[8].get();
    s.mean_pct_progressive_sponsors = means[9].get();
    s.mean_avg_terms_elected = means[10].get();
    s.mean_n_male_sponsors = means[11].get();
    s.mean_n_female_sponsors = means[12].get();
    s.mean_pct_male_sponsors = means[13].get();
    s.mean_pct_female_sponsors = means[14].get();
    Ok(s)
}

impl DescriptiveStats {
    /// Rows of (group, category, count, average).
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["group", "category", "count", "average"]);
        let count = |t: &mut Table, g: &str, c: &str, n: usize| {
            t.push([g.to_string(), c.to_string(), n.to_string(), String::new()])
        };
        let mean = |t: &mut Table, g: &str, c: &str, v: Option<f64>| {
            t.push([g.to_string(), c.to_string(), String::new(), v.map_or_else(|| "NA".into(), fmt_f64)])
        };
        count(&mut t, "total", "bill participation", self.total);
        let la = "legislator";
        count(&mut t, la, "ideology: conservative", self.conservative);
        count(&mut t, la, "ideology: progressive", self.progressive);
        count(&mut t, la, "gender: male", self.male);
        count(&mut t, la, "gender: female", self.female);
        count(&mut t, la, "election type: constituency", self.constituency);
        count(&mut t, la, "election type: proportional", self.proportional);
        count(&mut t, la, "committee: transportation", self.committee_transport);
        count(&mut t, la, "committee: other", self.committee_other);
        count(&mut t, la, "sponsor status", self.sponsor_role);
        count(&mut t, la, "cosponsor status", self.cosponsor_role);
        mean(&mut t, la, "terms elected", self.mean_terms_elected);
        let ca = "constituency";
        mean(&mut t, ca, "electoral population", self.mean_electoral_population);
        mean(&mut t, ca, "votes", self.mean_votes);
        mean(&mut t, ca, "invalid votes", self.mean_invalid_votes);
        mean(&mut t, ca, "area km2", self.mean_area_km2);
        let ba = "bill";
        mean(&mut t, ba, "sponsors", self.mean_n_sponsors);
        mean(&mut t, ba, "conservative sponsors", self.mean_n_conservative_sponsors);
        mean(&mut t, ba, "progressive sponsors", self.mean_n_progressive_sponsors);
        mean(&mut t, ba, "pct conservative sponsors", self.mean_pct_conservative_sponsors);
        mean(&mut t, ba, "pct progressive sponsors", self.mean_pct_progressive_sponsors);
        mean(&mut t, ba, "avg terms elected", self.mean_avg_terms_elected);
        mean(&mut t, ba, "male sponsors", self.mean_n_male_sponsors);
        mean(&mut t, ba, "female sponsors", self.mean_n_female_sponsors);
        mean(&mut t, ba, "pct male sponsors", self.mean_pct_male_sponsors);
        mean(&mut t, ba, "pct female sponsors", self.mean_pct_female_sponsors);
        count(&mut t, ba, "approval: accept", self.approval_accept);
        count(&mut t, ba, "approval: reject", self.approval_reject);
        t
    }
}

pub fn participation_table(records: &[ParticipationRecord]) -> Table {
    let mut t = Table::new(["bill_id", "legislator_id", "role"]);
    for r in records {
        t.push([r.bill_id.as_str(), r.legislator_id.as_str(), r.role.as_str()]);
    }
    t
}
