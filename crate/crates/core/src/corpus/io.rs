use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use csv::StringRecord;

use super::{Bill, Constituency, CorpusError, ElectionType, Legislator};

pub const BILLS_HEADER: [&str; 9] = [
    "bill_id",
    "title",
    "summary",
    "summary_translated",
    "sponsor_id",
    "cosponsor_ids",
    "committee_outcome",
    "ljc_outcome",
    "plenary_outcome",
];

pub const LEGISLATORS_HEADER: [&str; 7] = [
    "legislator_id",
    "ideology",
    "gender",
    "election_type",
    "on_transport_committee",
    "terms_elected",
    "constituency_id",
];

pub const CONSTITUENCIES_HEADER: [&str; 5] =
    ["constituency_id", "electoral_population", "votes", "invalid_votes", "area_km2"];

const COSPONSOR_SEP: char = ';';

struct RowCtx<'a> {
    path: &'a str,
    line: u64,
    record: &'a StringRecord,
    header: &'a [&'a str],
}

impl RowCtx<'_> {
    fn cell(&self, col: usize) -> &str {
        self.record.get(col).unwrap_or("")
    }

    fn malformed(&self, col: usize, message: impl Into<String>) -> CorpusError {
        CorpusError::Malformed {
            path: self.path.to_string(),
            line: self.line,
            column: self.header[col].to_string(),
            message: message.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, col: usize) -> Result<T, CorpusError>
    where
        T::Err: std::fmt::Display,
    {
        self.cell(col).trim().parse::<T>().map_err(|e| self.malformed(col, e.to_string()))
    }

    fn required(&self, col: usize) -> Result<String, CorpusError> {
        let v = self.cell(col);
        if v.trim().is_empty() {
            Err(self.malformed(col, "empty value"))
        } else {
            Ok(v.to_string())
        }
    }

    fn optional(&self, col: usize) -> Option<String> {
        let v = self.cell(col);
        (!v.trim().is_empty()).then(|| v.to_string())
    }

    fn boolean(&self, col: usize) -> Result<bool, CorpusError> {
        match self.cell(col).trim().to_ascii_lowercase().as_str() {
            "1" | "true" | "yes" => Ok(true),
            "0" | "false" | "no" => Ok(false),
            other => Err(self.malformed(col, format!("expected boolean, found `{other}`"))),
        }
    }
}

fn read_table<T>(
    path: &Path,
    header: &[&str],
    mut parse_row: impl FnMut(&RowCtx<'_>) -> Result<T, CorpusError>,
) -> Result<Vec<T>, CorpusError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| CorpusError::Io { path: display.clone(), source })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);

    let csv_err = |e: csv::Error, line: u64| CorpusError::Malformed {
        path: display.clone(),
        line,
        column: String::new(),
        message: e.to_string(),
    };

    let found = reader.headers().map_err(|e| csv_err(e, 1))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(CorpusError::Header {
            path: display,
            expected: header.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut out = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(e, line)
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(CorpusError::Malformed {
                path: display.clone(),
                line,
                column: String::new(),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let ctx = RowCtx { path: &display, line, record: &record, header };
        out.push(parse_row(&ctx)?);
    }
    Ok(out)
}

/// Loads `bills.csv`. Row order and text fields are preserved byte-exact.
pub fn load_bills(path: impl AsRef<Path>) -> Result<Vec<Bill>, CorpusError> {
    let path = path.as_ref();
    let mut seen = HashSet::new();
    read_table(path, &BILLS_HEADER, |r| {
        let bill_id = r.required(0)?;
        if !seen.insert(bill_id.clone()) {
            return Err(CorpusError::DuplicateKey { path: r.path.to_string(), key: bill_id });
        }
        let cosponsor_ids =
            r.cell(5).split(COSPONSOR_SEP).map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect();
        Ok(Bill {
            bill_id,
            title: r.cell(1).to_string(),
            summary: r.cell(2).to_string(),
            summary_translated: r.optional(3),
            sponsor_id: r.required(4)?,
            cosponsor_ids,
            committee_outcome: r.parse(6)?,
            ljc_outcome: r.parse(7)?,
            plenary_outcome: r.parse(8)?,
        })
    })
}

/// Loads `legislators.csv`. Referential integrity is left to `validate_corpus`.
pub fn load_legislators(path: impl AsRef<Path>) -> Result<Vec<Legislator>, CorpusError> {
    let path = path.as_ref();
    let mut seen = HashSet::new();
    read_table(path, &LEGISLATORS_HEADER, |r| {
        let legislator_id = r.required(0)?;
        if !seen.insert(legislator_id.clone()) {
            return Err(CorpusError::DuplicateKey { path: r.path.to_string(), key: legislator_id });
        }
        let election_type: ElectionType = r.parse(3)?;
        let constituency_id = r.optional(6);
        match (election_type, &constituency_id) {
            (ElectionType::Proportional, Some(c)) => {
                return Err(CorpusError::Schema {
                    path: r.path.to_string(),
                    line: r.line,
                    message: format!("proportional legislator {legislator_id} has constituency `{c}`"),
                })
            }
            (ElectionType::Constituency, None) => {
                return Err(CorpusError::Schema {
                    path: r.path.to_string(),
                    line: r.line,
                    message: format!("constituency legislator {legislator_id} has no constituency"),
                })
            }
            _ => {}
        }
        let terms_elected: u32 = r.parse(5)?;
        if terms_elected < 1 {
            return Err(CorpusError::Range {
                path: r.path.to_string(),
                line: r.line,
                message: format!("terms_elected must be >= 1, found {terms_elected}"),
            });
        }
        Ok(Legislator {
            legislator_id,
            ideology: r.parse(1)?,
            gender: r.parse(2)?,
            election_type,
            on_transport_committee: r.boolean(4)?,
            terms_elected,
            constituency_id,
        })
    })
}

/// Loads `constituencies.csv`, enforcing `invalid_votes <= votes <= electoral_population`
/// and a positive area.
pub fn load_constituencies(path: impl AsRef<Path>) -> Result<Vec<Constituency>, CorpusError> {
    let path = path.as_ref();
    let mut seen = HashSet::new();
    read_table(path, &CONSTITUENCIES_HEADER, |r| {
        let constituency_id = r.required(0)?;
        if !seen.insert(constituency_id.clone()) {
            return Err(CorpusError::DuplicateKey { path: r.path.to_string(), key: constituency_id });
        }
        let c = Constituency {
            constituency_id,
            electoral_population: r.parse(1)?,
            votes: r.parse(2)?,
            invalid_votes: r.parse(3)?,
            area_km2: r.parse(4)?,
        };
        let range = |message: String| CorpusError::Range { path: r.path.to_string(), line: r.line, message };
        if c.invalid_votes > c.votes {
            return Err(range(format!("invalid_votes {} exceeds votes {}", c.invalid_votes, c.votes)));
        }
        if c.votes > c.electoral_population {
            return Err(range(format!("votes {} exceeds electoral_population {}", c.votes, c.electoral_population)));
        }
        if !(c.area_km2.is_finite() && c.area_km2 > 0.0) {
            return Err(range(format!("area_km2 must be positive, found {}", c.area_km2)));
        }
        Ok(c)
    })
}

fn create(path: &Path) -> Result<csv::Writer<File>, CorpusError> {
    let file = File::create(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn finish<W: Write>(path: &Path, w: csv::Writer<W>) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io { path: path.display().to_string(), source };
    let mut inner = w.into_inner().map_err(|e| io_err(e.into_error()))?;
    inner.flush().map_err(io_err)
}

fn write_err(path: &Path, e: csv::Error) -> CorpusError {
    CorpusError::Io { path: path.display().to_string(), source: e.into() }
}

pub fn write_bills(path: impl AsRef<Path>, bills: &[Bill]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let mut w = create(path)?;
    w.write_record(BILLS_HEADER).map_err(|e| write_err(path, e))?;
    for b in bills {
        let cosponsors = b.cosponsor_ids.join(&COSPONSOR_SEP.to_string());
        w.write_record([
            b.bill_id.as_str(),
            &b.title,
            &b.summary,
            b.summary_translated.as_deref().unwrap_or(""),
            &b.sponsor_id,
            &cosponsors,
            b.committee_outcome.as_str(),
            b.ljc_outcome.as_str(),
            b.plenary_outcome.as_str(),
        ])
        .map_err(|e| write_err(path, e))?;
    }
    finish(path, w)
}

pub fn write_legislators(path: impl AsRef<Path>, legislators: &[Legislator]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let mut w = create(path)?;
    w.write_record(LEGISLATORS_HEADER).map_err(|e| write_err(path, e))?;
    for l in legislators {
        w.write_record([
            l.legislator_id.as_str(),
            l.ideology.as_str(),
            l.gender.as_str(),
            l.election_type.as_str(),
            if l.on_transport_committee { "1" } else { "0" },
            &l.terms_elected.to_string(),
            l.constituency_id.as_deref().unwrap_or(""),
        ])
        .map_err(|e| write_err(path, e))?;
    }
    finish(path, w)
}

pub fn write_constituencies(path: impl AsRef<Path>, constituencies: &[Constituency]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let mut w = create(path)?;
    w.write_record(CONSTITUENCIES_HEADER).map_err(|e| write_err(path, e))?;
    for c in constituencies {
        w.write_record([
            c.constituency_id.clone(),
            c.electoral_population.to_string(),
            c.votes.to_string(),
            c.invalid_votes.to_string(),
            format!("{}", c.area_km2),
        ])
        .map_err(|e| write_err(path, e))?;
    }
    finish(path, w)
}
