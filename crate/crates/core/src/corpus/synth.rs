//! Seeded synthetic corpora.
//!
//! Bill summaries are assembled from four sentence families so the filter stages have known
//! ground truth: wholly transportation bills, taxation bills with one incidental transport
//! sentence, economy bills that use transport words only inside idioms ("road to recovery"),
//! and unrelated bills with no transport vocabulary at all.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{Bill, Constituency, CorpusError, ElectionType, Gender, Ideology, Legislator, StageOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BillTemplate {
    /// Every sentence concerns transportation policy.
    CoreTransport,
    /// A taxation bill with a single transport sentence.
    IncidentalTransport,
    /// Transport words appear only inside idioms.
    Metaphor,
    /// No transport vocabulary.
    Unrelated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub seed: u64,
    pub n_bills: usize,
    pub n_legislators: usize,
    /// Probability that a bill is a wholly transportation bill.
    pub transport_fraction: f64,
    /// 1 draws every cosponsor from the sponsor's party, 0 draws cosponsors uniformly.
    pub ideology_clustering: f64,
    pub mean_cosponsors: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            seed: 7,
            n_bills: 200,
            n_legislators: 120,
            transport_fraction: 0.3,
            ideology_clustering: 0.9,
            mean_cosponsors: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub bills: Vec<Bill>,
    pub legislators: Vec<Legislator>,
    pub constituencies: Vec<Constituency>,
    /// Aligned with `bills`: true for wholly transportation bills.
    pub transport_labels: Vec<bool>,
    pub templates: Vec<BillTemplate>,
}

impl SyntheticCorpus {
    pub fn transport_bill_ids(&self) -> Vec<String> {
        self.bills.iter().zip(&self.transport_labels).filter(|(_, &t)| t).map(|(b, _)| b.bill_id.clone()).collect()
    }
}

pub(crate) const TRANSPORT_SENTENCES: &[&str] = &[
    "This bill expands dedicated bus lanes on arterial roads in metropolitan areas.",
    "It requires local governments to install traffic signals at rural highway intersections.",
    "The bill funds new subway stations and bicycle parking near transit hubs.",
    "It tightens safety inspections for freight vehicles and taxi operators.",
    "It establishes a maintenance fund for regional railway lines and commuter trains.",
    "The amendment regulates shared mobility services and electric scooter parking.",
    "It mandates pedestrian crossings and lower speed limits on roads near schools.",
    "It improves airport access roads and port logistics terminals.",
];

pub(crate) const TAX_SENTENCES: &[&str] = &[
    "This bill revises the corporate income tax schedule for small enterprises.",
    "It extends the deduction for charitable donations to cultural foundations.",
    "The amendment adjusts inheritance tax thresholds for family farms.",
    "It clarifies reporting duties for value added tax refunds.",
    "It introduces penalties for late filing of property tax returns.",
];

pub(crate) const INCIDENTAL_SENTENCES: &[&str] = &[
    "A minor provision exempts fuel used by public buses from the excise duty.",
    "One clause lets freight vehicles claim the same depreciation schedule.",
    "A transitional rule covers tax credits for subway construction contractors.",
];

pub(crate) const IDIOM_SENTENCES: &[&str] = &[
    "This bill puts the national economy on the road to recovery after the downturn.",
    "It keeps the pension reform on the right track through annual reviews.",
    "The measure places digital startups in the fast lane of public procurement.",
];

pub(crate) const ECONOMY_SENTENCES: &[&str] = &[
    "It creates a committee to monitor employment statistics.",
    "The act sets targets for household debt reduction.",
    "It requires quarterly reports on small business lending.",
];

pub(crate) const UNRELATED_SENTENCES: &[&str] = &[
    "This bill strengthens privacy protections for medical records.",
    "It expands scholarships for students from low-income families.",
    "The amendment raises penalties for illegal waste dumping.",
    "It creates a registry for independent music venues.",
    "It requires annual audits of public broadcasting budgets.",
    "The bill extends parental leave for adoptive parents.",
];

const TRANSPORT_TITLES: &[&str] = &[
    "Road Traffic Act",
    "Urban Railway Act",
    "Public Transit Support Act",
    "Passenger Transport Service Act",
    "Road Act",
];
const TAX_TITLES: &[&str] = &["Restriction of Special Taxation Act", "Corporate Tax Act", "Local Tax Act"];
const ECONOMY_TITLES: &[&str] = &["Framework Act on Economic Recovery", "National Pension Act", "Small Business Act"];
const OTHER_TITLES: &[&str] = &["Medical Service Act", "Higher Education Act", "Waste Control Act", "Broadcasting Act"];

fn pick_distinct<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str], k: usize) -> Vec<&'a str> {
    pool.choose_multiple(rng, k.min(pool.len())).copied().collect()
}

fn summary_for(rng: &mut ChaCha8Rng, template: BillTemplate) -> (String, String) {
    let (title_pool, sentences): (&[&str], Vec<&str>) = match template {
        BillTemplate::CoreTransport => (TRANSPORT_TITLES, pick_distinct(rng, TRANSPORT_SENTENCES, 3)),
        BillTemplate::IncidentalTransport => {
            let mut s = pick_distinct(rng, TAX_SENTENCES, 3);
            s.push(INCIDENTAL_SENTENCES.choose(rng).copied().unwrap_or_default());
            (TAX_TITLES, s)
        }
        BillTemplate::Metaphor => {
            let mut s = vec![IDIOM_SENTENCES.choose(rng).copied().unwrap_or_default()];
            s.extend(pick_distinct(rng, ECONOMY_SENTENCES, 2));
            (ECONOMY_TITLES, s)
        }
        BillTemplate::Unrelated => (OTHER_TITLES, pick_distinct(rng, UNRELATED_SENTENCES, 3)),
    };
    let title = format!("Partial Amendment to the {}", title_pool.choose(rng).copied().unwrap_or_default());
    (title, sentences.join(" "))
}

fn outcome_chain(rng: &mut ChaCha8Rng) -> (StageOutcome, StageOutcome, StageOutcome) {
    let stop = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { StageOutcome::Dropped } else { StageOutcome::Pending };
    if !rng.random_bool(0.35) {
        let o = stop(rng);
        return (o, o, o);
    }
    if !rng.random_bool(0.8) {
        let o = stop(rng);
        return (StageOutcome::Passed, o, o);
    }
    let plenary = if rng.random_bool(0.9) { StageOutcome::Passed } else { stop(rng) };
    (StageOutcome::Passed, StageOutcome::Passed, plenary)
}

fn check_fraction(name: &str, v: f64) -> Result<(), CorpusError> {
    if v.is_finite() && (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CorpusError::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// Generates a labelled synthetic corpus. Output depends only on `params`.
pub fn generate_synthetic_corpus(params: &SynthParams) -> Result<SyntheticCorpus, CorpusError> {
    check_fraction("transport_fraction", params.transport_fraction)?;
    check_fraction("ideology_clustering", params.ideology_clustering)?;
    if params.n_bills < 1 {
        return Err(CorpusError::InvalidParameter("n_bills must be >= 1".into()));
    }
    if params.n_legislators < 2 {
        return Err(CorpusError::InvalidParameter("n_legislators must be >= 2".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let id_width = params.n_legislators.to_string().len().max(3);

    let mut legislators = Vec::with_capacity(params.n_legislators);
    let mut constituencies = Vec::new();
    for i in 0..params.n_legislators {
        let ideology = if rng.random_bool(0.4) { Ideology::Conservative } else { Ideology::Progressive };
        let gender = if rng.random_bool(0.83) { Gender::Male } else { Gender::Female };
        let election_type = if rng.random_bool(0.15) { ElectionType::Proportional } else { ElectionType::Constituency };
        let on_transport_committee = rng.random_bool(0.2);
        let terms_elected = rng.random_range(1..=4u32);
        let constituency_id = match election_type {
            ElectionType::Proportional => None,
            ElectionType::Constituency => {
                let id = format!("C{:0w$}", i + 1, w = id_width);
                let electoral_population = rng.random_range(80_000.0..260_000.0) as u64;
                let votes = (electoral_population as f64 * rng.random_range(0.55..0.75)) as u64;
                let invalid_votes = (votes as f64 * rng.random_range(0.005..0.02)) as u64;
                let area_km2 = (rng.random_range(10.0..2_000.0) * 10.0f64).round() / 10.0;
                constituencies.push(Constituency {
                    constituency_id: id.clone(),
                    electoral_population,
                    votes,
                    invalid_votes,
                    area_km2,
                });
                Some(id)
            }
        };
        legislators.push(Legislator {
            legislator_id: format!("L{:0w$}", i + 1, w = id_width),
            ideology,
            gender,
            election_type,
            on_transport_committee,
            terms_elected,
            constituency_id,
        });
    }

    let bill_width = params.n_bills.to_string().len().max(4);
    let mut bills = Vec::with_capacity(params.n_bills);
    let mut transport_labels = Vec::with_capacity(params.n_bills);
    let mut templates = Vec::with_capacity(params.n_bills);
    for b in 0..params.n_bills {
        let is_transport = rng.random_bool(params.transport_fraction);
        let template = if is_transport {
            BillTemplate::CoreTransport
        } else {
            match rng.random_range(0..6u8) {
                0 => BillTemplate::IncidentalTransport,
                1 => BillTemplate::Metaphor,
                _ => BillTemplate::Unrelated,
            }
        };
        let (title, summary) = summary_for(&mut rng, template);

        let sponsor = rng.random_range(0..legislators.len());
        let party = legislators[sponsor].ideology;
        let max_cos = (2 * params.mean_cosponsors).min(legislators.len() - 1);
        let n_cos = rng.random_range(0..=max_cos);
        let mut same: Vec<usize> =
            (0..legislators.len()).filter(|&i| i != sponsor && legislators[i].ideology == party).collect();
        let mut any: Vec<usize> = (0..legislators.len()).filter(|&i| i != sponsor).collect();
        let mut chosen = Vec::with_capacity(n_cos);
        for _ in 0..n_cos {
            let from_party = rng.random_bool(params.ideology_clustering);
            let pool = if from_party { &mut same } else { &mut any };
            if pool.is_empty() {
                break;
            }
            let pick = pool.swap_remove(rng.random_range(0..pool.len()));
            if from_party {
                any.retain(|&i| i != pick);
            } else {
                same.retain(|&i| i != pick);
            }
            chosen.push(pick);
        }

        let (committee_outcome, ljc_outcome, plenary_outcome) = outcome_chain(&mut rng);
        bills.push(Bill {
            bill_id: format!("B{:0w$}", b + 1, w = bill_width),
            title,
            summary,
            summary_translated: None,
            sponsor_id: legislators[sponsor].legislator_id.clone(),
            cosponsor_ids: chosen.iter().map(|&i| legislators[i].legislator_id.clone()).collect(),
            committee_outcome,
            ljc_outcome,
            plenary_outcome,
        });
        transport_labels.push(is_transport);
        templates.push(template);
    }

    Ok(SyntheticCorpus { bills, legislators, constituencies, transport_labels, templates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::validate_corpus;

    fn params(seed: u64, n_bills: usize, tf: f64) -> SynthParams {
        SynthParams {
            seed,
            n_bills,
            n_legislators: 60,
            transport_fraction: tf,
            ideology_clustering: 0.5,
            mean_cosponsors: 5,
        }
    }

    #[test]
    fn zero_fraction_has_no_transport_bills() {
        let c = generate_synthetic_corpus(&params(7, 100, 0.0)).unwrap();
        assert!(c.transport_labels.iter().all(|t| !t));
    }

    #[test]
    fn deterministic_for_seed() {
        let a = generate_synthetic_corpus(&params(7, 100, 0.3)).unwrap();
        let b = generate_synthetic_corpus(&params(7, 100, 0.3)).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_corpus(&params(8, 100, 0.3)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn transport_count_golden() {
        let c = generate_synthetic_corpus(&params(7, 1000, 0.3)).unwrap();
        let n = c.transport_labels.iter().filter(|&&t| t).count();
        assert!((250..=350).contains(&n), "{n}");
        assert_eq!(n, GOLDEN_TRANSPORT_COUNT_SEED7);
    }

    // Binomial(1000, 0.3) draw fixed by seed 7; recorded from the first run.
    const GOLDEN_TRANSPORT_COUNT_SEED7: usize = 300;

    #[test]
    fn generated_corpus_validates() {
        let c = generate_synthetic_corpus(&params(3, 300, 0.3)).unwrap();
        let r = validate_corpus(&c.bills, &c.legislators, &c.constituencies);
        assert!(r.errors.is_empty(), "{:?}", r.errors);
    }

    #[test]
    fn full_clustering_keeps_cosponsors_in_party() {
        let mut p = params(11, 200, 0.3);
        p.ideology_clustering = 1.0;
        let c = generate_synthetic_corpus(&p).unwrap();
        let party = |id: &str| c.legislators.iter().find(|l| l.legislator_id == id).unwrap().ideology;
        for b in &c.bills {
            let sp = party(&b.sponsor_id);
            assert!(b.cosponsor_ids.iter().all(|id| party(id) == sp));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(generate_synthetic_corpus(&params(1, 10, 1.5)).is_err());
        assert!(generate_synthetic_corpus(&params(1, 0, 0.5)).is_err());
        let mut p = params(1, 10, 0.5);
        p.n_legislators = 1;
        assert!(generate_synthetic_corpus(&p).is_err());
        p.n_legislators = 10;
        p.ideology_clustering = f64::NAN;
        assert!(generate_synthetic_corpus(&p).is_err());
    }
}
