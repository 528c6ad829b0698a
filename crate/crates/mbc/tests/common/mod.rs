//! Synthetic corpus with facts planted in both the gold checks and the
//! search fixtures.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use mbc::providers::mock::{FixtureDoc, FixtureSearch, OfflineChat, RuleExtractor};
use mbc::providers::{Gateway, Toolkit};
use mbc_core::query::{build_query_plan, QueryConfig};
use mbc_core::{BackgroundCheck, Section, Split};

pub const OWNERS: [&str; 5] = ["Jane Roe", "Arthur Penn", "Mira Holt", "Omar Vance", "Lena Ruiz"];
pub const FUNDING: [&str; 4] = ["advertising and grants", "reader donations", "a state broadcaster levy", "paid events"];
pub const REMITS: [&str; 3] = ["inform rural readers", "cover regional politics", "report on climate science"];
pub const BIASES: [&str; 4] = ["conservative causes", "progressive causes", "libertarian positions", "the ruling party"];
pub const HEADLINES: [&str; 4] = ["Moon Landing Staged", "Vaccine Ships Microchips", "Rain Banned in Spring", "Mayor Owns Ocean"];

#[derive(Debug, Clone)]
pub struct SyntheticSource {
    pub name: String,
    pub gold: BackgroundCheck,
    /// Documents per query text.
    pub fixtures: BTreeMap<String, Vec<FixtureDoc>>,
    /// Query labels whose fixtures contain a usable answer.
    pub answering_labels: Vec<String>,
}

fn doc(url: &str, title: &str, body: &str) -> FixtureDoc {
    FixtureDoc { url: url.into(), title: title.into(), snippet: body.chars().take(120).collect(), body: body.into() }
}

pub fn source(i: usize) -> SyntheticSource {
    let name = format!("outlet{i:02}.example");
    let owner = OWNERS[i % OWNERS.len()];
    let funding = FUNDING[i % FUNDING.len()];
    let remit = REMITS[i % REMITS.len()];
    let bias = BIASES[i % BIASES.len()];
    let headline = HEADLINES[i % HEADLINES.len()];
    let award = format!("the Press Prize {}", 2000 + i);

    let history = format!(
        "Founded in {year}, {name} is a regional news website. {owner} owns {name}. \
         The remit of {name} is to {remit}. {name} was awarded {award}.",
        year = 1990 + i
    );
    let funding_text = format!("{name} is funded through {funding}. {name} does not rely on subscriptions for revenue.");
    let analysis = format!(
        "{name} has an editorial bias towards {bias}. \
         {name} failed a fact-check for an article titled \"{headline}\"."
    );
    let gold = BackgroundCheck::new(
        name.clone(),
        vec![
            Section { heading: "History".into(), body: history },
            Section { heading: "Funded by / Ownership".into(), body: funding_text },
            Section { heading: "Analysis / Bias".into(), body: analysis },
        ],
        Split::Dev,
    );

    let plan = build_query_plan(&name, &QueryConfig::default()).unwrap();
    let mut fixtures = BTreeMap::new();
    let mut answering = Vec::new();
    let mbfc = doc(
        &format!("https://mediabiasfactcheck.com/{}", name.replace('.', "-")),
        "MBFC rating",
        &gold.full_text().replace('\n', " "),
    );
    let noise = |k: usize| {
        doc(
            &format!("https://noise{k}.example.net/{i}"),
            "Unrelated",
            "Weather was mild across the region this week. Local markets were busy.",
        )
    };
    for item in &plan.items {
        let fact_page = |host: &str, text: String| doc(&format!("https://{host}/{i}/{}", item.label), "Report", &text);
        let mut docs = vec![mbfc.clone()];
        let relevant = match item.label.as_str() {
            "ownership" => Some(fact_page("registry.example.org", format!("Company filings were reviewed. {owner} owns {name}."))),
            "funding" if !i.is_multiple_of(3) => Some(fact_page(
                "money.example.org",
                format!("{name} is funded through {funding}. Its accounts are public."),
            )),
            "about" => Some(fact_page("about.example.org", format!("The remit of {name} is to {remit}."))),
            "political_leaning" => {
                docs.push(doc(
                    "https://mirror.example.com/rating",
                    "Copied rating",
                    &format!("As reported by mediabiasfactcheck.com, {owner} owns {name}."),
                ));
                Some(fact_page("bias.example.org", format!("{name} has an editorial bias towards {bias}.")))
            }
            "fact_check" => Some(fact_page(
                "checks.example.org",
                format!("{name} failed a fact-check for an article titled \"{headline}\"."),
            )),
            _ => None,
        };
        if let Some(r) = relevant {
            docs.push(r);
            answering.push(item.label.clone());
        }
        docs.push(noise(1));
        docs.push(noise(2));
        fixtures.insert(item.query_text.clone(), docs);
    }
    SyntheticSource { name, gold, fixtures, answering_labels: answering }
}

pub fn corpus(n: usize) -> Vec<SyntheticSource> {
    (0..n).map(source).collect()
}

pub fn fixture_search(sources: &[SyntheticSource]) -> FixtureSearch {
    let mut all = BTreeMap::new();
    for s in sources {
        all.extend(s.fixtures.clone());
    }
    FixtureSearch::from_map(all)
}

/// Offline chat with fixture search and the subject-sentence extractor, on a
/// fresh in-memory cache.
pub fn toolkit(sources: &[SyntheticSource]) -> Toolkit {
    Toolkit::new(Arc::new(OfflineChat::new()), "offline-model")
        .with_retrieval(Arc::new(fixture_search(sources)), Arc::new(RuleExtractor::subject_sentence()))
        .with_gateway(Gateway::offline())
}
