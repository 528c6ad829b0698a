//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use mbc::config::{process_env, RunConfig};
use mbc::corpus::{corpus_stats, load_dataset};
use mbc::evaluation::{evaluate_source, instantiate_templates, score_pair, OracleJudge};
use mbc::cache::Cache;
use mbc::providers::mock::{OfflineChat, RuleExtractor};
use mbc::providers::{Gateway, Toolkit};
use mbc::synthesis::{run_pipeline, PipelineConfig};
use mbc_core::exclusion::{apply_exclusions, ExclusionRules, SearchResult};
use mbc_core::lexmetrics::{lcs_length, meteor, rouge_l};
use mbc_core::prompts::{render, sha256_hex, TemplateId};
use mbc_core::scoring::{score_labels, RecallMode};
use mbc_core::text::TokenSequence;
use mbc_core::verdict::{majority, Label};
use mbc_core::{BackgroundCheck, Split};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Status {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Status;

fn ensure(ok: bool, pass: impl Into<String>, fail: impl Into<String>) -> Status {
    if ok { Status::Pass(pass.into()) } else { Status::Fail(fail.into()) }
}

fn main() {
    let criteria: [(&str, Duration, Check); 10] = [
        ("1 corpus fidelity", Duration::from_secs(30), corpus_fidelity),
        ("2 metric oracles", Duration::from_secs(10), metric_oracles),
        ("3 majority vote", Duration::from_secs(1), majority_vote),
        ("4 self-agreement", Duration::from_secs(60), self_agreement),
        ("5 exclusion", Duration::from_secs(5), exclusion),
        ("6 pipeline determinism", Duration::from_secs(30), determinism),
        ("7 retrieval effect", Duration::from_secs(120), retrieval_effect),
        ("8 scoring definitions", Duration::from_secs(10), scoring_definitions),
        ("9 prompt fidelity", Duration::from_secs(10), prompt_fidelity),
        ("10 live smoke", Duration::from_secs(600), live_smoke),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let start = Instant::now();
        let status = check();
        let elapsed = start.elapsed();
        let (tag, detail) = match status {
            Status::Pass(_) if elapsed > limit => ("FAIL", format!("exceeded {limit:?}")),
            Status::Pass(d) => ("PASS", d),
            Status::Fail(d) => ("FAIL", d),
            Status::Skip(d) => ("SKIP", d),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("[{tag}] {name}: {detail} ({:.2}s)", elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn dataset_root() -> Option<PathBuf> {
    std::env::var_os("MBC_DATASET_ROOT").map(PathBuf::from).filter(|p| p.join("splits.tsv").is_file())
}

fn corpus_fidelity() -> Status {
    let Some(root) = dataset_root() else {
        return Status::Fail("released dataset not found; set MBC_DATASET_ROOT to its directory".into());
    };
    let records = match load_dataset(&root) {
        Ok(r) => r,
        Err(e) => return Status::Fail(e.to_string()),
    };
    let stats = corpus_stats(&records);
    let get = |s: Split| stats.iter().find(|x| x.split == s).cloned();
    let expected = [(Split::Train, 5209, 17.1, 305.1), (Split::Dev, 500, 17.2, 302.2), (Split::Test, 1000, 17.0, 303.2)];
    let mut problems = Vec::new();
    if records.len() != 6709 {
        problems.push(format!("{} records, expected 6709", records.len()));
    }
    for (split, count, lines, tokens) in expected {
        let Some(s) = get(split) else {
            problems.push(format!("no {split} records"));
            continue;
        };
        if s.count != count {
            problems.push(format!("{split}: {} records, expected {count}", s.count));
        }
        if (s.avg_lines - lines).abs() > 1.0 {
            problems.push(format!("{split}: {:.1} lines, expected {lines}±1", s.avg_lines));
        }
        if (s.avg_tokens - tokens).abs() > 0.15 * tokens {
            problems.push(format!("{split}: {:.1} tokens, expected {tokens}±15%", s.avg_tokens));
        }
    }
    ensure(problems.is_empty(), format!("{} records, split counts and averages within tolerance", records.len()), problems.join("; "))
}

/// Every sequence over `alphabet` with length at most `max_len`.
fn sequences(alphabet: usize, max_len: usize) -> Vec<Vec<u8>> {
    let mut all = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for c in 0..alphabet as u8 {
                let mut t: Vec<u8> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

/// Index of a sequence among all sequences over `alphabet`, shortlex order.
fn seq_id(s: &[u8], alphabet: usize) -> usize {
    let offset: usize = (0..s.len()).map(|l| alphabet.pow(l as u32)).sum();
    offset + s.iter().fold(0, |acc, &c| acc * alphabet + c as usize)
}

/// Bitset of the ids of all subsequences of `s`.
fn subsequence_set(s: &[u8], alphabet: usize, words: usize) -> Vec<u64> {
    let mut bits = vec![0u64; words];
    for mask in 0u32..(1 << s.len()) {
        let sub: Vec<u8> = (0..s.len()).filter(|i| mask & (1 << i) != 0).map(|i| s[i]).collect();
        let id = seq_id(&sub, alphabet);
        bits[id / 64] |= 1 << (id % 64);
    }
    bits
}

fn brute_force_lcs_check(alphabet: usize, max_len: usize) -> Result<usize, String> {
    let seqs = sequences(alphabet, max_len);
    let words = seqs.len().div_ceil(64);
    let sets: Vec<Vec<u64>> = seqs.iter().map(|s| subsequence_set(s, alphabet, words)).collect();
    let len_of: Vec<usize> = seqs.iter().map(Vec::len).collect();
    let names = ["a", "b", "c"];
    let tokens: Vec<TokenSequence> = seqs.iter().map(|s| TokenSequence::from_tokens(s.iter().map(|&c| names[c as usize]))).collect();
    let mut pairs = 0;
    for i in 0..seqs.len() {
        for j in 0..seqs.len() {
            // longest common subsequence = longest id present in both sets
            let mut best = 0;
            for w in (0..words).rev() {
                let common = sets[i][w] & sets[j][w];
                if common != 0 {
                    best = len_of[w * 64 + 63 - common.leading_zeros() as usize];
                    break;
                }
            }
            let got = lcs_length(&tokens[i], &tokens[j]);
            if got != best {
                return Err(format!("lcs({:?}, {:?}) = {got}, brute force {best}", seqs[i], seqs[j]));
            }
            pairs += 1;
        }
    }
    Ok(pairs)
}

fn metric_oracles() -> Status {
    let mut pairs = 0;
    for (alphabet, max_len) in [(2, 8), (3, 6)] {
        match brute_force_lcs_check(alphabet, max_len) {
            Ok(n) => pairs += n,
            Err(e) => return Status::Fail(e),
        }
    }
    // F = 2·lcs/(|c|+|r|), lcs and lengths counted by hand
    let rouge: [(&str, &str, f64); 12] = [
        ("the cat sat", "the cat ran", 4.0 / 6.0),
        ("a b c d", "a b c d", 1.0),
        ("", "x", 0.0),
        ("x", "", 0.0),
        ("a b c", "d e f", 0.0),
        ("the cat sat on the mat", "the cat on the mat", 10.0 / 11.0),
        ("a b c d e", "e d c b a", 2.0 / 10.0),
        ("Police killed the gunman.", "The gunman killed police.", 6.0 / 10.0),
        ("A B A", "a a", 4.0 / 5.0),
        ("one two three four", "one three", 4.0 / 6.0),
        ("x y", "y x", 2.0 / 4.0),
        ("w1 w2 w3 w4 w5 w6 w7 w8 w9 w10", "w1 w3 w5 w7 w9", 10.0 / 15.0),
    ];
    for (c, r, want) in rouge {
        let got = rouge_l(c, r);
        if got != want {
            return Status::Fail(format!("rouge_l({c:?}, {r:?}) = {got}, expected {want}"));
        }
    }
    // Fmean·(1 − 0.5·(chunks/matches)³) with Fmean = PR/(0.9P + 0.1R)
    let met: [(&str, &str, f64); 8] = [
        ("a b c d", "a b c d", 1.0 - 0.5 / 64.0),
        ("the cat", "the cat", 1.0 - 0.5 / 8.0),
        ("on the mat the cat sat", "the cat sat on the mat", 1.0 - 0.5 / 27.0),
        ("the cat", "the cat sat on the mat", (5.0 / 14.0) * (15.0 / 16.0)),
        ("b a", "a b", 0.5),
        ("natural news owns sites", "natural news owned websites", 0.75 * (53.0 / 54.0)),
        ("owns", "owned", 0.5),
        ("alpha beta", "gamma delta", 0.0),
    ];
    for (c, r, want) in met {
        let got = meteor(c, r);
        if (got - want).abs() > 1e-9 {
            return Status::Fail(format!("meteor({c:?}, {r:?}) = {got}, expected {want}"));
        }
    }
    Status::Pass(format!("{pairs} exhaustive LCS pairs, {} ROUGE-L and {} METEOR fixtures", rouge.len(), met.len()))
}

fn majority_oracle(votes: &[Label]) -> Label {
    let count = |l: Label| votes.iter().filter(|&&v| v == l).count();
    let counts = Label::ALL.map(count);
    let max = *counts.iter().max().unwrap();
    let winners: Vec<Label> = Label::ALL.iter().zip(counts).filter(|(_, c)| *c == max).map(|(l, _)| *l).collect();
    if winners.len() == 1 { winners[0] } else { Label::Nei }
}

fn permutations(v: &[Label]) -> Vec<Vec<Label>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

fn majority_vote() -> Status {
    let mut tuples = 0;
    for a in Label::ALL {
        for b in Label::ALL {
            for c in Label::ALL {
                for d in Label::ALL {
                    let votes = [a, b, c, d];
                    tuples += 1;
                    let label = majority(&votes);
                    if label != majority_oracle(&votes) {
                        return Status::Fail(format!("{votes:?} -> {label:?}"));
                    }
                    if permutations(&votes).iter().any(|p| majority(p) != label) {
                        return Status::Fail(format!("{votes:?} is order-dependent"));
                    }
                    if a == b && b == c && c == d && label != a {
                        return Status::Fail(format!("unanimous {a:?} -> {label:?}"));
                    }
                    let t = votes.iter().filter(|&&v| v == Label::True).count();
                    let f = votes.iter().filter(|&&v| v == Label::False).count();
                    if t == 2 && f == 2 && label != Label::Nei {
                        return Status::Fail(format!("2-2 tie {votes:?} -> {label:?}"));
                    }
                }
            }
        }
    }
    ensure(tuples == 81, format!("{tuples} vote tuples, all permutations agree"), format!("{tuples} tuples"))
}

fn self_agreement() -> Status {
    let (golds, origin): (Vec<BackgroundCheck>, &str) = match dataset_root() {
        Some(root) => match load_dataset(&root) {
            Ok(records) => {
                let mut dev: Vec<BackgroundCheck> = records.into_iter().filter(|r| r.split == Split::Dev).collect();
                dev.sort_by(|a, b| a.source_name.cmp(&b.source_name));
                (dev, "released dev split")
            }
            Err(e) => return Status::Fail(e.to_string()),
        },
        None => (common::corpus(50).into_iter().map(|s| s.gold).collect(), "synthetic stand-in, released dataset unavailable"),
    };
    let mut checked = 0;
    let mut degenerate = 0;
    for gold in &golds {
        if checked == 50 {
            break;
        }
        let facts = instantiate_templates(gold, &OracleJudge, &OracleJudge).facts;
        let report = score_pair(&gold.source_name, &facts, gold.full_text(), &OracleJudge, RecallMode::AllKept);
        if report.degenerate {
            degenerate += 1;
            continue;
        }
        if (report.fact_recall, report.error_rate) != (1.0, 0.0) {
            return Status::Fail(format!("{}: recall {}, error {}", gold.source_name, report.fact_recall, report.error_rate));
        }
        checked += 1;
    }
    ensure(
        checked == 50,
        format!("50 sources at (1.0, 0.0), {degenerate} without facts skipped [{origin}]"),
        format!("only {checked} sources with facts [{origin}]"),
    )
}

const BLOCKED_HOSTS: [&str; 6] = [
    "mediabiasfactcheck.com",
    "www.mediabiasfactcheck.com",
    "a.b.mediabiasfactcheck.com",
    "MediaBiasFactCheck.com",
    "mediabiasfactcheck.com.",
    "mediabiasfactcheck.com:8080",
];
const OPEN_HOSTS: [&str; 6] = [
    "notmediabiasfactcheck.com",
    "mediabiasfactcheck.com.evil.org",
    "news.example.org",
    "factcheck.org",
    "mediabias.com",
    "example.com:443",
];
const BODIES: [&str; 6] = [
    "",
    "Plain news text.",
    "Rated by MEDIABIASFACTCHECK.COM last year.",
    "According to Media Bias/Fact Check the site leans left.",
    "see media bias / fact check",
    "media bias and fact checking are discussed",
];

/// Blocked iff the host is a blocklisted domain or a subdomain of one, or
/// the body mentions a blocklisted string, ignoring case.
fn blocked_oracle(r: &SearchResult, rules: &ExclusionRules) -> bool {
    let host = r.domain.trim_end_matches('.').to_lowercase();
    let domain_hit = rules.domains.iter().any(|d| {
        let d = d.to_lowercase();
        host == d || (host.len() > d.len() && host.ends_with(&d) && host.as_bytes()[host.len() - d.len() - 1] == b'.')
    });
    let body = r.document_text().to_lowercase();
    domain_hit || rules.mentions.iter().any(|m| body.contains(&m.to_lowercase()))
}

fn exclusion() -> Status {
    let rules = ExclusionRules::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20240501);
    let mut removed = 0;
    for set in 0..1000 {
        let n = rng.random_range(0..12);
        let results: Vec<SearchResult> = (0..n)
            .map(|i| {
                let host = if rng.random_bool(0.4) {
                    BLOCKED_HOSTS[rng.random_range(0..BLOCKED_HOSTS.len())]
                } else {
                    OPEN_HOSTS[rng.random_range(0..OPEN_HOSTS.len())]
                };
                let body = BODIES[rng.random_range(0..BODIES.len())];
                let snippet = if body.is_empty() && rng.random_bool(0.5) { "via mediabiasfactcheck.com" } else { "snippet" };
                SearchResult::new(&format!("https://{host}/p{i}"), "t", snippet, body, i + 1).unwrap()
            })
            .collect();
        let out = apply_exclusions(&results, &rules);
        let expected: Vec<SearchResult> = results.iter().filter(|r| !blocked_oracle(r, &rules)).cloned().collect();
        if out != expected {
            return Status::Fail(format!("set {set}: output differs from the independent filter"));
        }
        if out.iter().any(|r| blocked_oracle(r, &rules)) {
            return Status::Fail(format!("set {set}: blocked item survived"));
        }
        if apply_exclusions(&out, &rules) != out {
            return Status::Fail(format!("set {set}: not idempotent"));
        }
        let mut it = results.iter();
        if !out.iter().all(|o| it.any(|r| r == o)) {
            return Status::Fail(format!("set {set}: not a subsequence"));
        }
        removed += results.len() - out.len();
    }
    Status::Pass(format!("1000 randomized sets, {removed} blocked results removed"))
}

fn drafts_jsonl(sources: &[common::SyntheticSource], retrieval: bool, tk: &Toolkit) -> Result<String, String> {
    let config = PipelineConfig { retrieval, ..PipelineConfig::default() };
    let mut out = String::new();
    for s in sources {
        let draft = run_pipeline(&s.name, tk, &config).map_err(|e| e.to_string())?;
        out.push_str(&serde_json::to_string(&draft).map_err(|e| e.to_string())?);
        out.push('\n');
    }
    Ok(out)
}

fn determinism() -> Status {
    let sources = common::corpus(10);
    for retrieval in [false, true] {
        let mut outputs = Vec::new();
        for _ in 0..3 {
            match drafts_jsonl(&sources, retrieval, &common::toolkit(&sources)) {
                Ok(o) => outputs.push(o),
                Err(e) => return Status::Fail(e),
            }
        }
        if outputs.iter().any(|o| *o != outputs[0]) {
            return Status::Fail(format!("runs differ (retrieval = {retrieval})"));
        }
    }
    let Ok(dir) = tempfile::tempdir() else {
        return Status::Fail("cannot create cache directory".into());
    };
    let mut replays = Vec::new();
    for _ in 0..2 {
        let chat = Arc::new(OfflineChat::new());
        let tk = Toolkit::new(chat.clone(), "offline-model")
            .with_retrieval(Arc::new(common::fixture_search(&sources)), Arc::new(RuleExtractor::subject_sentence()))
            .with_gateway(Gateway::with_cache(Cache::dir(dir.path())));
        match drafts_jsonl(&sources, true, &tk) {
            Ok(o) => replays.push((o, chat.calls())),
            Err(e) => return Status::Fail(e),
        }
    }
    let (cold, warm) = (&replays[0], &replays[1]);
    if cold.0 != warm.0 || warm.1 != 0 {
        return Status::Fail(format!("warm cache run differs or called the model {} times", warm.1));
    }
    Status::Pass(format!("10 sources x 3 runs byte-identical with and without retrieval; warm cache replay made 0 of {} chat calls", cold.1))
}

fn retrieval_effect() -> Status {
    let sources = common::corpus(20);
    let tk = common::toolkit(&sources);
    let mut mean = [0.0; 2];
    for (slot, retrieval) in [(0, false), (1, true)] {
        let config = PipelineConfig { retrieval, ..PipelineConfig::default() };
        let mut scored = 0;
        for s in &sources {
            let draft = match run_pipeline(&s.name, &tk, &config) {
                Ok(d) => d,
                Err(e) => return Status::Fail(e.to_string()),
            };
            let eval = evaluate_source(&s.gold, &draft.body, &OracleJudge, &OracleJudge, RecallMode::AllKept);
            if !eval.facts.degenerate {
                mean[slot] += eval.facts.fact_recall;
                scored += 1;
            }
        }
        mean[slot] /= scored.max(1) as f64;
    }
    let gain = mean[1] - mean[0];
    ensure(
        gain >= 0.10,
        format!("fact recall {:.3} with retrieval vs {:.3} without (+{:.3})", mean[1], mean[0], gain),
        format!("gain {gain:.3} below 0.10 ({:.3} vs {:.3})", mean[1], mean[0]),
    )
}

/// Fact recall and error rate straight from their definitions.
fn brute_force(gold: &[Label], pred: &[Label]) -> (f64, f64) {
    let n = gold.len() as f64;
    let agree = gold.iter().zip(pred).filter(|(g, p)| g == p).count() as f64;
    let flips = gold
        .iter()
        .zip(pred)
        .filter(|(g, p)| {
            let pair = [**g, **p];
            pair.contains(&Label::True) && pair.contains(&Label::False)
        })
        .count() as f64;
    (agree / n, flips / n)
}

fn scoring_definitions() -> Status {
    use Label::*;
    let gold = [True, False, True];
    let pred = [True, True, Nei];
    let s = score_labels(gold.iter().copied().zip(pred), RecallMode::AllKept);
    if (s.fact_recall, s.error_rate) != (1.0 / 3.0, 1.0 / 3.0) || brute_force(&gold, &pred) != (1.0 / 3.0, 1.0 / 3.0) {
        return Status::Fail(format!("fixture scored {} / {}", s.fact_recall, s.error_rate));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..10_000 {
        let n = rng.random_range(1..30);
        let gold: Vec<Label> = (0..n).map(|_| if rng.random_bool(0.5) { True } else { False }).collect();
        let pred: Vec<Label> = (0..n).map(|_| Label::ALL[rng.random_range(0..3)]).collect();
        let s = score_labels(gold.iter().copied().zip(pred.iter().copied()), RecallMode::AllKept);
        let (recall, error) = brute_force(&gold, &pred);
        if s.fact_recall != recall || s.error_rate != error {
            return Status::Fail(format!("trial {trial}: {} / {} vs {recall} / {error}", s.fact_recall, s.error_rate));
        }
        if s.fact_recall + s.error_rate > 1.0 {
            return Status::Fail(format!("trial {trial}: recall + error > 1"));
        }
    }
    Status::Pass("fixture 1/3, 1/3; 10000 random assignments match and sum to at most 1".into())
}

const GOLDEN: [(&str, &str); 6] = [
    ("initial", "0d88099c78f39585f85aff127d7004d328fb3ac9f0624a63904d9ebee1e1cc62"),
    ("update", "50f7a8d38f40a3794690d50819ccf540945134b5b386f320033e25fa09eb24b2"),
    ("entailment", "ae0b5a06729446d8a7e26f09aed423f6a0f603c68d9d5b78b14eb9da94df2885"),
    ("fill_in", "adbed62bd92023e70c403a619f7e3ba14ea5e4458c2e4431b7f3d7e9cb955206"),
    ("qa_without_mbc", "c560b97464a076c7779316280bd1bf5f298eff27035b7fe70605f8cf1212db9b"),
    ("qa_with_mbc", "691e5374631a1e4a42786ed4ccbb6208e3f8c0a0b6f89215b437400da4ffff4d"),
];

fn prompt_fidelity() -> Status {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let bindings: BTreeMap<String, BTreeMap<String, String>> =
        match std::fs::read_to_string(dir.join("bindings.json")).map(|t| serde_json::from_str(&t)) {
            Ok(Ok(b)) => b,
            _ => return Status::Fail("tests/golden/bindings.json unreadable".into()),
        };
    if let Err(e) = mbc_core::prompts::verify_assets() {
        return Status::Fail(e.to_string());
    }
    for (name, checksum) in GOLDEN {
        let Ok(golden) = std::fs::read_to_string(dir.join(format!("{name}.txt"))) else {
            return Status::Fail(format!("golden file for {name} missing"));
        };
        if sha256_hex(golden.as_bytes()) != checksum {
            return Status::Fail(format!("golden file for {name} does not match its pinned checksum"));
        }
        let b: Vec<(&str, &str)> = bindings[name].iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        let rendered = match TemplateId::from_name(name).and_then(|t| render(t, &b)) {
            Ok(p) => p.to_transcript(),
            Err(e) => return Status::Fail(e.to_string()),
        };
        if rendered != golden {
            return Status::Fail(format!("rendered {name} prompt differs from its golden file"));
        }
    }
    Status::Pass("6 rendered prompts byte-match checksum-pinned golden files".into())
}

const CATEGORIES: [(&str, &[&str]); 5] = [
    ("bias", &["bias", "leaning", "left-wing", "right-wing", "partisan"]),
    ("funding", &["fund", "revenue", "advertis", "donation", "subscription"]),
    ("remit", &["mission", "remit", "aims to", "focuses on", "covers"]),
    ("fact-checking history", &["fact-check", "fact check", "false claim", "misleading"]),
    ("ownership", &["owned", "owner", "owns", "founded", "parent company"]),
];

fn live_smoke() -> Status {
    let live = std::env::var("MBC_LIVE_SMOKE").is_ok_and(|v| v == "1");
    let creds = ["MBC_CHAT_KEY", "MBC_SEARCH_KEY"].iter().all(|v| std::env::var(v).is_ok_and(|x| !x.is_empty()));
    if !live || !creds {
        return Status::Skip("set MBC_LIVE_SMOKE=1 with MBC_CHAT_KEY and MBC_SEARCH_KEY to run".into());
    }
    let config_path = std::env::var_os("MBC_LIVE_CONFIG").map(PathBuf::from);
    let config = match RunConfig::resolve(config_path.as_deref(), process_env, &Default::default()) {
        Ok(c) => c,
        Err(e) => return Status::Fail(e.to_string()),
    };
    let tk = match config.toolkit(process_env) {
        Ok(tk) => tk,
        Err(e) => return Status::Fail(e.to_string()),
    };
    let source = std::env::var("MBC_LIVE_SOURCE").unwrap_or_else(|_| "naturalnews.com".into());
    let draft = match run_pipeline(&source, &tk, &config.pipeline()) {
        Ok(d) => d,
        Err(e) => return Status::Fail(e.to_string()),
    };
    let body = draft.body.to_lowercase();
    let hits: Vec<&str> = CATEGORIES.iter().filter(|(_, keys)| keys.iter().any(|k| body.contains(k))).map(|(n, _)| *n).collect();
    ensure(
        draft.revision >= 3 && hits.len() >= 3,
        format!("{source}: revision {}, categories {hits:?}", draft.revision),
        format!("{source}: revision {}, categories {hits:?}", draft.revision),
    )
}
