//! Acceptance suite. Runs every end-to-end criterion at its stated
//! tolerance and prints one PASS/FAIL line per criterion.
//!
//! `cargo test -p factledger-cli --test acceptance`

mod support;

use std::collections::{BTreeMap, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use factledger_cli::client::Client;
use factledger_core::config::AppConfig;
use factledger_core::factcheck::{
    credential_digest, ops, query, tally, ConsensusPolicy, ContentFormat, FactChecker, Finalization, RegisterReceipt,
    TallyMode, Verdict, VoteReceipt, VOTES_COLLECTION,
};
use factledger_core::ledger::{
    record_spans, verify_log_bytes, InvalidReason, Ledger, Operation, ReadEntry, Role, RwSet, Submitter,
    TransactionEnvelope, TxHeader, Validity, Version, WriteEntry, WriteValue,
};
use factledger_core::platform::{Committed, Platform, PlatformError};
use factledger_core::scoring::{CueLexicon, LexiconScorer};
use factledger_core::service::{self, AppState, Telemetry};
use factledger_core::txflow::ClockMode;
use factledger_core::Digest;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Value};
use support::{factledger, run_ok, write_config, Server};

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

// ---- fixtures ---------------------------------------------------------------

fn logical_config(seed: u64, policy: ConsensusPolicy, dir: Option<&Path>) -> AppConfig {
    let mut c = AppConfig { seed: Some(seed), policy, data_dir: dir.map(Path::to_path_buf), ..Default::default() };
    c.network.clock = ClockMode::Logical { start_ms: 1_710_000_000_000, step_ms: 1_000 };
    c
}

fn curator() -> Submitter {
    Submitter::new("curator", "org1", Role::Curator)
}

fn add_checker(p: &Platform, i: usize) -> Submitter {
    let id = format!("fc{i}");
    let org = format!("org{}", i % 3 + 1);
    let op = Operation::new(ops::CREATE_CHECKER)
        .arg("checker_id", &id)
        .arg("credential_digest", credential_digest(&id, "pw").to_hex())
        .arg("org", &org);
    p.execute_now::<FactChecker>(p.operation_proposal(curator(), op)).expect("create checker");
    Submitter::new(id, org, Role::FactChecker)
}

fn register(p: &Platform, content: &str) -> Digest {
    let proposal = p.register_proposal(curator(), content, ContentFormat::Text, "2024-03-01T09:00:00Z", "a", "web");
    p.execute_now::<RegisterReceipt>(proposal).expect("register").response.news_id
}

fn cast(p: &Platform, who: &Submitter, news: &Digest, v: Verdict, why: &str) -> Result<Committed<VoteReceipt>, PlatformError> {
    p.execute_now(p.vote_proposal(who.clone(), news, v, why))
}

/// Random checkers, news and votes. Occasionally forges a sealed vote's
/// private preimage so the reveal mismatches.
fn fact_workload(p: &Platform, rng: &mut ChaCha20Rng, checkers: usize, news: usize, forge: bool) {
    let who: Vec<Submitter> = (0..checkers).map(|i| add_checker(p, i)).collect();
    for n in 0..news {
        let id = register(p, &format!("workload post {n} {}", rng.random::<u32>()));
        let mut order = who.clone();
        order.shuffle(rng);
        for (k, w) in order.iter().enumerate() {
            if forge && k > 0 && rng.random_bool(0.1) {
                let victim = &order[rng.random_range(0..k)];
                let forged = [b"Falseforged".as_slice(), &[7u8; 16]].concat();
                for org in &p.network().config().orgs {
                    let _ = p.network().tamper_private(org, VOTES_COLLECTION, &format!("{id}/{}", victim.id), forged.clone());
                }
            }
            let v = Verdict::ALL[rng.random_range(0..3)];
            match cast(p, w, &id, v, &format!("note {n}/{k}")) {
                Ok(r) if matches!(r.response.finalization, Some(Finalization::Finalized { .. })) => break,
                _ => {}
            }
        }
    }
}

fn org_views(p: &Platform) -> Vec<(Vec<Digest>, Digest)> {
    (0..p.network().config().orgs.len())
        .map(|i| {
            p.network().with_org(i, |o| {
                (o.ledger.blocks().iter().map(|b| b.block_hash).collect(), o.ledger.state().snapshot_digest())
            })
        })
        .collect()
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap()
}

// ---- 1 + 10: desk-scale run over the CLI, then latency report ------------------

struct DeskRun {
    server: Option<Server>,
    dir: Option<tempfile::TempDir>,
}

fn desk_scale(run: &mut DeskRun) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = write_config(dir.path(), "service.seed = 300\n");
    let corpus = dir.path().join("corpus.jsonl");
    let policy = dir.path().join("policy.conf");
    std::fs::write(&policy, "seed = 17\naccuracy = 0.8\ntimeout_s = 110\ncorpus = corpus.jsonl\n").unwrap();
    run_ok(factledger(&["gen-corpus", "--n", "300", "--seed", "3", "--out"]).arg(&corpus));

    let started = Instant::now();
    let server = Server::start(&config);
    let ingest = run_ok(server.cli(&["ingest", "--corpus"]).arg(&corpus));
    let summary = String::from_utf8_lossy(&ingest.stdout).lines().last().unwrap_or_default().to_owned();
    check!(summary.contains("300 registered"), "ingest: {summary}");
    run_ok(server.cli(&["simulate-voters", "--n", "3", "--policy"]).arg(&policy));
    let elapsed = started.elapsed();

    let dash = server.get("/dashboard");
    let labeled = server.get("/news?status=labeled");
    let scored = labeled["news"].as_array().map_or(0, |a| a.iter().filter(|n| n["score"].is_number()).count());
    let with_consensus = labeled["news"].as_array().map_or(0, |a| a.iter().filter(|n| n["consensus"].is_object()).count());
    run.server = Some(server);
    run.dir = Some(dir);
    check!(
        dash["total_news"] == 300 && dash["total_on_chain"] == 300 && dash["awaiting_evaluation"] == 0,
        "dashboard {dash}"
    );
    check!(dash["ai_evaluated"] == 300 && scored == 300, "scored {scored}, dashboard {dash}");
    check!(with_consensus == 300, "{with_consensus} consensus results on-chain");
    check!(elapsed < Duration::from_secs(120), "wall clock {elapsed:?}");
    Ok(format!("300 scored, 300 finalized on-chain, dashboard {dash}, wall clock {:.1}s", elapsed.as_secs_f64()))
}

fn latency_report(run: &DeskRun) -> Outcome {
    let server = run.server.as_ref().ok_or("desk-scale server unavailable")?;
    let ids: Vec<String> = server.get("/news")["news"]
        .as_array()
        .ok_or("no news list")?
        .iter()
        .filter_map(|n| n["news_id"].as_str().map(str::to_owned))
        .collect();
    check!(!ids.is_empty(), "no news to query");
    let client = Client::new(&server.url);
    let mut samples = runtime().block_on(async {
        let mut samples = Vec::with_capacity(1000);
        for i in 0..1000 {
            let t = Instant::now();
            client.get(&format!("/check-news/{}", ids[i % ids.len()])).await.map_err(|e| e.to_string())?;
            samples.push(t.elapsed().as_secs_f64() * 1e3);
        }
        Ok::<_, String>(samples)
    })?;
    samples.sort_by(f64::total_cmp);
    let client_p95 = samples[(0.95 * samples.len() as f64).ceil() as usize - 1];
    let server_stats = server.get("/metrics/latency")["routes"]["GET /v1/check-news/{id}"].clone();
    check!(server_stats["count"].as_u64().unwrap_or(0) >= 1000, "server recorded {server_stats}");
    let report = json!({
        "route": "GET /v1/check-news/{id}",
        "requests": samples.len(),
        "client_p95_ms": client_p95,
        "server": server_stats,
    });
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance_latency_report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report).unwrap()).map_err(|e| e.to_string())?;
    let written: Value = serde_json::from_slice(&std::fs::read(&path).map_err(|e| e.to_string())?).unwrap_or_default();
    check!(written["server"]["p95_ms"].is_number() && written["client_p95_ms"].is_number(), "report incomplete");
    Ok(format!(
        "p95 {:.3} ms server-side, {:.3} ms client-side over 1000 requests; report {}",
        written["server"]["p95_ms"].as_f64().unwrap_or_default(),
        client_p95,
        path.display()
    ))
}

// ---- 2: tamper detection -------------------------------------------------------

fn tamper_detection() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = Platform::from_config(&logical_config(2, ConsensusPolicy::default(), Some(dir.path()))).map_err(|e| e.to_string())?;
    let mut n = 0;
    while p.network().height() < 49 {
        register(&p, &format!("tamper fixture {n}"));
        n += 1;
    }
    let log = std::fs::read(dir.path().join("org1").join("blocks.log")).map_err(|e| e.to_string())?;
    let spans = record_spans(&log);
    check!(spans.len() == 50 && verify_log_bytes(&log).is_ok(), "fixture has {} blocks", spans.len());
    let mut rng = ChaCha20Rng::seed_from_u64(0x7a3d);
    let mut detected = 0;
    let mut misses = Vec::new();
    for _ in 0..200 {
        let at = rng.random_range(0..log.len());
        let mut bytes = log.clone();
        bytes[at] ^= rng.random_range(1..=255u8);
        let mutated = spans.iter().position(|(s, e)| (*s..*e).contains(&at)).unwrap() as u64;
        match verify_log_bytes(&bytes).first_bad_height() {
            Some(h) if h <= mutated => detected += 1,
            other => misses.push((at, mutated, other)),
        }
    }
    check!(detected == 200, "{detected}/200 detected; misses {misses:?}");
    Ok("200/200 single-byte mutations of a 50-block log reported at or below the mutated height".into())
}

// ---- 3: replay determinism -----------------------------------------------------

fn replay_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = logical_config(3, ConsensusPolicy::default(), Some(dir.path()));
    let before = {
        let p = Platform::from_config(&config).map_err(|e| e.to_string())?;
        fact_workload(&p, &mut ChaCha20Rng::seed_from_u64(3), 4, 8, false);
        org_views(&p)
    };
    let reopened = Platform::from_config(&config).map_err(|e| e.to_string())?;
    let after = org_views(&reopened);
    check!(before == after, "replayed replicas differ from the originals");

    let logged = std::fs::read(dir.path().join("org2").join("blocks.log")).map_err(|e| e.to_string())?;
    let blocks = factledger_core::ledger::decode_log(&logged).map_err(|r| format!("{r:?}"))?;
    let replayed = Ledger::replay(&blocks).map_err(|e| e.to_string())?;
    let hashes: Vec<Digest> = replayed.blocks().iter().map(|b| b.block_hash).collect();
    check!(hashes == before[1].0 && replayed.state().snapshot_digest() == before[1].1, "log replay differs");

    let twin = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = Platform::from_config(&logical_config(3, ConsensusPolicy::default(), Some(twin.path()))).map_err(|e| e.to_string())?;
    fact_workload(&p, &mut ChaCha20Rng::seed_from_u64(3), 4, 8, false);
    check!(org_views(&p) == before, "same seed produced different ledger hashes");
    Ok(format!("{} blocks and state digest identical after restart, log replay and seeded rerun", before[0].0.len()))
}

// ---- 4: tally oracle -----------------------------------------------------------

/// Weighted counting over integer weights with False > Partial > True on ties.
fn tally_oracle(votes: &[usize], weights: &[u64]) -> usize {
    // Indices into [True, False, Partial].
    let mut totals = [0u64; 3];
    for (v, w) in votes.iter().zip(weights) {
        totals[*v] += w;
    }
    let best = *totals.iter().max().unwrap();
    [1, 2, 0].into_iter().find(|v| totals[*v] == best).unwrap()
}

fn tally_equivalence() -> Outcome {
    let verdicts = [Verdict::True, Verdict::False, Verdict::Partial];
    let grid = [(0.1, 1u64), (0.5, 5), (0.9, 9)];
    let mut cases = 0u64;
    for n in 1..=5u32 {
        for vcode in 0..3usize.pow(n) {
            let vs: Vec<usize> = (0..n).map(|i| vcode / 3usize.pow(i) % 3).collect();
            let votes: Vec<Verdict> = vs.iter().map(|&i| verdicts[i]).collect();
            let simple = tally(&votes, &[], TallyMode::SimpleMajority).map_err(|e| e.to_string())?.0;
            check!(simple == verdicts[tally_oracle(&vs, &vec![1; n as usize])], "simple {votes:?}");
            for ccode in 0..3usize.pow(n) {
                let cs: Vec<usize> = (0..n).map(|i| ccode / 3usize.pow(i) % 3).collect();
                let creds: Vec<f64> = cs.iter().map(|&i| grid[i].0).collect();
                let ints: Vec<u64> = cs.iter().map(|&i| grid[i].1).collect();
                let expected = verdicts[tally_oracle(&vs, &ints)];
                let got = tally(&votes, &creds, TallyMode::CredibilityWeighted).map_err(|e| e.to_string())?.0;
                check!(got == expected, "weighted {votes:?} {creds:?}: {got:?} != {expected:?}");
                for k in [1e-9, 0.003, 0.7, 2.5, 1e3, 1e9] {
                    let scaled: Vec<f64> = creds.iter().map(|c| c * k).collect();
                    let r = tally(&votes, &scaled, TallyMode::CredibilityWeighted).map_err(|e| e.to_string())?.0;
                    check!(r == expected, "rescaled by {k}: {votes:?} {creds:?}");
                }
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} weighted and 363 simple multisets match the oracle; 6 rescalings each"))
}

// ---- 5: MVCC equivalence -------------------------------------------------------

fn mvcc_equivalence() -> Outcome {
    const KEYS: usize = 6;
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut nonce = 0u64;
    let mut total_txs = 0;
    for w in 0..1000 {
        let mut ledger = Ledger::with_genesis(0);
        let mut history: Vec<Vec<Option<Version>>> = vec![vec![None; KEYS]];
        // Oracle state: committed version per key.
        let mut serial: Vec<Option<Version>> = vec![None; KEYS];
        let mut budget = rng.random_range(1..=20usize);
        let mut height = 0u64;
        while budget > 0 {
            height += 1;
            let size = rng.random_range(1..=budget.min(6));
            budget -= size;
            let mut txs = Vec::new();
            let mut expected = Vec::new();
            for i in 0..size {
                let stale = rng.random_range(0..history.len().min(3));
                let snap = &history[history.len() - 1 - stale];
                let reads: Vec<usize> = (0..KEYS).filter(|_| rng.random_bool(0.35)).collect();
                let mut writes: Vec<(usize, bool)> = Vec::new();
                for k in 0..KEYS {
                    if rng.random_bool(0.3) {
                        writes.push((k, rng.random_bool(0.2)));
                    }
                }
                let ok = reads.iter().all(|&k| serial[k] == snap[k]);
                if ok {
                    for (k, _) in &writes {
                        serial[*k] = Some(Version::new(height, i as u32));
                    }
                }
                expected.push(ok);
                nonce += 1;
                let header = TxHeader { submitter: Submitter::new("w", "org1", Role::System), operation: Operation::new("op"), nonce };
                txs.push(TransactionEnvelope {
                    tx_id: header.tx_id(),
                    header,
                    rwset: RwSet {
                        reads: reads.iter().map(|&k| ReadEntry { key: format!("k{k}"), version: snap[k] }).collect(),
                        writes: writes
                            .iter()
                            .map(|&(k, del)| WriteEntry {
                                key: format!("k{k}"),
                                value: if del { WriteValue::Delete } else { WriteValue::Put(vec![k as u8]) },
                            })
                            .collect(),
                    },
                    response: Vec::new(),
                    endorsements: Vec::new(),
                    validity: Validity::Pending,
                });
            }
            let block = ledger.append_block(txs, height).map_err(|e| e.to_string())?;
            let got: Vec<bool> = block
                .txs
                .iter()
                .map(|t| match t.validity {
                    Validity::Valid => Ok(true),
                    Validity::Invalid(InvalidReason::MvccConflict) => Ok(false),
                    other => Err(format!("unexpected flag {other:?}")),
                })
                .collect::<Result<_, _>>()?;
            check!(got == expected, "workload {w} block {height}: {got:?} vs oracle {expected:?}");
            total_txs += size;
            // Deletes remove the key, so the committed version is re-read from the ledger.
            let committed: Vec<Option<Version>> = (0..KEYS).map(|k| ledger.state().version_of(&format!("k{k}"))).collect();
            for (k, v) in committed.iter().enumerate() {
                if v.is_none() {
                    serial[k] = None;
                }
            }
            check!(committed == serial, "workload {w}: versions diverge from oracle");
            history.push(committed);
        }
    }
    Ok(format!("1000 workloads ({total_txs} transactions) flag-identical to serial re-execution"))
}

// ---- 6: sealed-vote secrecy ----------------------------------------------------

fn hex_decode(s: &str) -> Option<Vec<u8>> {
    (0..s.len()).step_by(2).map(|i| s.get(i..i + 2).and_then(|b| u8::from_str_radix(b, 16).ok())).collect()
}

fn contains(hay: &[u8], needle: &str) -> bool {
    hay.windows(needle.len()).any(|w| w == needle.as_bytes())
}

fn sealed_vote_secrecy() -> Outcome {
    let mut config = logical_config(6, ConsensusPolicy::default(), None);
    config.network.block_timeout = Duration::from_millis(5);
    config.curators.insert("root".into(), credential_digest("root", "pw"));
    let platform = Arc::new(Platform::from_config(&config).map_err(|e| e.to_string())?);
    let state = Arc::new(AppState::new(platform.clone(), &config, Telemetry::new(None).map_err(|e| e.to_string())?));
    let rt = runtime();
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
        let running = service::spawn(state, listener).map_err(|e| e.to_string())?;
        let api = Client::new(&format!("http://{}", running.addr));
        let e = |e: factledger_cli::client::ClientError| e.to_string();
        let root = api.login("root", "pw").await.map_err(e)?;
        let mut voters = Vec::new();
        for i in 1..=3 {
            root.post("/fact-checkers", &json!({ "checker_id": format!("voter{i}"), "credential": "pw" })).await.map_err(e)?;
            voters.push(api.login(&format!("voter{i}"), "pw").await.map_err(e)?);
        }
        let mut ids = Vec::new();
        for text in ["SHOCKING cover-up at the port, URGENT: share before it's deleted", "Bombshell scandal at city hall, spread the word"] {
            let r = root.post("/news", &json!({ "content": text })).await.map_err(e)?;
            ids.push(r["news_id"].as_str().unwrap_or_default().to_owned());
        }
        let plan = [Verdict::False, Verdict::Partial, Verdict::False];
        let marker = |n: usize, v: usize| format!("rationale-{n}-{v}-q8Zk");
        let mut submitted: HashMap<(String, String), (Verdict, String)> = HashMap::new();
        for (n, id) in ids.iter().enumerate() {
            for v in 0..2 {
                let body = json!({ "verdict": plan[v].as_str(), "rationale": marker(n, v) });
                voters[v].post(&format!("/news/{id}/votes"), &body).await.map_err(e)?;
                submitted.insert((id.clone(), format!("voter{}", v + 1)), (plan[v], marker(n, v)));
            }
        }

        let verdict_words = ["True", "False", "Partial"];
        let chain = platform.with_ledger(|l| l.chain_bytes());
        for w in verdict_words.iter().map(|s| s.to_string()).chain((0..2).flat_map(|n| (0..2).map(move |v| marker(n, v)))) {
            check!(!contains(&chain, &w), "chain bytes contain `{w}` before any reveal");
        }
        let height = platform.network().height();
        let mut public = vec!["/news/suspicious".to_owned(), "/news".into(), "/dashboard".into(), "/chain".into()];
        public.extend(ids.iter().map(|id| format!("/check-news/{id}")));
        public.extend((0..=height).map(|h| format!("/blocks/{h}")));
        for route in &public {
            let body = api.get(route).await.map_err(e)?.to_string();
            for w in verdict_words.iter().map(|s| s.to_string()).chain((0..2).flat_map(|n| (0..2).map(move |v| marker(n, v)))) {
                check!(!body.contains(&w), "{route} exposes `{w}` before reveal");
            }
            if route.starts_with("/check-news") || route == "/news/suspicious" {
                check!(!body.contains("\"voter"), "{route} exposes voter identities");
            }
        }

        // Labeling the first item must not open the second.
        let last = json!({ "verdict": plan[2].as_str(), "rationale": marker(0, 2) });
        let r = voters[2].post(&format!("/news/{}/votes", ids[0]), &last).await.map_err(e)?;
        check!(r["finalization"]["outcome"] == "finalized", "quorum vote did not finalize: {r}");
        submitted.insert((ids[0].clone(), "voter3".into()), (plan[2], marker(0, 2)));
        let chain = platform.with_ledger(|l| l.chain_bytes());
        for v in 0..2 {
            check!(!contains(&chain, &marker(1, v)), "second item's rationale on chain after first reveal");
        }
        for route in [format!("/check-news/{}", ids[1]), "/news/suspicious".into(), "/news?status=under_analysis".into()] {
            let body = api.get(&route).await.map_err(e)?.to_string();
            for w in verdict_words {
                check!(!body.contains(w), "{route} exposes `{w}` for unlabeled news");
            }
            check!(!body.contains("\"voter"), "{route} exposes voter identities");
        }
        let last = json!({ "verdict": plan[2].as_str(), "rationale": marker(1, 2) });
        voters[2].post(&format!("/news/{}/votes", ids[1]), &last).await.map_err(e)?;
        submitted.insert((ids[1].clone(), "voter3".into()), (plan[2], marker(1, 2)));

        // Every commitment opens to its reveal.
        let mut opened = 0;
        let results = platform.with_ledger(query::consensus_results);
        check!(results.len() == 2, "{} consensus results", results.len());
        for result in &results {
            for r in &result.reveals {
                let salt = hex_decode(&r.salt).ok_or("salt is not hex")?;
                check!(salt.len() == 16, "salt length {}", salt.len());
                let preimage = [r.verdict.as_str().as_bytes(), r.rationale.as_bytes(), &salt].concat();
                let opened_digest = Digest::of(&preimage);
                let on_chain = platform
                    .with_ledger(|l| query::vote_commitment(l, &result.news_id, &r.checker_id))
                    .map_err(|e| e.to_string())?
                    .ok_or("vote record missing")?;
                check!(opened_digest == r.commitment && opened_digest == on_chain.commitment, "commitment of {} does not open", r.checker_id);
                let sent = &submitted[&(result.news_id.to_hex(), r.checker_id.clone())];
                check!((r.verdict, &r.rationale) == (sent.0, &sent.1), "reveal differs from the submitted vote");
                opened += 1;
            }
        }
        check!(opened == 6, "{opened} reveals");
        running.shutdown().await.map_err(|e| e.to_string())?;
        Ok(format!("no plaintext in chain bytes or {} public responses before reveal; 6/6 commitments open", public.len()))
    })
}

// ---- 7: token conservation -----------------------------------------------------

fn token_conservation() -> Outcome {
    let mut results = 0;
    for seed in 0..24u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(700 + seed);
        let policy = ConsensusPolicy {
            quorum: rng.random_range(2..=4),
            mode: if seed % 2 == 0 { TallyMode::SimpleMajority } else { TallyMode::CredibilityWeighted },
            reward_per_aligned_vote: rng.random_range(1..=25),
            credibility_step: 0.1,
        };
        let p = Platform::from_config(&logical_config(seed, policy, None)).map_err(|e| e.to_string())?;
        let checkers = policy.quorum + rng.random_range(0..3);
        let items = rng.random_range(3..8);
        fact_workload(&p, &mut rng, checkers, items, true);
        let (balances, minted, finals) = p.with_ledger(|l| {
            let balances: u64 = query::list_checkers(l).iter().map(|c| c.token_balance).sum();
            (balances, query::total_minted(l), query::consensus_results(l))
        });
        let aligned: u64 = finals
            .iter()
            .map(|r| {
                r.reveals.iter().filter(|v| v.verdict == r.verdict && !r.excluded.contains(&v.checker_id)).count() as u64
            })
            .sum();
        let expected = policy.reward_per_aligned_vote * aligned;
        check!(balances == expected && minted == expected, "seed {seed}: balances {balances}, minted {minted}, expected {expected}");
        results += finals.len();
    }
    Ok(format!("24 random workloads ({results} finalized items, forged reveals included): sum of balances == reward x aligned votes"))
}

// ---- 8: threshold semantics ----------------------------------------------------

fn threshold_semantics() -> Outcome {
    let lexicon = CueLexicon::parse("urgency\t0.69\talpha\nurgency\t0.70\tbravo\nurgency\t0.71\tcharlie\n").map_err(|e| e.to_string())?;
    let config = logical_config(8, ConsensusPolicy::default(), None);
    let p = Platform::with_scorer(&config, Arc::new(LexiconScorer::new(lexicon)), None).map_err(|e| e.to_string())?;
    let ids: BTreeMap<&str, Digest> = ["alpha", "bravo", "charlie"].into_iter().map(|w| (w, register(&p, w))).collect();
    let (scores, listed, dash) = p.with_ledger(|l| {
        let scores: Vec<f64> = ids.values().map(|id| query::check_news(l, id, 0.7).unwrap().score.unwrap()).collect();
        let listed: Vec<Digest> = query::list_suspicious(l, 0.7).into_iter().map(|v| v.news_id).collect();
        (scores, listed, query::dashboard(l, 0.7))
    });
    check!(scores == [0.69, 0.70, 0.71], "scores {scores:?}");
    check!(listed == [ids["charlie"]], "suspicious list {listed:?}");
    check!(dash.suspicious_over_0_7 == 1, "dashboard {dash:?}");
    Ok("scores 0.69/0.70/0.71: suspicious list holds only the 0.71 asset".into())
}

// ---- 9: replica convergence ----------------------------------------------------

fn replica_convergence() -> Outcome {
    let p = Platform::from_config(&logical_config(9, ConsensusPolicy::default(), None)).map_err(|e| e.to_string())?;
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let who: Vec<Submitter> = (0..5).map(|i| add_checker(&p, i)).collect();
    let mut news: Vec<Digest> = Vec::new();
    let mut blocks = 0;
    let mut invalid = 0;
    for round in 0..40 {
        for k in 0..rng.random_range(1..16) {
            let proposal = if news.is_empty() || rng.random_bool(0.3) {
                p.register_proposal(curator(), &format!("convergence {round}/{k}"), ContentFormat::Text, "2024-03-01T00:00:00Z", "a", "b")
            } else {
                let id = news[rng.random_range(0..news.len())];
                p.vote_proposal(who[rng.random_range(0..who.len())].clone(), &id, Verdict::ALL[rng.random_range(0..3)], "r")
            };
            let _ = p.network().submit(&proposal);
        }
        while let Some(block) = p.commit_next().map_err(|e| e.to_string())? {
            blocks += 1;
            invalid += block.txs.iter().filter(|t| !t.validity.is_valid()).count();
            let digests = p.network().state_digests();
            check!(digests.windows(2).all(|w| w[0] == w[1]), "replicas diverge after block {}", block.height);
            let tips: Vec<Digest> = (0..3).map(|i| p.network().with_org(i, |o| o.ledger.blocks().last().unwrap().block_hash)).collect();
            check!(tips.windows(2).all(|w| w[0] == w[1]), "tips diverge at block {}", block.height);
        }
        news = p.with_ledger(|l| query::all_news(l).map(|a| a.news_id).collect());
    }
    check!(invalid > 0, "workload never produced an invalid transaction");
    Ok(format!("3 replicas hash-equal after each of {blocks} blocks ({invalid} invalidated txs)"))
}

// ---- runner ------------------------------------------------------------------

fn main() {
    let mut desk = DeskRun { server: None, dir: None };
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut record = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or("panicked".into()))
        });
        let line = match &r {
            Ok(m) => format!("PASS {name} ({:.1}s): {m}", t.elapsed().as_secs_f64()),
            Err(m) => format!("FAIL {name} ({:.1}s): {m}", t.elapsed().as_secs_f64()),
        };
        println!("{line}");
        results.push((name, r));
    };
    record("desk-scale ingest + simulated voting", &mut || desk_scale(&mut desk));
    record("tamper detection", &mut tamper_detection);
    record("replay determinism", &mut replay_determinism);
    record("tally oracle equivalence", &mut tally_equivalence);
    record("mvcc equivalence", &mut mvcc_equivalence);
    record("sealed-vote secrecy", &mut sealed_vote_secrecy);
    record("token conservation", &mut token_conservation);
    record("threshold semantics", &mut threshold_semantics);
    record("replica convergence", &mut replica_convergence);
    record("latency reporting", &mut || latency_report(&desk));
    drop(record);
    drop(desk);

    let failed = results.iter().filter(|(_, r)| r.is_err()).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
