mod common;

use common::*;
use factledger_core::factcheck::query;
use factledger_core::factcheck::{
    ops, ConsensusPolicy, ContentFormat, FactCheckError, Finalization, TallyMode, Verdict, VOTES_COLLECTION,
};
use factledger_core::ledger::{InvalidReason, Operation, Validity};
use factledger_core::platform::PlatformError;
use factledger_core::txflow::PrivateRead;

fn domain(e: PlatformError) -> FactCheckError {
    match e {
        PlatformError::Domain(d) => d,
        other => panic!("expected a domain error, got {other:?}"),
    }
}

fn finalized(f: &Option<Finalization>) -> &factledger_core::factcheck::ConsensusResult {
    match f {
        Some(Finalization::Finalized { result }) => result,
        other => panic!("expected finalization, got {other:?}"),
    }
}

#[test]
fn duplicate_and_empty_content() {
    let p = platform(ConsensusPolicy::default());
    let first = register(&p, "same bytes").unwrap();
    let err = domain(register(&p, "same bytes").unwrap_err());
    assert_eq!(err, FactCheckError::DuplicateNews { news_id: first.response.news_id });
    assert_eq!(domain(register(&p, "").unwrap_err()), FactCheckError::EmptyContent);
}

#[test]
fn media_formats_are_not_scored() {
    let p = platform(ConsensusPolicy::default());
    let c = p
        .execute_now::<factledger_core::factcheck::RegisterReceipt>(p.register_proposal(
            curator(),
            "s3://bucket/clip.mp4",
            ContentFormat::Video,
            "2024-01-01T00:00:00Z",
            "a",
            "x",
        ))
        .unwrap();
    assert_eq!(c.response.score, None);
    let view = p.with_ledger(|l| query::check_news(l, &c.response.news_id, 0.7)).unwrap();
    assert_eq!(view.score, None);
    assert!(!view.suspicious);
}

#[test]
fn dispatch_targets_active_checkers_once() {
    let p = platform(ConsensusPolicy::default());
    let lonely = register(&p, "before anyone joined").unwrap().response;
    assert_eq!(lonely.notified, 0);
    let view = p.with_ledger(|l| query::check_news(l, &lonely.news_id, 0.7)).unwrap();
    assert_eq!(view.status, "under_analysis");

    let cs = checkers(&p, 4);
    let op = Operation::new(ops::DEACTIVATE_CHECKER).arg("checker_id", "c3");
    p.execute_now::<serde_json::Value>(p.operation_proposal(curator(), op)).unwrap();
    let news = register(&p, "fresh post").unwrap().response;
    assert_eq!(news.notified, 3);
    for _ in 0..2 {
        let op = Operation::new(ops::DISPATCH).arg("news_id", news.news_id.to_hex());
        let n: Vec<serde_json::Value> = p.execute_now(p.operation_proposal(curator(), op)).unwrap().response;
        assert_eq!(n.len(), 3);
    }
    let pending = p.with_ledger(|l| query::notifications(l, &cs[0].id));
    assert_eq!(pending.iter().filter(|n| n.pending).count(), 1);
    assert!(p.with_ledger(|l| query::notifications(l, "c3")).is_empty());
}

#[test]
fn checker_administration() {
    let p = platform(ConsensusPolicy::default());
    let fresh = create_checker(&p, "alice", "org2").unwrap().response;
    assert_eq!((fresh.credibility, fresh.token_balance, fresh.active), (0.5, 0, true));
    let op = Operation::new(ops::CREATE_CHECKER)
        .arg("checker_id", "mallory")
        .arg("credential_digest", "00".repeat(32))
        .arg("org", "org1");
    let err = domain(p.execute_now::<serde_json::Value>(p.operation_proposal(checker("alice", "org2"), op)).unwrap_err());
    assert!(matches!(err, FactCheckError::NotAuthorized(_)));
    assert!(matches!(domain(create_checker(&p, "alice", "org2").unwrap_err()), FactCheckError::CheckerExists(_)));

    let news = register(&p, "some post").unwrap().response.news_id;
    let op = Operation::new(ops::DEACTIVATE_CHECKER).arg("checker_id", "alice");
    p.execute_now::<serde_json::Value>(p.operation_proposal(curator(), op)).unwrap();
    let err = domain(vote(&p, &checker("alice", "org2"), &news, Verdict::True, "src").unwrap_err());
    assert_eq!(err, FactCheckError::InactiveChecker("alice".into()));
    let err = domain(vote(&p, &checker("ghost", "org1"), &news, Verdict::True, "src").unwrap_err());
    assert_eq!(err, FactCheckError::UnknownChecker("ghost".into()));
    // History is preserved.
    assert!(!p.with_ledger(|l| query::checker(l, "alice")).unwrap().active);
}

#[test]
fn quorum_vote_finalizes_in_the_same_block() {
    let p = platform(ConsensusPolicy::default());
    let cs = checkers(&p, 3);
    let news = register(&p, "A claim about rates").unwrap().response.news_id;

    let v0 = vote(&p, &cs[0], &news, Verdict::False, "agency bulletin 12").unwrap();
    assert!(v0.response.finalization.is_none());
    let err = domain(vote(&p, &cs[0], &news, Verdict::True, "changed my mind").unwrap_err());
    assert_eq!(err, FactCheckError::AlreadyVoted("c0".into()));
    vote(&p, &cs[1], &news, Verdict::False, "edited photo").unwrap();
    let third = vote(&p, &cs[2], &news, Verdict::True, "original source").unwrap();
    let result = finalized(&third.response.finalization).clone();
    assert_eq!(result.verdict, Verdict::False);
    assert_eq!(result.aligned, ["c0", "c1"]);

    let view = p.with_ledger(|l| query::check_news(l, &news, 0.7)).unwrap();
    assert_eq!(view.verdict, Some(Verdict::False));
    assert_eq!(view.label_block, Some(third.location.height));
    assert_eq!(view.consensus.unwrap().finalized_at, Some(third.location.height));

    let balances: Vec<u64> = (0..3).map(|i| p.with_ledger(|l| query::reward_query(l, &format!("c{i}"))).unwrap()).collect();
    assert_eq!(balances, [10, 10, 0]);
    assert_eq!(p.with_ledger(query::total_minted), 20);
    let creds: Vec<f64> =
        (0..3).map(|i| p.with_ledger(|l| query::checker(l, &format!("c{i}"))).unwrap().credibility).collect();
    assert!((creds[0] - 0.55).abs() < 1e-12 && (creds[1] - 0.55).abs() < 1e-12 && (creds[2] - 0.45).abs() < 1e-12);

    // Labels are immutable; the rejected vote leaves the chain untouched.
    let before = p.with_ledger(|l| l.chain_bytes());
    create_checker(&p, "late", "org1").unwrap();
    let after_create = p.with_ledger(|l| l.chain_bytes());
    let err = domain(vote(&p, &checker("late", "org1"), &news, Verdict::True, "x").unwrap_err());
    assert_eq!(err, FactCheckError::NewsAlreadyLabeled);
    assert_eq!(p.with_ledger(|l| l.chain_bytes()), after_create);
    assert!(after_create.starts_with(&before));
    // Every commitment opens to its reveal.
    for r in &result.reveals {
        let c = p.with_ledger(|l| query::vote_commitment(l, &news, &r.checker_id)).unwrap().unwrap();
        assert_eq!(c.commitment, r.commitment);
        let salt = hex::decode(&r.salt).unwrap();
        assert_eq!(factledger_core::factcheck::VoteReveal::commitment_of(r.verdict, &r.rationale, &salt), c.commitment);
    }
}

#[test]
fn tie_with_quorum_two_goes_to_false() {
    let p = platform(ConsensusPolicy { quorum: 2, ..Default::default() });
    let cs = checkers(&p, 2);
    let news = register(&p, "two opinions").unwrap().response.news_id;
    vote(&p, &cs[0], &news, Verdict::True, "a").unwrap();
    let r = vote(&p, &cs[1], &news, Verdict::False, "b").unwrap();
    assert_eq!(finalized(&r.response.finalization).verdict, Verdict::False);
}

#[test]
fn weighted_mode_uses_stored_credibility() {
    let p = platform(ConsensusPolicy { quorum: 3, mode: TallyMode::CredibilityWeighted, ..Default::default() });
    let cs = checkers(&p, 3);
    let news = register(&p, "weighted").unwrap().response.news_id;
    vote(&p, &cs[0], &news, Verdict::True, "a").unwrap();
    vote(&p, &cs[1], &news, Verdict::Partial, "b").unwrap();
    let r = vote(&p, &cs[2], &news, Verdict::Partial, "c").unwrap();
    let res = finalized(&r.response.finalization);
    assert_eq!(res.verdict, Verdict::Partial);
    assert_eq!(res.tally[&Verdict::Partial], 1.0);
    assert_eq!(res.tally[&Verdict::True], 0.5);
}

#[test]
fn pending_votes_stay_secret() {
    let p = platform(ConsensusPolicy::default());
    let cs = checkers(&p, 3);
    let news = register(&p, "pending item").unwrap().response.news_id;
    vote(&p, &cs[0], &news, Verdict::Partial, "rationale-marker-one").unwrap();
    vote(&p, &cs[1], &news, Verdict::False, "rationale-marker-two").unwrap();

    let view = serde_json::to_string(&p.with_ledger(|l| query::check_news(l, &news, 0.0)).unwrap()).unwrap();
    let suspicious = serde_json::to_string(&p.with_ledger(|l| query::list_suspicious(l, 0.0))).unwrap();
    let chain = p.with_ledger(|l| l.chain_bytes());
    for needle in ["Partial", "False", "rationale-marker", "\"c0\"", "\"c1\""] {
        assert!(!view.contains(needle), "{needle} in view");
        assert!(!suspicious.contains(needle), "{needle} in suspicious list");
    }
    for needle in ["Partial", "False", "rationale-marker"] {
        assert!(!chain.windows(needle.len()).any(|w| w == needle.as_bytes()), "{needle} on chain");
    }
    // Members read the plaintext; the on-ledger digest is the commitment.
    let commitment = p.with_ledger(|l| query::vote_commitment(l, &news, "c0")).unwrap().unwrap().commitment;
    let key = format!("{news}/c0");
    match p.network().pdc_get(VOTES_COLLECTION, &key, "org3").unwrap() {
        PrivateRead::Value(v) => assert_eq!(factledger_core::Digest::of(&v), commitment),
        other => panic!("{other:?}"),
    }
}

#[test]
fn explicit_finalize_requires_quorum() {
    let p = platform(ConsensusPolicy::default());
    let cs = checkers(&p, 2);
    let news = register(&p, "short of quorum").unwrap().response.news_id;
    vote(&p, &cs[0], &news, Verdict::True, "a").unwrap();
    vote(&p, &cs[1], &news, Verdict::True, "b").unwrap();
    let op = Operation::new(ops::FINALIZE).arg("news_id", news.to_hex());
    let err = domain(p.execute_now::<serde_json::Value>(p.operation_proposal(curator(), op)).unwrap_err());
    assert_eq!(err, FactCheckError::QuorumNotReached { have: 2, need: 3 });
}

#[test]
fn reveal_mismatch_excludes_and_flags() {
    let p = platform(ConsensusPolicy::default());
    let cs = checkers(&p, 4);
    let news = register(&p, "contested").unwrap().response.news_id;
    vote(&p, &cs[0], &news, Verdict::True, "honest").unwrap();
    for org in ["org1", "org2", "org3"] {
        p.network().tamper_private(org, VOTES_COLLECTION, &format!("{news}/c0"), b"Falseforged0123456789abcdef".to_vec()).unwrap();
    }
    vote(&p, &cs[1], &news, Verdict::False, "b").unwrap();
    let third = vote(&p, &cs[2], &news, Verdict::False, "c").unwrap();
    match &third.response.finalization {
        Some(Finalization::QuorumNotReached { excluded, remaining, quorum }) => {
            assert_eq!((excluded.as_slice(), *remaining, *quorum), (&["c0".to_owned()][..], 2, 3));
        }
        other => panic!("{other:?}"),
    }
    let c0 = p.with_ledger(|l| query::checker(l, "c0")).unwrap();
    assert_eq!(c0.flags, 1);
    assert!((c0.credibility - 0.45).abs() < 1e-12);

    let fourth = vote(&p, &cs[3], &news, Verdict::True, "d").unwrap();
    let res = finalized(&fourth.response.finalization);
    assert_eq!(res.participants, ["c1", "c2", "c3"]);
    assert_eq!(res.verdict, Verdict::False);
    assert_eq!(p.with_ledger(query::total_minted), 20);
    assert_eq!(p.with_ledger(query::sum_balances), 20);
}

#[test]
fn concurrent_double_vote_commits_once() {
    let p = platform(ConsensusPolicy::default());
    let cs = checkers(&p, 3);
    let news = register(&p, "race").unwrap().response.news_id;
    let a = p.network().endorse(&p.vote_proposal(cs[0].clone(), &news, Verdict::True, "a")).unwrap();
    let b = p.network().endorse(&p.vote_proposal(cs[0].clone(), &news, Verdict::False, "b")).unwrap();
    p.network().enqueue(a);
    p.network().enqueue(b);
    let block = p.commit_next().unwrap().unwrap();
    let flags: Vec<Validity> = block.txs.iter().map(|t| t.validity).collect();
    assert_eq!(flags, [Validity::Valid, Validity::Invalid(InvalidReason::MvccConflict)]);
}
