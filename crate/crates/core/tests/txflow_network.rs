use std::fmt;

use factledger_core::ledger::{verify_log_file, InvalidReason, Operation, Role, Submitter, Validity};
use factledger_core::txflow::{
    digest_key, Chaincode, ClockMode, CollectionConfig, Network, NetworkConfig, PrivateRead, Proposal, SubmitError,
    TxContext,
};
use factledger_core::Digest;

#[derive(Debug)]
struct CodeError(String);

impl fmt::Display for CodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CodeError {}

/// `put`, `incr`, `random` (nondeterministic) and `secret` (private write).
struct TestCode;

impl Chaincode for TestCode {
    type Error = CodeError;

    fn has_operation(&self, name: &str) -> bool {
        matches!(name, "put" | "incr" | "random" | "secret")
    }

    fn invoke(&self, ctx: &mut TxContext<'_>, op: &Operation) -> Result<Vec<u8>, CodeError> {
        let key = op.get("key").unwrap_or("k").to_owned();
        match op.name.as_str() {
            "put" => ctx.put_state(key, op.get("value").unwrap_or_default().as_bytes().to_vec()),
            "incr" => {
                let n: u64 = ctx.get_state(&key).map(|b| String::from_utf8(b).unwrap().parse().unwrap()).unwrap_or(0);
                ctx.put_state(key, (n + 1).to_string().into_bytes());
            }
            "random" => ctx.put_state(key, rand::random::<u64>().to_le_bytes().to_vec()),
            "secret" => {
                let v = ctx.transient("value").ok_or_else(|| CodeError("no value".into()))?.to_vec();
                ctx.put_private("secret", &key, v).map_err(|e| CodeError(e.to_string()))?;
            }
            _ => unreachable!(),
        }
        Ok(b"ok".to_vec())
    }
}

fn config() -> NetworkConfig {
    let mut c = NetworkConfig {
        clock: ClockMode::Logical { start_ms: 1_000, step_ms: 10 },
        block_max_txs: 4,
        ..Default::default()
    };
    c.collections.push(CollectionConfig { name: "secret".into(), members: vec!["org1".into(), "org2".into()] });
    c
}

fn proposal(n: u64, op: Operation) -> Proposal {
    Proposal::new(Submitter::new("u", "org1", Role::System), op, n)
}

#[test]
fn nondeterministic_operation_is_rejected() {
    let net = Network::new(config(), TestCode).unwrap();
    let err = net.endorse(&proposal(1, Operation::new("random"))).unwrap_err();
    assert!(matches!(err, SubmitError::EndorsementMismatch));
    assert!(matches!(net.endorse(&proposal(2, Operation::new("nope"))), Err(SubmitError::UnknownOperation(_))));
    assert_eq!(net.queued(), 0);
}

#[test]
fn endorsement_needs_enough_online_orgs() {
    let net = Network::new(config(), TestCode).unwrap();
    net.set_online("org1", false).unwrap();
    net.submit(&proposal(1, Operation::new("incr"))).unwrap();
    net.set_online("org2", false).unwrap();
    let err = net.submit(&proposal(2, Operation::new("incr"))).unwrap_err();
    assert!(matches!(err, SubmitError::PolicyUnsatisfied { online: 1, required: 2 }));
}

#[test]
fn private_data_reaches_members_only() {
    let net = Network::new(config(), TestCode).unwrap();
    let p = proposal(1, Operation::new("secret").arg("key", "s1")).with_transient("value", "plaintext-XYZ");
    net.submit(&p).unwrap();
    net.flush().unwrap();
    let digest = Digest::of(b"plaintext-XYZ");
    assert_eq!(net.pdc_get("secret", "s1", "org1").unwrap(), PrivateRead::Value(b"plaintext-XYZ".to_vec()));
    assert_eq!(net.pdc_get("secret", "s1", "org3").unwrap(), PrivateRead::DigestOnly(digest));
    assert_eq!(net.pdc_get("secret", "nope", "org1").unwrap(), PrivateRead::Absent);
    net.with_org(2, |o| assert!(o.private.get("secret", "s1").is_none()));

    let on_chain = net.with_ledger(|l| l.state_get(&digest_key("secret", "s1")).map(|(v, _)| v.to_vec())).unwrap();
    assert_eq!(on_chain, digest.to_hex().into_bytes());
    let chain = net.with_ledger(|l| l.chain_bytes());
    assert!(!chain.windows(13).any(|w| w == b"plaintext-XYZ"));
}

#[test]
fn conflicting_increments_within_a_block() {
    let net = Network::new(config(), TestCode).unwrap();
    for n in 0..3 {
        net.submit(&proposal(n, Operation::new("incr"))).unwrap();
    }
    let block = net.order_and_commit().unwrap().unwrap();
    let flags: Vec<_> = block.txs.iter().map(|t| t.validity).collect();
    let conflict = Validity::Invalid(InvalidReason::MvccConflict);
    assert_eq!(flags, [Validity::Valid, conflict, conflict]);
    assert_eq!(net.with_ledger(|l| l.state_get("k").unwrap().0.to_vec()), b"1");
}

#[test]
fn replicas_converge_after_every_block() {
    let net = Network::new(config(), TestCode).unwrap();
    for n in 0..40u64 {
        let op = if n % 3 == 0 {
            Operation::new("incr").arg("key", format!("c{}", n % 5))
        } else {
            Operation::new("put").arg("key", format!("p{}", n % 7)).arg("value", n.to_string())
        };
        net.submit(&proposal(n, op)).unwrap();
        if n % 5 == 4 {
            while net.order_and_commit().unwrap().is_some() {
                let d = net.state_digests();
                assert!(d.windows(2).all(|w| w[0] == w[1]));
            }
        }
    }
    let tips: Vec<_> = (0..3).map(|i| net.with_org(i, |o| o.ledger.blocks().last().unwrap().block_hash)).collect();
    assert!(tips.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn persisted_network_reopens_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (state, tip) = {
        let net = Network::open(config(), TestCode, dir.path()).unwrap();
        for n in 0..12 {
            net.submit(&proposal(n, Operation::new("incr").arg("key", format!("c{}", n % 3)))).unwrap();
        }
        let p = proposal(99, Operation::new("secret").arg("key", "s")).with_transient("value", "v");
        net.submit(&p).unwrap();
        net.flush().unwrap();
        (net.state_digests(), net.with_ledger(|l| l.blocks().last().unwrap().block_hash))
    };
    let net = Network::open(config(), TestCode, dir.path()).unwrap();
    assert_eq!(net.state_digests(), state);
    assert_eq!(net.with_ledger(|l| l.blocks().last().unwrap().block_hash), tip);
    assert_eq!(net.pdc_get("secret", "s", "org2").unwrap(), PrivateRead::Value(b"v".to_vec()));
    for org in ["org1", "org2", "org3"] {
        assert!(verify_log_file(dir.path().join(org).join("blocks.log")).unwrap().is_ok());
    }
    let trace = std::fs::read_to_string(dir.path().join("trace.log")).unwrap();
    assert!(trace.lines().count() >= 13 * 3);
}
