use std::collections::BTreeMap;

use super::types::{TallyMode, Verdict};

/// Tie precedence, highest first.
pub const TIE_PRECEDENCE: [Verdict; 3] = [Verdict::False, Verdict::Partial, Verdict::True];

/// Relative tolerance under which two weighted totals are treated as tied,
/// so that rescaling all weights cannot split a tie through rounding.
const TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cannot tally an empty vote set")]
pub struct EmptyVotes;

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_EPSILON * a.abs().max(b.abs())
}

/// Tallies `votes[i]` with weight 1 (simple majority) or `credibilities[i]`
/// (credibility-weighted). The winner is the highest total; ties go to the
/// earliest verdict in [`TIE_PRECEDENCE`]. All three verdicts appear in the
/// returned map.
pub fn tally(
    votes: &[Verdict],
    credibilities: &[f64],
    mode: TallyMode,
) -> Result<(Verdict, BTreeMap<Verdict, f64>), EmptyVotes> {
    if votes.is_empty() {
        return Err(EmptyVotes);
    }
    assert!(
        mode == TallyMode::SimpleMajority || credibilities.len() == votes.len(),
        "one credibility per vote"
    );
    let mut totals: BTreeMap<Verdict, f64> = Verdict::ALL.iter().map(|v| (*v, 0.0)).collect();
    for (i, v) in votes.iter().enumerate() {
        let w = match mode {
            TallyMode::SimpleMajority => 1.0,
            TallyMode::CredibilityWeighted => credibilities[i],
        };
        *totals.get_mut(v).unwrap() += w;
    }
    let mut winner = TIE_PRECEDENCE[0];
    for &candidate in &TIE_PRECEDENCE[1..] {
        let (best, c) = (totals[&winner], totals[&candidate]);
        if c > best && !tied(c, best) {
            winner = candidate;
        }
    }
    Ok((winner, totals))
}
