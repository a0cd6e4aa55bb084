/// Moves credibility a fraction `step` toward 1 when the checker agreed with
/// the outcome, or shrinks it by that fraction otherwise.
pub fn update_credibility(credibility: f64, aligned: bool, step: f64) -> f64 {
    let c = credibility.clamp(0.0, 1.0);
    let next = if aligned { c + step * (1.0 - c) } else { c * (1.0 - step) };
    next.clamp(0.0, 1.0)
}
