//! Checked 64-bit integer helpers shared by the validator and the simulator.

/// Division rounding toward negative infinity. `None` on a zero divisor or
/// overflow.
pub fn floor_div(a: i64, b: i64) -> Option<i64> {
    let q = a.checked_div(b)?;
    if a % b != 0 && ((a < 0) != (b < 0)) {
        q.checked_sub(1)
    } else {
        Some(q)
    }
}

/// `floor(value * percent / 100)`.
pub fn percent_of(percent: i64, value: i64) -> Option<i64> {
    floor_div(value.checked_mul(percent)?, 100)
}
