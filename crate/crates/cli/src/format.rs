/// Seventeen significant digits in scientific notation; `-0` prints as `0`.
pub fn number(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}
