use alloc::vec::Vec;

/// Positive root of `ρ = 1 − exp(−R0 ρ)`, or 0 when `R0 ≤ 1`.
pub fn final_size(r0: f64) -> f64 {
    if r0 <= 1.0 {
        return 0.0;
    }
    // the iteration from 1 decreases monotonically onto the positive root
    let mut rho = 1.0;
    for _ in 0..100_000 {
        let next = 1.0 - libm::exp(-r0 * rho);
        if (next - rho).abs() < 1e-15 {
            return next;
        }
        rho = next;
    }
    rho
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldPoint {
    pub t: u32,
    pub susceptible: f64,
    pub infectious: f64,
    pub recovered: f64,
}

/// Deterministic fully-mixed daily SIR with the same update order as the
/// stochastic runs: each susceptible escapes each of the `β · m̄ · I_t`
/// expected transmissions with probability `1 − 1/(N − 1)`, then a fraction
/// `μ` of the infectious recovers.
pub fn mean_field_trajectory(n: f64, beta: f64, mean_contacts: f64, mu: f64, initial: f64, days: u32) -> Vec<MeanFieldPoint> {
    let mut s = n - initial;
    let mut i = initial;
    let mut r = 0.0;
    let mut out = Vec::with_capacity(days as usize + 1);
    for t in 0..=days {
        out.push(MeanFieldPoint { t, susceptible: s, infectious: i, recovered: r });
        let new = s * (1.0 - libm::exp(-beta * mean_contacts * i / (n - 1.0)));
        let rec = mu * i;
        s -= new;
        i += new - rec;
        r += rec;
    }
    out
}
