//! The capillary dispersion law, multilinear oscillation phases, vector-field
//! phase identities, the linear propagator, decay probes, and resonance loci.
//!
//! Core objects: `Λ(r) = r^{3/2}√tanh r` (finite-depth pure surface tension),
//! `λ(x) = Λ(√x)`, the symmetrizing weight `Λ̃(r) = r^{1/2}(tanh r)^{−1/2}`
//! and `λ̃(x) = x^{1/4}(tanh √x)^{−1/2}` (so `λ̃(r²) = Λ̃(r)` for all `r`),
//! and the phases `Φ^{μ,ν}(ξ,η) = Λ(|ξ|) − μΛ(|ξ−η|) − νΛ(|η|)` with cubic
//! and quartic analogues over telescoped frequency differences.

use crate::error::{CoreError, Result};
use crate::report::{slope_fit, SlopeFit};
use crate::spectral::{DyadicCutoffs, SpectralField};
use num_complex::Complex64;
use serde::Serialize;

/// Taylor coefficients of `λ(x) = x − x²/6 + 19x³/360 − …` (used below the
/// closed-form cutoff; `λ″` suffers catastrophic cancellation as `x → 0`).
const LAMBDA_SERIES: [f64; 8] = [
    1.0,
    -1.0 / 6.0,
    19.0 / 360.0,
    -55.0 / 3024.0,
    11813.0 / 1814400.0,
    -2117.0 / 887040.0,
    64604977.0 / 72648576000.0,
    -263101079.0 / 784604620800.0,
];

/// Switch from closed forms to the series for `x` below this value.
const SERIES_CUTOFF: f64 = 1e-2;

/// The dispersion law bundle: `Λ`, `λ`, `λ̃`, `Λ̃` and derivatives.
///
/// All functions are total on `[0, ∞)`; removable singularities at zero are
/// evaluated by series.
pub struct DispersionLaw;

impl DispersionLaw {
    /// `Λ(r) = r^{3/2} √tanh r`.
    pub fn capital_lambda(r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        r.powf(1.5) * r.tanh().sqrt()
    }

    /// `λ(x) = Λ(√x)`.
    pub fn lambda(x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        if x < SERIES_CUTOFF {
            let mut acc = 0.0;
            for c in LAMBDA_SERIES.iter().rev() {
                acc = acc * x + c;
            }
            acc * x
        } else {
            Self::capital_lambda(x.sqrt())
        }
    }

    /// `λ′(x)`; `λ′(0) = 1`.
    pub fn lambda_prime(x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        if x < SERIES_CUTOFF {
            let mut acc = 0.0;
            for (k, c) in LAMBDA_SERIES.iter().enumerate().rev() {
                acc = acc * x + (k + 1) as f64 * c;
            }
            acc
        } else {
            let t = x.sqrt().tanh();
            let u = x.powf(0.25);
            0.75 * t.sqrt() / u + 0.25 * u * (1.0 - t * t) / t.sqrt()
        }
    }

    /// `λ″(x)`; `λ″(0) = −1/3`.
    pub fn lambda_double_prime(x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        if x < SERIES_CUTOFF {
            let mut acc = 0.0;
            for (k, c) in LAMBDA_SERIES.iter().enumerate().skip(1).rev() {
                acc = acc * x + ((k + 1) * k) as f64 * c;
            }
            acc
        } else {
            let t = x.sqrt().tanh();
            let u = x.powf(0.25);
            let om = 1.0 - t * t;
            -3.0 / 16.0 * t.sqrt() / u.powi(5) + 0.25 * om / (t.sqrt() * u.powi(3))
                - om * om / (16.0 * t.powf(1.5) * u)
                - 0.25 * t.sqrt() * om / u
        }
    }

    /// `Λ̃(r) = r^{1/2}(tanh r)^{−1/2}`; `Λ̃(0) = 1`.
    pub fn capital_lambda_tilde(r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        if r == 0.0 {
            1.0
        } else {
            (r / r.tanh()).sqrt()
        }
    }

    /// `λ̃(x) = x^{1/4}(tanh √x)^{−1/2}`, so `λ̃(r²) = Λ̃(r)`; `λ̃(0) = 1`.
    pub fn lambda_tilde(x: f64) -> f64 {
        Self::capital_lambda_tilde(x.sqrt())
    }

    /// `c̃(x) = −(2λ″(x)·x + 2λ′(x))/λ′(x)` as a function of `x = |ξ|²`;
    /// `c̃(0) = −2`.
    pub fn c_tilde(x: f64) -> f64 {
        let lp = Self::lambda_prime(x);
        -(2.0 * Self::lambda_double_prime(x) * x + 2.0 * lp) / lp
    }

    /// Group speed `Λ′(r)`; `Λ′(0) = 0`.
    pub fn group_velocity(r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let t = r.tanh();
        1.5 * r.sqrt() * t.sqrt() + 0.5 * r.powf(1.5) * (1.0 - t * t) / t.sqrt()
    }
}

/// A sign in a multilinear phase signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Sign tuple of a quadratic `(μ,ν)`, cubic `(τ,κ,ι)`, or quartic
/// `(μ₁,μ₂,ν₁,ν₂)` interaction phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseSignature {
    signs: Vec<Sign>,
}

impl PhaseSignature {
    pub fn quadratic(mu: Sign, nu: Sign) -> Self {
        PhaseSignature { signs: vec![mu, nu] }
    }

    pub fn cubic(tau: Sign, kappa: Sign, iota: Sign) -> Self {
        PhaseSignature { signs: vec![tau, kappa, iota] }
    }

    pub fn quartic(m1: Sign, m2: Sign, n1: Sign, n2: Sign) -> Self {
        PhaseSignature { signs: vec![m1, m2, n1, n2] }
    }

    /// 2, 3, or 4 (number of interacting inputs).
    pub fn arity(&self) -> usize {
        self.signs.len()
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }
}

fn norm2(v: [f64; 2]) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `v⊥ = (−v₂, v₁)`.
fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

/// The telescoped frequency differences entering the phase: for frequencies
/// `(ξ, η, …, last)` of arity `m` these are
/// `(ξ−η, η−σ, …, last)` — `m` vectors total.
fn differences(freqs: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let m = freqs.len();
    let mut out = Vec::with_capacity(m);
    for i in 0..m - 1 {
        out.push(sub(freqs[i], freqs[i + 1]));
    }
    out.push(freqs[m - 1]);
    out
}

/// The oscillation phase `Φ^{signs}(freqs)`: output dispersion minus the
/// signed dispersions of the telescoped input frequencies.
pub fn phase(sig: &PhaseSignature, freqs: &[[f64; 2]]) -> Result<f64> {
    if freqs.len() != sig.arity() {
        return Err(CoreError::Validation(format!(
            "phase: got {} frequencies for arity {}",
            freqs.len(),
            sig.arity()
        )));
    }
    let mut total = DispersionLaw::capital_lambda(norm2(freqs[0]));
    for (s, d) in sig.signs.iter().zip(differences(freqs)) {
        total -= s.as_f64() * DispersionLaw::capital_lambda(norm2(d));
    }
    Ok(total)
}

/// Closed-form gradient of the phase with respect to the frequency in `slot`
/// (0 = ξ, 1 = η, 2 = σ, 3 = κ). At a zero frequency the radial limit
/// (`2λ′(0)·0 = 0`) is returned.
pub fn phase_gradients(sig: &PhaseSignature, freqs: &[[f64; 2]], slot: usize) -> Result<[f64; 2]> {
    if freqs.len() != sig.arity() {
        return Err(CoreError::Validation("phase_gradients: arity mismatch".into()));
    }
    if slot >= sig.arity() {
        return Err(CoreError::Validation(format!(
            "phase_gradients: slot {slot} out of range for arity {}",
            sig.arity()
        )));
    }
    let mut g = [0.0, 0.0];
    // ∇ λ(|v|²) = 2 λ′(|v|²) v.
    let mut add = |v: [f64; 2], w: f64| {
        let lp = DispersionLaw::lambda_prime(dot(v, v));
        g[0] += 2.0 * w * lp * v[0];
        g[1] += 2.0 * w * lp * v[1];
    };
    if slot == 0 {
        add(freqs[0], 1.0);
    }
    let diffs = differences(freqs);
    let m = sig.arity();
    for (i, (s, d)) in sig.signs.iter().zip(&diffs).enumerate() {
        // difference i is freqs[i] − freqs[i+1] for i < m−1, else freqs[m−1]
        let w = -s.as_f64();
        if i < m - 1 {
            if slot == i {
                add(*d, w);
            } else if slot == i + 1 {
                add(*d, -w);
            }
        } else if slot == m - 1 {
            add(*d, w);
        }
    }
    Ok(g)
}

/// Result of the scaling-vector-field phase identity
/// `(L̂_ξ + L̂_η)Φ = c̃(ξ−η)·Φ + remainder` with `L̂_ξ = −ξ·∇_ξ`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LIdentity {
    /// Exact value of `(L̂_ξ + L̂_η)Φ^{μ,ν}(ξ, η)`.
    pub value: f64,
    /// `c̃(|ξ−η|²)`.
    pub c_tilde: f64,
    /// `value − c̃·Φ`; scales as `|η|²` for `μ = +`, `|η| ≪ |ξ|` (and as
    /// `|ξ|²` for `μν = −`, `|ξ| ≪ |η|`).
    pub remainder: f64,
}

/// Evaluates `(L̂_ξ + L̂_η)Φ^{μ,ν}` in closed form:
/// `−2λ′(|ξ|²)|ξ|² + 2μλ′(|ξ−η|²)|ξ−η|² + 2νλ′(|η|²)|η|²`.
pub fn phase_vectorfield_l(sig: &PhaseSignature, xi: [f64; 2], eta: [f64; 2]) -> Result<LIdentity> {
    if sig.arity() != 2 {
        return Err(CoreError::Validation("phase_vectorfield_l requires arity 2".into()));
    }
    let mu = sig.signs[0].as_f64();
    let nu = sig.signs[1].as_f64();
    let zeta = sub(xi, eta);
    let (x2, z2, e2) = (dot(xi, xi), dot(zeta, zeta), dot(eta, eta));
    let value = -2.0 * DispersionLaw::lambda_prime(x2) * x2
        + 2.0 * mu * DispersionLaw::lambda_prime(z2) * z2
        + 2.0 * nu * DispersionLaw::lambda_prime(e2) * e2;
    let c_tilde = DispersionLaw::c_tilde(z2);
    let phi = phase(sig, &[xi, eta])?;
    Ok(LIdentity {
        value,
        c_tilde,
        remainder: value - c_tilde * phi,
    })
}

/// Evaluates `(Ω̂_ξ + Ω̂_η)Φ^{μ,ν}` symbolically:
/// `−2μλ′(|ξ−η|²)(ξ⊥·η + η⊥·ξ)` — identically zero (the bracket is the sum
/// of two opposite cross products).
pub fn phase_vectorfield_omega(sig: &PhaseSignature, xi: [f64; 2], eta: [f64; 2]) -> Result<f64> {
    if sig.arity() != 2 {
        return Err(CoreError::Validation("phase_vectorfield_omega requires arity 2".into()));
    }
    let mu = sig.signs[0].as_f64();
    let zeta = sub(xi, eta);
    let lp = DispersionLaw::lambda_prime(dot(zeta, zeta));
    Ok(-2.0 * mu * lp * (dot(perp(xi), eta) + dot(perp(eta), xi)))
}

/// Multiplies coefficients by `exp(direction·i·t·Λ(|ξ|))`; unitary in `L²`.
pub fn linear_propagate(f: &SpectralField, t: f64, direction: f64) -> SpectralField {
    f.map_coeffs(false, |xi, c| {
        let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        let phase = direction * t * DispersionLaw::capital_lambda(r);
        c * Complex64::from_polar(1.0, phase)
    })
}

/// One decay-probe sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayRow {
    pub t: f64,
    pub sup_norm: f64,
}

/// Result of a linear dispersive decay probe on one dyadic band.
#[derive(Debug, Clone, Serialize)]
pub struct DecayProbe {
    pub band: i32,
    /// θ parameter of the predicted low-band rate `(1+|t|)^{−(1+θ)/2}`
    /// (metadata; 1 for the high-band rate `(1+|t|)^{−1}`).
    pub theta: f64,
    pub rows: Vec<DecayRow>,
    /// Log-log fit of sup-norm against `t`.
    pub fit: SlopeFit,
}

/// Propagates `P_k f` by `e^{itΛ}` over the requested times and records sup
/// norms plus a fitted log-log decay slope.
///
/// Precondition (finite-box validity): the fastest group speed carried by the
/// data must not wrap the box: `max Λ′ · t_max < box_length/4`, with the
/// maximum taken over the band frequencies the projected data actually
/// carries, i.e. coefficients above `1e−3` of the band's peak. (The nominal
/// band edge can exceed smooth data's support by orders of magnitude in
/// weight; the modes below the threshold can contaminate the wrapped sup
/// norms by at most ~0.1% relative, far below slope-fit tolerances.)
/// Otherwise the probe refuses and reports the maximal admissible time.
pub fn decay_probe(
    f: &SpectralField,
    cutoffs: &DyadicCutoffs,
    band: i32,
    times: &[f64],
    theta: f64,
) -> Result<DecayProbe> {
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let pk = cutoffs.lp_project(f, band);
    // Effective support radius of the projected data; Λ′ is increasing.
    let peak = pk.max_coeff();
    let r_eff = std::cell::Cell::new(0.0f64);
    let _ = pk.map_coeffs(false, |xi, c| {
        if c.norm() > 1e-3 * peak {
            r_eff.set(r_eff.get().max(xi[0].hypot(xi[1])));
        }
        c
    });
    let vmax = DispersionLaw::group_velocity(r_eff.get());
    let box_len = f.grid().box_length();
    if peak > 0.0 && vmax * t_max >= box_len / 4.0 {
        return Err(CoreError::Validation(format!(
            "decay probe would wrap the box: max group speed {vmax:.3e} × t_max {t_max:.3e} \
             exceeds box_length/4 = {:.3e}; max admissible time is {:.6e}",
            box_len / 4.0,
            box_len / (4.0 * vmax)
        )));
    }
    let rows: Vec<DecayRow> = times
        .iter()
        .map(|&t| DecayRow {
            t,
            sup_norm: linear_propagate(&pk, t, 1.0).sup_norm(),
        })
        .collect();
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let sups: Vec<f64> = rows.iter().map(|r| r.sup_norm).collect();
    let fit = slope_fit(&ts, &sups);
    Ok(DecayProbe { band, theta, rows, fit })
}

/// A labeled space-resonance point of a cubic interaction class.
#[derive(Debug, Clone, Serialize)]
pub struct ResonancePoint {
    /// Class label S1–S4.
    pub class: &'static str,
    /// `(η, σ)` at the space-resonance point for output frequency `ξ`.
    pub eta: [f64; 2],
    pub sigma: [f64; 2],
    /// The interacting input frequencies `(ξ−η, η−σ, σ)`.
    pub inputs: [[f64; 2]; 3],
    /// Phase value `Φ^{τ,κ,ι}` there (zero iff also time-resonant).
    pub phase: f64,
}

/// The space-resonance locus `(η, σ)` of a cubic signature at output
/// frequency `ξ`, with the phase evaluated there.
///
/// Classes: S₁ = {(+,−,−),(−,+,+)} → inputs (−ξ, ξ, ξ);
/// S₂ = {(+,−,+),(−,+,−)} → (ξ, −ξ, ξ); S₃ = {(+,+,−),(−,−,+)} → (ξ, ξ, −ξ);
/// S₄ = {(+,+,+),(−,−,−)} → (ξ/3, ξ/3, ξ/3).
pub fn resonance_locus(sig: &PhaseSignature, xi: [f64; 2]) -> Result<ResonancePoint> {
    if sig.arity() != 3 {
        return Err(CoreError::Validation("resonance_locus requires arity 3".into()));
    }
    use Sign::{Minus as M, Plus as P};
    let s = (sig.signs[0], sig.signs[1], sig.signs[2]);
    let scale = |c: f64| [c * xi[0], c * xi[1]];
    let (class, eta, sigma) = match s {
        (P, M, M) | (M, P, P) => ("S1", scale(2.0), scale(1.0)),
        (P, M, P) | (M, P, M) => ("S2", scale(0.0), scale(1.0)),
        (P, P, M) | (M, M, P) => ("S3", scale(0.0), scale(-1.0)),
        (P, P, P) | (M, M, M) => ("S4", scale(2.0 / 3.0), scale(1.0 / 3.0)),
    };
    let inputs = [sub(xi, eta), sub(eta, sigma), sigma];
    let phase = phase(sig, &[xi, eta, sigma])?;
    Ok(ResonancePoint { class, eta, sigma, inputs, phase })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Scalar oracles (40-digit arithmetic, frozen):
    const LAMBDA_1: f64 = 0.87269362089782969154; // Λ(1)
    const PHI_PP: f64 = 0.39200809102408273349; // Λ(1) − 2Λ(1/2)
    const S4_PHASE: f64 = 0.058737161124577710976; // Λ(0.3) − 3Λ(0.1)

    #[test]
    fn dispersion_scalar_oracles() {
        assert!((DispersionLaw::capital_lambda(1.0) - LAMBDA_1).abs() < 1e-15);
        // λ̃(r²) = Λ̃(r): the x/ξ-consistent reading
        for r in [0.3, 1.0, 2.7] {
            let a = DispersionLaw::lambda_tilde(r * r);
            let b = DispersionLaw::capital_lambda_tilde(r);
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(DispersionLaw::capital_lambda(0.0), 0.0);
        assert_eq!(DispersionLaw::capital_lambda_tilde(0.0), 1.0);
    }

    #[test]
    fn lambda_monotone_on_lattice() {
        let mut prev = 0.0;
        for i in 1..200 {
            let r = i as f64 * 0.25;
            let v = DispersionLaw::capital_lambda(r);
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn lambda_derivative_oracles() {
        // mpmath central values, frozen
        let cases = [
            (0.5, 0.86548986195731961237, -0.21682998364063274719),
            (1.0, 0.77483000468671330419, -0.15153343860899988772),
            (2.0, 0.66091776037433655575, -0.085614682816959806618),
        ];
        for (x, d1, d2) in cases {
            assert!((DispersionLaw::lambda_prime(x) - d1).abs() < 1e-13, "x={x}");
            assert!((DispersionLaw::lambda_double_prime(x) - d2).abs() < 1e-12, "x={x}");
        }
        // removable singularity
        assert!((DispersionLaw::lambda_prime(0.0) - 1.0).abs() < 1e-15);
        assert!((DispersionLaw::lambda_double_prime(0.0) + 1.0 / 3.0).abs() < 1e-15);
        // series/closed-form agreement near the cutoff
        for x in [0.0099, 0.0101] {
            let lp = DispersionLaw::lambda_prime(x);
            let fd = (DispersionLaw::lambda(x + 1e-6) - DispersionLaw::lambda(x - 1e-6)) / 2e-6;
            assert!((lp - fd).abs() < 1e-9);
        }
    }

    #[test]
    fn small_r_expansion_slope() {
        // |Λ(r) − (r² − r⁴/6)| ~ (19/360) r⁶: slope 6 ≥ 5.5
        let rs = [0.2, 0.1, 0.05, 0.025];
        let errs: Vec<f64> = rs
            .iter()
            .map(|&r| (DispersionLaw::capital_lambda(r) - (r * r - r.powi(4) / 6.0)).abs())
            .collect();
        let fit = slope_fit(&rs, &errs);
        assert!(fit.slope >= 5.5, "slope = {}", fit.slope);
        // constant consistent with 19/360
        for (&r, &e) in rs.iter().zip(&errs) {
            assert!(e <= 0.06 * r.powi(6), "C·r⁶ bound violated at r={r}");
        }
    }

    #[test]
    fn phase_oracles() {
        let sig = PhaseSignature::quadratic(Sign::Plus, Sign::Plus);
        let xi = [1.0, 0.0];
        let eta = [0.5, 0.0];
        let p = phase(&sig, &[xi, eta]).unwrap();
        assert!((p - PHI_PP).abs() < 1e-14);

        // Φ^{+,−}(ξ, 0) = 0
        let sig2 = PhaseSignature::quadratic(Sign::Plus, Sign::Minus);
        let p2 = phase(&sig2, &[xi, [0.0, 0.0]]).unwrap();
        assert!(p2.abs() < 1e-15);

        // cubic S4 point at |σ| = 0.1
        let sig3 = PhaseSignature::cubic(Sign::Plus, Sign::Plus, Sign::Plus);
        let p3 = phase(&sig3, &[[0.3, 0.0], [0.2, 0.0], [0.1, 0.0]]).unwrap();
        assert!((p3 - S4_PHASE).abs() < 1e-14);
    }

    #[test]
    fn gradient_zero_at_space_resonance() {
        let sig = PhaseSignature::quadratic(Sign::Plus, Sign::Plus);
        let xi = [0.7, -0.4];
        let eta = [0.35, -0.2];
        let g = phase_gradients(&sig, &[xi, eta], 1).unwrap();
        assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let signs = [Sign::Plus, Sign::Minus];
        for trial in 0..1000 {
            let arity = 2 + trial % 3;
            let sigs: Vec<Sign> = (0..arity).map(|_| signs[rng.gen_range(0..2)]).collect();
            let sig = PhaseSignature { signs: sigs };
            let freqs: Vec<[f64; 2]> = (0..arity)
                .map(|_| [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)])
                .collect();
            let slot = rng.gen_range(0..arity);
            let g = phase_gradients(&sig, &freqs, slot).unwrap();
            let h = 1e-6;
            for axis in 0..2 {
                let mut fp = freqs.clone();
                let mut fm = freqs.clone();
                fp[slot][axis] += h;
                fm[slot][axis] -= h;
                let fd = (phase(&sig, &fp).unwrap() - phase(&sig, &fm).unwrap()) / (2.0 * h);
                let scale = g[axis].abs().max(1.0);
                assert!(
                    (g[axis] - fd).abs() / scale < 1e-6,
                    "trial {trial}: axis {axis}: {} vs {}",
                    g[axis],
                    fd
                );
            }
        }
    }

    #[test]
    fn omega_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let signs = [Sign::Plus, Sign::Minus];
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let sig = PhaseSignature::quadratic(
                signs[rng.gen_range(0..2)],
                signs[rng.gen_range(0..2)],
            );
            let xi = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let eta = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            worst = worst.max(phase_vectorfield_omega(&sig, xi, eta).unwrap().abs());
        }
        assert!(worst < 1e-12, "max |Ω identity| = {worst:.3e}");
    }

    #[test]
    fn l_identity_remainder_slope() {
        // μ = +: remainder = O(|η|²) at fixed |ξ| = 1
        let sig = PhaseSignature::quadratic(Sign::Plus, Sign::Minus);
        let xi = [1.0, 0.0];
        let etas = [1e-2, 1e-3, 1e-4];
        let rems: Vec<f64> = etas
            .iter()
            .map(|&s| {
                phase_vectorfield_l(&sig, xi, [s * 0.6, s * 0.8])
                    .unwrap()
                    .remainder
                    .abs()
            })
            .collect();
        let fit = slope_fit(&etas, &rems);
        assert!((fit.slope - 2.0).abs() < 0.1, "slope = {}", fit.slope);

        // μν = −: remainder = O(|ξ|²) at fixed |η| = 1 (roles swapped)
        let eta = [0.0, 1.0];
        let rems2: Vec<f64> = etas
            .iter()
            .map(|&s| {
                phase_vectorfield_l(&sig, [s * 0.6, -s * 0.8], eta)
                    .unwrap()
                    .remainder
                    .abs()
            })
            .collect();
        let fit2 = slope_fit(&etas, &rems2);
        assert!((fit2.slope - 2.0).abs() < 0.1, "slope = {}", fit2.slope);
    }

    #[test]
    fn c_tilde_limit() {
        assert!((DispersionLaw::c_tilde(0.0) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn l_identity_trivial_eta_zero() {
        let sig = PhaseSignature::quadratic(Sign::Plus, Sign::Minus);
        let out = phase_vectorfield_l(&sig, [1.3, -0.2], [0.0, 0.0]).unwrap();
        assert!(out.value.abs() < 1e-15);
        assert!(out.remainder.abs() < 1e-15);
    }

    #[test]
    fn propagator_unitary_and_group_law() {
        let grid = crate::spectral::Grid2D::new(32, 2.0 * std::f64::consts::PI).unwrap();
        let f = SpectralField::from_physical_fn(grid, |x, y| x.sin() + (2.0 * y).cos());
        let t = 37.5;
        let g = linear_propagate(&f, t, 1.0);
        assert!((g.l2_norm() - f.l2_norm()).abs() < 1e-12 * f.l2_norm());
        let back = linear_propagate(&g, t, -1.0);
        assert!((&back - &f).max_coeff() < 1e-12);
        let id = linear_propagate(&f, 0.0, 1.0);
        assert!((&id - &f).max_coeff() == 0.0);
    }

    #[test]
    fn decay_probe_refuses_wraparound() {
        let grid = crate::spectral::Grid2D::new(32, 2.0 * std::f64::consts::PI).unwrap();
        let cut = DyadicCutoffs::new(grid);
        let f = SpectralField::from_physical_fn(grid, |x, _| (4.0 * x).cos());
        let err = decay_probe(&f, &cut, 2, &[0.0, 100.0], 1.0);
        assert!(err.is_err());
    }

    #[test]
    fn resonance_loci() {
        let xi = [0.3, 0.0];
        let p = resonance_locus(
            &PhaseSignature::cubic(Sign::Plus, Sign::Minus, Sign::Minus),
            xi,
        )
        .unwrap();
        assert_eq!(p.class, "S1");
        assert_eq!(p.eta, [0.6, 0.0]);
        assert_eq!(p.sigma, [0.3, 0.0]);
        assert_eq!(p.inputs[0], [-0.3, 0.0]);

        let p4 = resonance_locus(
            &PhaseSignature::cubic(Sign::Plus, Sign::Plus, Sign::Plus),
            xi,
        )
        .unwrap();
        assert_eq!(p4.class, "S4");
        assert!((p4.sigma[0] - 0.1).abs() < 1e-15);
        // space-resonant but not time-resonant
        assert!((p4.phase - S4_PHASE).abs() < 1e-14);
        assert!(p4.phase.abs() > 1e-3);
    }

    #[test]
    fn space_resonance_gradient_vanishes_at_loci() {
        // at each locus, ∇_η Φ and ∇_σ Φ vanish
        use Sign::{Minus as M, Plus as P};
        let xi = [0.4, -0.7];
        for signs in [(P, M, M), (P, M, P), (P, P, M), (P, P, P)] {
            let sig = PhaseSignature::cubic(signs.0, signs.1, signs.2);
            let p = resonance_locus(&sig, xi).unwrap();
            for slot in 1..3 {
                let g = phase_gradients(&sig, &[xi, p.eta, p.sigma], slot).unwrap();
                assert!(
                    g[0].abs() < 1e-12 && g[1].abs() < 1e-12,
                    "{:?} slot {slot}: {:?}",
                    signs,
                    g
                );
            }
        }
    }
}
