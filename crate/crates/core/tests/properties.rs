//! Property-based checks of the invariants of each module.

use std::sync::Arc;

use embedcal::datagen::{generate_linear, voigt_mix, LinearGenSpec, LinearVariant};
use embedcal::likelihood::{
    evaluate, log_abc, log_gmm, log_in, log_rgmm, residual_stats, MomentSummary, VarianceCentering, DEFAULT_GAMMA,
};
use embedcal::models::thermal::defaults;
use embedcal::models::{field_midline_heat_rate, linear_eval, ForwardModel, LinearModel, MaterialMap, Mesh};
use embedcal::pce::{project, Evaluation, HermiteBasis, QuadratureRule};
use embedcal::problem::{interleave, split_sample, EmbeddedParameter, PceSettings, PlainParameter};
use embedcal::qoi::z_value;
use embedcal::sampler::effective_sample_size;
use embedcal::{Distribution1D, InferenceProblem, LikelihoodKind, ObservationSet};
use proptest::prelude::*;

/// `f(θ) = [Σ c_j θ_j, θ_0 θ_1 + θ_0², θ_0 + θ_1²]`.
struct Polynomial {
    c: Vec<f64>,
}

impl ForwardModel for Polynomial {
    fn n_params(&self) -> usize {
        2
    }

    fn n_outputs(&self) -> usize {
        3
    }

    fn evaluate(&self, p: &[f64]) -> embedcal::Result<Vec<f64>> {
        Ok(vec![
            self.c[0] * p[0] + self.c[1] * p[1],
            p[0] * p[1] + p[0] * p[0],
            p[0] + p[1] * p[1],
        ])
    }
}

/// Closed-form moments of the polynomial outputs for independent
/// `θ_j ∼ N(m_j, s_j²)`.
fn polynomial_moments(c: &[f64], m: &[f64], s: &[f64]) -> Vec<(f64, f64)> {
    let (m0, m1, s0, s1) = (m[0], m[1], s[0], s[1]);
    let lin = (
        c[0] * m0 + c[1] * m1,
        (c[0] * c[0] * s0 * s0 + c[1] * c[1] * s1 * s1).sqrt(),
    );
    // θ0θ1 + θ0² with θ0 = m0 + s0 a, θ1 = m1 + s1 b
    let mean2 = m0 * m1 + m0 * m0 + s0 * s0;
    // linear part in a: s0(m1 + 2m0) a, in b: m0 s1 b, quadratic: s0 s1 ab + s0² (a² − 1)
    let var2 = (s0 * (m1 + 2.0 * m0)).powi(2) + (m0 * s1).powi(2) + (s0 * s1).powi(2) + 2.0 * s0.powi(4);
    let mean3 = m0 + m1 * m1 + s1 * s1;
    let var3 = s0 * s0 + (2.0 * m1 * s1).powi(2) + 2.0 * s1.powi(4);
    vec![lin, (mean2, var2.sqrt()), (mean3, var3.sqrt())]
}

fn linear_obs() -> ObservationSet {
    generate_linear(&LinearGenSpec::default()).unwrap()
}

fn linear_problem(kind: LikelihoodKind) -> InferenceProblem {
    let obs = linear_obs();
    InferenceProblem::new(
        vec![EmbeddedParameter::new(
            "t",
            Distribution1D::Normal { mean: 4.5, std: 0.5 },
            Distribution1D::LogNormal {
                log_mean: -1.0,
                log_std: 0.5,
            },
        )
        .unwrap()],
        vec![PlainParameter::new("c", Distribution1D::Uniform { low: -1.0, high: 1.0 }).unwrap()],
        Arc::new(ShiftedLinear(LinearModel::new(obs.x.clone()).unwrap())),
        obs,
        kind,
        PceSettings::default(),
    )
    .unwrap()
}

/// `t x + c`, with `c` a plain parameter.
struct ShiftedLinear(LinearModel);

impl ForwardModel for ShiftedLinear {
    fn n_params(&self) -> usize {
        2
    }

    fn n_outputs(&self) -> usize {
        self.0.n_outputs()
    }

    fn evaluate(&self, p: &[f64]) -> embedcal::Result<Vec<f64>> {
        Ok(self.0.evaluate(&p[..1])?.into_iter().map(|v| v + p[1]).collect())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_prior_is_additive(m in 3.0f64..6.0, s in 0.01f64..3.0, c in -0.99f64..0.99) {
        let p = linear_problem(LikelihoodKind::Gmm);
        let expected = Distribution1D::Normal { mean: 4.5, std: 0.5 }.log_pdf(m)
            + Distribution1D::LogNormal { log_mean: -1.0, log_std: 0.5 }.log_pdf(s)
            + Distribution1D::Uniform { low: -1.0, high: 1.0 }.log_pdf(c);
        let got = p.log_prior(&[m, s, c]).unwrap();
        prop_assert!((got - expected).abs() <= 1e-12 * expected.abs().max(1.0));
    }

    #[test]
    fn non_positive_scale_has_zero_prior(m in 3.0f64..6.0, s in -3.0f64..=0.0) {
        let p = linear_problem(LikelihoodKind::Gmm);
        prop_assert_eq!(p.log_prior(&[m, s, 0.0]).unwrap(), f64::NEG_INFINITY);
        prop_assert_eq!(p.log_posterior(&[m, s, 0.0]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn split_inverts_interleave(pairs in prop::collection::vec((-10.0f64..10.0, 0.0f64..5.0), 1..6)) {
        let (means, scales): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let (m2, s2) = split_sample(&interleave(&means, &scales).unwrap());
        prop_assert_eq!(m2, means);
        prop_assert_eq!(s2, scales);
    }

    #[test]
    fn pce_reproduces_polynomial_moments(
        c0 in -3.0f64..3.0, c1 in -3.0f64..3.0,
        m0 in -2.0f64..2.0, m1 in -2.0f64..2.0,
        s0 in 0.0f64..1.5, s1 in 0.0f64..1.5,
    ) {
        let model = Polynomial { c: vec![c0, c1] };
        let basis = HermiteBasis::new(2, 2).unwrap();
        let quad = QuadratureRule::new(3, 2).unwrap();
        let r = project(&model, &[m0, m1], &[s0, s1], &basis, &quad, Evaluation::Serial).unwrap();
        for (i, (mu, sd)) in polynomial_moments(&[c0, c1], &[m0, m1], &[s0, s1]).into_iter().enumerate() {
            prop_assert!((r.mean(i) - mu).abs() <= 1e-10 * mu.abs().max(1.0));
            prop_assert!((r.std(i) - sd).abs() <= 1e-10 * sd.abs().max(1.0));
        }
    }

    #[test]
    fn linear_pce_is_exact(t in 0.0f64..8.0, sb in 0.0f64..3.0) {
        let x: Vec<f64> = (0..120).map(|i| 0.4 + 0.6 * i as f64 / 119.0).collect();
        let model = LinearModel::new(x.clone()).unwrap();
        let r = project(&model, &[t], &[sb], &HermiteBasis::new(1, 1).unwrap(), &QuadratureRule::new(2, 1).unwrap(), Evaluation::Serial).unwrap();
        let (mu, sd) = linear_eval(t, sb, &x).unwrap();
        for i in 0..x.len() {
            prop_assert!((r.mean(i) - mu[i]).abs() < 1e-12);
            prop_assert!((r.std(i) - sd[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn likelihoods_ignore_observation_order(seed in 0u64..1000, shift in 0usize..120) {
        let obs = generate_linear(&LinearGenSpec::with_seed(seed)).unwrap();
        let (mu, sd) = linear_eval(4.1, 0.9, &obs.x).unwrap();
        let ms = MomentSummary::new(mu.clone(), sd.clone(), 0.05).unwrap();
        let mut mu_r = mu; mu_r.rotate_left(shift);
        let mut sd_r = sd; sd_r.rotate_left(shift);
        let mut y_r = obs.y.clone(); y_r.rotate_left(shift);
        let ms_r = MomentSummary::new(mu_r, sd_r, 0.05).unwrap();
        for kind in [LikelihoodKind::abc(0.05), LikelihoodKind::IndependentNormal, LikelihoodKind::Gmm, LikelihoodKind::Rgmm] {
            let a = evaluate(&kind, &ms, &obs.y, VarianceCentering::Zero).unwrap();
            let b = evaluate(&kind, &ms_r, &y_r, VarianceCentering::Zero).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{:?}: {} vs {}", kind, a, b);
        }
    }

    #[test]
    fn in_peaks_at_excess_residual(r in -3.0f64..3.0, sn in 0.05f64..1.0) {
        let best = (r * r - sn * sn).max(0.0).sqrt();
        let score = |s: f64| log_in(&MomentSummary::new(vec![0.0], vec![s], sn).unwrap(), &[r]).unwrap();
        let top = score(best);
        for k in 1..200 {
            let s = 4.0 * k as f64 / 200.0;
            prop_assert!(score(s) <= top + 1e-12);
        }
    }

    #[test]
    fn rgmm_equals_gmm_for_homoscedastic_predictions(seed in 0u64..500, s in 0.0f64..2.0, sn in 0.01f64..1.0) {
        let obs = generate_linear(&LinearGenSpec::with_seed(seed)).unwrap();
        let n = obs.len();
        let mu: Vec<f64> = obs.x.iter().map(|x| 4.0 * x).collect();
        let ms = MomentSummary::new(mu.clone(), vec![s; n], sn).unwrap();
        let g = (s * s + sn * sn).sqrt();
        // standardizing by a common scale g divides every residual by g
        let scaled_y: Vec<f64> = obs.y.iter().zip(&mu).map(|(y, m)| (y - m) / g).collect();
        let ms_unit = MomentSummary::new(vec![0.0; n], vec![0.0; n], 1.0).unwrap();
        let gmm_unit = log_gmm(&residual_stats(&ms_unit, &scaled_y).unwrap(), n).unwrap();
        let rgmm = log_rgmm(&residual_stats(&ms, &obs.y).unwrap(), n).unwrap();
        prop_assert!((rgmm - gmm_unit).abs() <= 1e-10 * rgmm.abs().max(1.0));
    }

    #[test]
    fn z_value_is_affine_invariant(mu in -10.0f64..10.0, sd in 0.01f64..5.0, y in -10.0f64..10.0, a in 0.1f64..100.0, b in -50.0f64..50.0) {
        let z = z_value(mu, sd, y).unwrap();
        let z2 = z_value(a * mu + b, a * sd, a * y + b).unwrap();
        prop_assert!((z - z2).abs() <= 1e-9 * z.max(1.0));
    }

    #[test]
    fn ess_is_linear_in_iterations(n in 1usize..10_000, m in 2usize..64, tau in 1.0f64..200.0) {
        let one = effective_sample_size(n, m, tau);
        let two = effective_sample_size(2 * n, m, tau);
        prop_assert!((two - 2.0 * one).abs() <= 1e-9 * two);
    }

    #[test]
    fn voigt_mix_is_affine(f in 0.0f64..1.0, g in 0.0f64..1.0, w in 0.0f64..1.0) {
        let (s, c) = (defaults::STEEL, defaults::CONCRETE);
        let a = voigt_mix(f, &s, &c).unwrap();
        let b = voigt_mix(g, &s, &c).unwrap();
        let mid = voigt_mix(w * f + (1.0 - w) * g, &s, &c).unwrap();
        let props = |m: &embedcal::models::Material| [m.density, m.heat_capacity, m.diffusivity];
        for ((pm, pa), pb) in props(&mid).into_iter().zip(props(&a)).zip(props(&b)) {
            prop_assert!((pm - (w * pa + (1.0 - w) * pb)).abs() <= 1e-12 * pm.abs());
        }
    }

    #[test]
    fn midline_rate_is_linear_in_the_field(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0, x_mid in 0.0f64..0.4) {
        use rand::{Rng, SeedableRng};
        let mesh = Mesh::square(6).unwrap();
        let map = MaterialMap::with_band(mesh, defaults::CONCRETE, defaults::STEEL, 0.16, 0.18).unwrap();
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..mesh.n_nodes()).map(|_| rng.random_range(270.0..310.0)).collect();
        let v: Vec<f64> = (0..mesh.n_nodes()).map(|_| rng.random_range(270.0..310.0)).collect();
        let mix: Vec<f64> = u.iter().zip(&v).map(|(p, q)| a * p + b * q).collect();
        let q = |f: &[f64]| field_midline_heat_rate(&map, f, x_mid).unwrap();
        let lhs = q(&mix);
        let rhs = a * q(&u) + b * q(&v);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (q(&u).abs() + q(&v).abs()).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn linear_generator_is_deterministic(seed in any::<u64>()) {
        let spec = LinearGenSpec::with_seed(seed);
        prop_assert_eq!(generate_linear(&spec).unwrap(), generate_linear(&spec).unwrap());
    }

    #[test]
    fn variants_only_touch_their_entries(seed in any::<u64>(), delta in 0.0f64..2.0) {
        let base = generate_linear(&LinearGenSpec::with_seed(seed)).unwrap();
        let off = generate_linear(&LinearGenSpec { variant: LinearVariant::Offset { delta }, ..LinearGenSpec::with_seed(seed) }).unwrap();
        let out = generate_linear(&LinearGenSpec { variant: LinearVariant::outliers(delta), ..LinearGenSpec::with_seed(seed) }).unwrap();
        for i in 0..base.len() {
            prop_assert!((off.y[i] - base.y[i] - delta).abs() < 1e-12);
            let x = base.x[i];
            let expected = if (0.6 - 1e-12..=0.7 + 1e-12).contains(&x) { -delta } else { 0.0 };
            prop_assert!((out.y[i] - base.y[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn abc_is_finite_for_positive_noise(eps in 0.001f64..1.0, sn in 0.001f64..3.0, seed in 0u64..100) {
        let obs = generate_linear(&LinearGenSpec::with_seed(seed)).unwrap();
        let (mu, sd) = linear_eval(4.0, 1.0, &obs.x).unwrap();
        let v = log_abc(&MomentSummary::new(mu, sd, sn).unwrap(), &obs.y, eps, DEFAULT_GAMMA).unwrap();
        prop_assert!(v.is_finite());
    }
}
