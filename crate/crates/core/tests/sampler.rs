use facet_process::geometry::Facet;
use facet_process::model::ModelParams;
use facet_process::sampler::{
    bdmh_step_with, birth_log_ratio, death_log_ratio, run_chain, sample_poisson, ChainConfig, ReferenceMeasure,
};
use facet_process::ustat::{g_increment, g_vector, FacetPattern};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference measure with equal mass on a few atoms.
struct Atoms {
    facets: Vec<Facet>,
    mass: f64,
}

impl ReferenceMeasure for Atoms {
    fn total_mass(&self) -> f64 {
        self.mass
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Facet {
        self.facets[rng.random_range(0..self.facets.len())]
    }
}

fn toy() -> (Atoms, Vec<f64>) {
    let facets = vec![
        Facet::axis(&[0.2, 0.5], 1.0, 0).unwrap(),
        Facet::axis(&[0.8, 0.5], 1.0, 0).unwrap(),
        Facet::axis(&[0.5, 0.3], 1.0, 1).unwrap(),
    ];
    (Atoms { facets, mass: 2.5 }, vec![0.3, -0.9])
}

fn pattern(atoms: &Atoms, mask: usize) -> FacetPattern {
    FacetPattern::from_facets(2, (0..atoms.facets.len()).filter(|i| mask >> i & 1 == 1).map(|i| atoms.facets[i]))
        .unwrap()
}

fn mask_of(atoms: &Atoms, x: &FacetPattern) -> usize {
    x.iter().map(|f| 1 << atoms.facets.iter().position(|g| g == f).unwrap()).sum()
}

/// Target on simple subsets of the atoms: the density `exp(nu . G)` against
/// the Poisson process with one atom of mass `M / n_atoms` per facet.
fn target(atoms: &Atoms, nu: &[f64]) -> Vec<f64> {
    let n = atoms.facets.len();
    let w: Vec<f64> = (0..1usize << n)
        .map(|m| {
            let x = pattern(atoms, m);
            (g_vector(&x).dot(nu)).exp() * (atoms.mass / n as f64).powi(x.len() as i32)
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

/// Transition probability from `x` to `x ∪ u` (birth) using the library's
/// acceptance ratios, and the reverse death probability.
fn birth_and_death(atoms: &Atoms, nu: &[f64], x: &FacetPattern, u: &Facet) -> (f64, f64) {
    let n = x.len();
    let delta = g_increment(x, u).unwrap();
    let birth = 0.5 / atoms.facets.len() as f64 * birth_log_ratio(&delta, nu, n, atoms.mass).exp().min(1.0);
    let death = 0.5 / (n + 1) as f64 * death_log_ratio(&delta, nu, n + 1, atoms.mass).exp().min(1.0);
    (birth, death)
}

#[test]
fn detailed_balance_holds_exactly_on_a_discrete_toy_measure() {
    let (atoms, nu) = toy();
    let pi = target(&atoms, &nu);
    for m in 0..pi.len() {
        let x = pattern(&atoms, m);
        for (i, u) in atoms.facets.iter().enumerate() {
            if m >> i & 1 == 1 {
                continue;
            }
            let (birth, death) = birth_and_death(&atoms, &nu, &x, u);
            let flow_in = pi[m] * birth;
            let flow_out = pi[m | 1 << i] * death;
            assert!((flow_in - flow_out).abs() <= 1e-14, "state {m} + atom {i}: {flow_in} vs {flow_out}");
        }
    }
}

#[test]
fn chain_visits_toy_states_with_target_frequencies() {
    let (atoms, nu) = toy();
    let pi = target(&atoms, &nu);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut x = FacetPattern::new(2).unwrap();
    let mut counts = vec![0u64; pi.len()];
    let steps = 400_000u64;
    for _ in 0..steps {
        bdmh_step_with(&mut x, None, &nu, &atoms, &mut rng);
        counts[mask_of(&atoms, &x)] += 1;
    }
    for (m, &c) in counts.iter().enumerate() {
        let freq = c as f64 / steps as f64;
        // Generous allowance for autocorrelation of the chain.
        let se = (pi[m] * (1.0 - pi[m]) / steps as f64).sqrt() * 4.0;
        assert!((freq - pi[m]).abs() <= 5.0 * se + 1e-3, "state {m}: {freq} vs {}", pi[m]);
    }
}

#[test]
fn poisson_counts_have_poisson_moments() {
    let p = ModelParams::special(3, 1.0, vec![0.0; 3], 4.0, 1.5).unwrap();
    let n = 4000;
    let counts: Vec<f64> = (0..n).map(|r| sample_poisson(&p, 9, r).len() as f64).collect();
    let mean = counts.iter().sum::<f64>() / n as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let lambda = p.expected_count();
    assert!((mean - lambda).abs() < 4.0 * (lambda / n as f64).sqrt(), "{mean} vs {lambda}");
    assert!((var / lambda - 1.0).abs() < 0.1);
}

#[test]
fn chains_are_reproducible_and_seed_dependent() {
    let p = ModelParams::special(2, 1.0, vec![0.0, -0.5], 3.0, 1.0).unwrap();
    let mut c = ChainConfig::for_params(&p, 5000, 4);
    c.record_trace = true;
    let (s1, d1) = run_chain(&p, &c).unwrap();
    let (s2, d2) = run_chain(&p, &c).unwrap();
    assert_eq!(s1, s2);
    assert_eq!(d1.trace, d2.trace);
    c.seed = 5;
    let (s3, _) = run_chain(&p, &c).unwrap();
    assert_ne!(s1, s3);
    assert_eq!(d1.retained as usize, s1.len());
    assert_eq!(c.retained(), d1.retained);
}

#[test]
fn chain_config_must_outlast_burn_in() {
    let p = ModelParams::special(2, 1.0, vec![0.0, 0.0], 5.0, 1.0).unwrap();
    let c = ChainConfig::for_params(&p, 10, 1);
    assert!(run_chain(&p, &c).is_err());
}
