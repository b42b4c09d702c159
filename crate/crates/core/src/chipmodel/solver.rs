//! Numerical search for chip settings.
//!
//! Phases of MZIs and phase shifters are free; attenuators stay at 0 dB.
//! Each restart runs Nelder–Mead from a seeded random point and is then
//! polished with shrinking simplices.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::topology::{chip_unitary, ChipSettings, ChipTopology, ElementKind};
use crate::error::{Error, Result};
use crate::qstate::{basis_state, overlap_sq, Basis, StateVector, DIM};

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub seed: u64,
    pub restarts: usize,
    /// Required fidelity is `1 - infidelity_tol`.
    pub infidelity_tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            seed: 0x5eed,
            restarts: 24,
            infidelity_tol: 1e-8,
            max_iterations: 4000,
        }
    }
}

/// Settings whose output for single-rail input on rail 0 matches `target`
/// up to global phase.
pub fn solve_settings(topology: &ChipTopology, target: &StateVector) -> Result<ChipSettings> {
    solve_settings_with(topology, target, &SolverOptions::default())
}

pub fn solve_settings_with(
    topology: &ChipTopology,
    target: &StateVector,
    opts: &SolverOptions,
) -> Result<ChipSettings> {
    if target.dim() != DIM {
        return Err(Error::domain(format!(
            "target must have dimension {DIM}, got {}",
            target.dim()
        )));
    }
    if !target.is_normalized(1e-10) {
        return Err(Error::domain("target state must be unit-norm"));
    }
    let input = basis_state(0, DIM)?;
    let objective = |s: &ChipSettings| -> f64 {
        match chip_unitary(topology, s) {
            Ok(u) => 1.0 - overlap_sq(target, &u.apply(&input)).unwrap_or(0.0),
            Err(_) => f64::INFINITY,
        }
    };
    search(topology, opts, objective)
}

/// Settings that route the four states of `basis` onto four distinct rails.
///
/// Returns the settings and the induced index → rail permutation.
pub fn solve_measurement(
    topology: &ChipTopology,
    basis: Basis,
    opts: &SolverOptions,
) -> Result<(ChipSettings, [usize; DIM])> {
    let states: Vec<StateVector> = (0..DIM).map(|i| basis.state(i)).collect::<Result<_>>()?;
    let objective = |s: &ChipSettings| -> f64 {
        let Ok(u) = chip_unitary(topology, s) else {
            return f64::INFINITY;
        };
        let mut rails_hit = [false; DIM];
        let mut loss = 0.0;
        for psi in &states {
            let p = u.apply(psi).powers();
            let (j, best) = argmax(&p);
            loss += 1.0 - best;
            if rails_hit[j] {
                loss += 1.0;
            }
            rails_hit[j] = true;
        }
        loss
    };
    let settings = search(topology, opts, objective)?;
    let u = chip_unitary(topology, &settings)?;
    let mut perm = [0; DIM];
    for (i, psi) in states.iter().enumerate() {
        perm[i] = argmax(&u.apply(psi).powers()).0;
    }
    Ok((settings, perm))
}

fn argmax(p: &[f64]) -> (usize, f64) {
    p.iter().copied().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
    )
}

fn search<F>(topology: &ChipTopology, opts: &SolverOptions, objective: F) -> Result<ChipSettings>
where
    F: Fn(&ChipSettings) -> f64,
{
    let free: Vec<String> = topology
        .elements()
        .iter()
        .filter(|e| !matches!(e.kind, ElementKind::Voa { .. }))
        .map(|e| e.id.clone())
        .collect();
    let base = ChipSettings::neutral(topology);
    let assemble = |x: &[f64]| {
        let mut s = base.clone();
        for (id, v) in free.iter().zip(x) {
            s.set(id, v.rem_euclid(TAU));
        }
        s
    };
    let f = |x: &[f64]| objective(&assemble(x));

    if free.is_empty() {
        let loss = objective(&base);
        return if loss <= opts.infidelity_tol {
            Ok(base)
        } else {
            Err(Error::Solver {
                best_fidelity: 1.0 - loss,
            })
        };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..opts.restarts.max(1) {
        let x0: Vec<f64> = (0..free.len())
            .map(|_| rng.random_range(0.0..TAU))
            .collect();
        let (mut x, mut fx) = nelder_mead(&f, &x0, 0.6, opts.max_iterations);
        for step in [1e-2, 1e-4, 1e-6] {
            let (x2, f2) = nelder_mead(&f, &x, step, opts.max_iterations);
            if f2 <= fx {
                x = x2;
                fx = f2;
            }
        }
        if best.as_ref().is_none_or(|b| fx < b.1) {
            best = Some((x, fx));
        }
        if best
            .as_ref()
            .is_some_and(|b| b.1 <= opts.infidelity_tol * 1e-4)
        {
            break;
        }
    }
    let (x, fx) = best.expect("at least one restart");
    if fx <= opts.infidelity_tol {
        Ok(assemble(&x))
    } else {
        Err(Error::Solver {
            best_fidelity: 1.0 - fx,
        })
    }
}

/// Plain Nelder–Mead minimisation with an axis-aligned initial simplex.
fn nelder_mead<F>(f: &F, x0: &[f64], step: f64, max_iter: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }

    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect()
    };

    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[n].1 - simplex[0].1 <= 1e-18 {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let reflected = lerp(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < simplex[n].1 {
                lerp(&centroid, &reflected, 0.5)
            } else {
                lerp(&centroid, &worst, 0.5)
            };
            let fc = f(&contracted);
            if fc < fr.min(simplex[n].1) {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x = lerp(&best, &entry.0, 0.5);
                    let fx = f(&x);
                    *entry = (x, fx);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}
