use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::game::{size, small_subsets, submasks, CoalitionGame, Subset};
use super::CoalitionError;

/// Largest lattice accepted by the dense least-squares solve.
pub const ORACLE_MAX_PLAYERS: usize = 12;

/// Order-`n` interaction coefficients φ_K for every |K| ≤ n.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionAttribution {
    n_players: usize,
    order: usize,
    /// Coalitions in `small_subsets` order.
    subsets: Vec<Subset>,
    phi: Vec<f64>,
}

impl InteractionAttribution {
    pub fn from_terms(
        n_players: usize,
        order: usize,
        mut terms: impl FnMut(Subset) -> f64,
    ) -> Result<Self, CoalitionError> {
        check_order(n_players, order)?;
        let subsets = small_subsets(n_players, order);
        let phi: Vec<f64> = subsets.iter().map(|&s| terms(s)).collect();
        if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
            return Err(CoalitionError::NonFinite(subsets[i]));
        }
        Ok(Self {
            n_players,
            order,
            subsets,
            phi,
        })
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficient of coalition `k`; zero above the order.
    pub fn get(&self, k: Subset) -> f64 {
        if size(k) > self.order {
            return 0.0;
        }
        match self.subsets.binary_search_by_key(&(size(k), k), |&s| (size(s), s)) {
            Ok(i) => self.phi[i],
            Err(_) => 0.0,
        }
    }

    pub fn phi_empty(&self) -> f64 {
        self.phi[0]
    }

    pub fn phi_main(&self) -> Vec<f64> {
        (0..self.n_players).map(|i| self.get(1 << i)).collect()
    }

    /// Symmetric N×N matrix of pairwise terms, zero diagonal.
    pub fn phi_pair(&self) -> Vec<Vec<f64>> {
        let n = self.n_players;
        let mut m = vec![vec![0.0; n]; n];
        if self.order >= 2 {
            for i in 0..n {
                for j in i + 1..n {
                    let v = self.get(1 << i | 1 << j);
                    m[i][j] = v;
                    m[j][i] = v;
                }
            }
        }
        m
    }

    pub fn terms(&self) -> impl Iterator<Item = (Subset, f64)> + '_ {
        self.subsets.iter().copied().zip(self.phi.iter().copied())
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.phi
    }

    /// Surrogate value v̂(S) = Σ_{K⊆S} φ_K.
    pub fn predict(&self, s: Subset) -> f64 {
        self.terms().filter(|&(k, _)| k & !s == 0).map(|(_, v)| v).sum()
    }

    /// Surrogate values for every coalition, via a subset-sum transform.
    pub fn predict_all(&self) -> Vec<f64> {
        let mut table = vec![0.0; 1usize << self.n_players];
        for (k, v) in self.terms() {
            table[k as usize] = v;
        }
        for i in 0..self.n_players {
            let bit = 1usize << i;
            for s in 0..table.len() {
                if s & bit != 0 {
                    table[s] += table[s ^ bit];
                }
            }
        }
        table
    }
}

fn check_order(n_players: usize, order: usize) -> Result<(), CoalitionError> {
    if order == 0 || order > n_players.max(1) {
        return Err(CoalitionError::InvalidOrder { order, n_players });
    }
    Ok(())
}

/// In-place Walsh–Hadamard transform: out[u] = Σ_s (−1)^{|u∩s|} in[s].
fn walsh_hadamard(a: &mut [f64]) {
    let mut h = 1;
    while h < a.len() {
        for block in a.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*x, *y);
                *x = u + v;
                *y = u - v;
            }
        }
        h *= 2;
    }
}

/// Order-`n` n-Shapley values: the least-squares projection of `v` onto
/// games of order `n`, computed by truncating the ±1 Fourier expansion.
///
/// For N = 0 the attribution is the single constant v(∅).
pub fn n_shapley(game: &CoalitionGame, order: usize) -> Result<InteractionAttribution, CoalitionError> {
    let n = game.n_players();
    check_order(n, order)?;
    let mut w = game.values().to_vec();
    walsh_hadamard(&mut w);
    let scale = 1.0 / (1u64 << n) as f64;
    // Coefficient of χ_U(S) = Π_{i∈U}(2 s_i − 1).
    let fourier = |u: Subset| w[u as usize] * scale * if size(u).is_multiple_of(2) { 1.0 } else { -1.0 };
    let basis = small_subsets(n, order);
    InteractionAttribution::from_terms(n, order, |k| {
        let kk = size(k);
        let mut acc = 0.0;
        for &u in basis.iter().filter(|&&u| u & k == k) {
            let sign = if (size(u) - kk).is_multiple_of(2) { 1.0 } else { -1.0 };
            acc += sign * fourier(u);
        }
        acc * (1u64 << kk) as f64
    })
}

/// Dense normal-equation solve of the same projection, for N ≤ 12.
pub fn ls_projection_oracle(
    game: &CoalitionGame,
    order: usize,
) -> Result<InteractionAttribution, CoalitionError> {
    let n = game.n_players();
    if n > ORACLE_MAX_PLAYERS {
        return Err(CoalitionError::TooManyPlayers(n));
    }
    check_order(n, order)?;
    let basis = small_subsets(n, order);
    let rows = 1usize << n;
    let x = DMatrix::from_fn(rows, basis.len(), |s, c| {
        if basis[c] & !(s as Subset) == 0 {
            1.0
        } else {
            0.0
        }
    });
    let y = DVector::from_column_slice(game.values());
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * y;
    let beta = xtx
        .cholesky()
        .ok_or(CoalitionError::Singular)?
        .solve(&xty);
    let mut it = beta.iter().copied();
    InteractionAttribution::from_terms(n, order, |_| it.next().unwrap_or(f64::NAN))
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn factorial(k: usize) -> u128 {
    (1..=k as u128).product()
}

/// (d − t − s)! t! / (d − s + 1)!, reduced exactly before conversion.
fn interaction_weight(d: usize, s: usize, t: usize) -> f64 {
    let num = factorial(d - t - s) * factorial(t);
    let den = factorial(d - s + 1);
    let g = gcd(num, den);
    (num / g) as f64 / (den / g) as f64
}

/// Shapley interaction index of coalition `s`:
/// Σ_{T ⊆ N∖S} (d−|T|−|S|)!|T|!/(d−|S|+1)! · Δ_S v(T).
///
/// Singletons give the ordinary Shapley value.
pub fn shapley_interaction_index(game: &CoalitionGame, s: Subset) -> Result<f64, CoalitionError> {
    let d = game.n_players();
    game.discrete_derivative(s, 0)?;
    let ss = size(s);
    let rest = game.grand_coalition() & !s;
    let mut by_size = vec![0.0f64; d - ss + 1];
    for t in submasks(rest) {
        by_size[size(t)] += game.derivative_unchecked(s, t);
    }
    Ok(by_size
        .iter()
        .enumerate()
        .map(|(t, sum)| interaction_weight(d, ss, t) * sum)
        .sum())
}

/// Coefficient of determination of the surrogate over all 2^N coalitions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityReport {
    pub r2: f64,
    pub mean_value: f64,
    pub residuals: Vec<f64>,
}

pub fn fidelity_r2(
    game: &CoalitionGame,
    attribution: &InteractionAttribution,
) -> Result<FidelityReport, CoalitionError> {
    if attribution.n_players() != game.n_players() {
        return Err(CoalitionError::SizeMismatch {
            game: game.n_players(),
            attribution: attribution.n_players(),
        });
    }
    let values = game.values();
    let mean_value = values.iter().sum::<f64>() / values.len() as f64;
    let residuals: Vec<f64> = values
        .iter()
        .zip(attribution.predict_all())
        .map(|(v, p)| v - p)
        .collect();
    let r2 = if values.iter().all(|&v| v == values[0]) {
        1.0
    } else {
        let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
        let ss_tot: f64 = values.iter().map(|v| (v - mean_value).powi(2)).sum();
        1.0 - ss_res / ss_tot
    };
    Ok(FidelityReport {
        r2,
        mean_value,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_game(n: usize, seed: u64) -> CoalitionGame {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let values = (0..1usize << n).map(|_| rng.random_range(-2.0..2.0)).collect();
        CoalitionGame::from_values(n, values).unwrap()
    }

    #[test]
    fn constant_and_additive_games() {
        let c = CoalitionGame::from_fn(4, |_| 2.5).unwrap();
        let a = n_shapley(&c, 2).unwrap();
        assert!((a.phi_empty() - 2.5).abs() < 1e-14);
        assert!(a.terms().skip(1).all(|(_, v)| v.abs() < 1e-14));
        assert_eq!(fidelity_r2(&c, &a).unwrap().r2, 1.0);

        let w = [0.3, -1.2, 4.0];
        let g = CoalitionGame::from_fn(3, |s| {
            1.0 + (0..3).filter(|&i| s >> i & 1 == 1).map(|i| w[i]).sum::<f64>()
        })
        .unwrap();
        let a = n_shapley(&g, 2).unwrap();
        assert!((a.phi_empty() - 1.0).abs() < 1e-13);
        for (i, wi) in w.iter().enumerate() {
            assert!((a.phi_main()[i] - wi).abs() < 1e-13);
        }
        assert!(a.phi_pair().iter().flatten().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn matches_dense_solve() {
        for seed in 0..20 {
            let g = random_game(4, seed);
            for order in 1..=2 {
                let fast = n_shapley(&g, order).unwrap();
                let slow = ls_projection_oracle(&g, order).unwrap();
                for ((_, a), (_, b)) in fast.terms().zip(slow.terms()) {
                    assert!((a - b).abs() < 1e-9, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn full_order_interpolates() {
        let g = random_game(5, 9);
        let a = n_shapley(&g, 5).unwrap();
        let p = a.predict_all();
        for (s, v) in g.values().iter().enumerate() {
            assert!((p[s] - v).abs() < 1e-12);
            assert!((a.predict(s as Subset) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn interaction_index_singletons_are_shapley_values() {
        let g = random_game(5, 3);
        let total: f64 = (0..5)
            .map(|i| shapley_interaction_index(&g, 1 << i).unwrap())
            .sum();
        assert!((total - (g.value(31) - g.value(0))).abs() < 1e-12);
        // A unanimity game on {0,1} has pair index 1.
        let u = CoalitionGame::from_fn(4, |s| (s & 0b11 == 0b11) as u8 as f64).unwrap();
        assert!((shapley_interaction_index(&u, 0b11).unwrap() - 1.0).abs() < 1e-15);
        assert!((shapley_interaction_index(&u, 0b01).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn weights_are_exact_for_twenty_players() {
        let w = interaction_weight(20, 0, 0);
        assert!((w - 1.0 / 21.0).abs() < 1e-17);
        assert!(interaction_weight(20, 2, 18) > 0.0);
    }

    #[test]
    fn rejects_bad_orders() {
        let g = random_game(3, 1);
        assert!(n_shapley(&g, 0).is_err());
        assert!(n_shapley(&g, 4).is_err());
        assert!(ls_projection_oracle(&random_game(13, 1), 1).is_err());
        let other = n_shapley(&random_game(2, 1), 1).unwrap();
        assert!(fidelity_r2(&g, &other).is_err());
    }

    #[test]
    fn empty_game_is_a_constant() {
        let g = CoalitionGame::from_values(0, vec![0.7]).unwrap();
        let a = n_shapley(&g, 1).unwrap();
        assert_eq!(a.phi_empty(), 0.7);
        assert!(a.phi_main().is_empty());
        assert_eq!(fidelity_r2(&g, &a).unwrap().r2, 1.0);
    }
}
