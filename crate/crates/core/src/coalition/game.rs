use rayon::prelude::*;

use super::CoalitionError;

/// Largest lattice this crate will materialise (2^20 coalitions).
pub const MAX_PLAYERS: usize = 20;

/// Coalitions are bitmasks: player `i` is bit `i`.
pub type Subset = u32;

#[inline]
pub fn size(s: Subset) -> usize {
    s.count_ones() as usize
}

#[inline]
pub fn contains(s: Subset, i: usize) -> bool {
    s >> i & 1 == 1
}

/// All submasks of `s`, in increasing numeric order.
pub fn submasks(s: Subset) -> impl Iterator<Item = Subset> {
    let mut next = Some(0u32);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == s { None } else { Some(((cur | !s).wrapping_add(1)) & s) };
        Some(cur)
    })
}

/// Subsets of `{0..n}` of size at most `order`, sorted by size then value.
pub fn small_subsets(n_players: usize, order: usize) -> Vec<Subset> {
    let mut out = vec![0u32];
    let mut frontier = vec![0u32];
    for _ in 0..order.min(n_players) {
        let mut next = Vec::new();
        for &s in &frontier {
            let top = if s == 0 { 0 } else { 32 - s.leading_zeros() as usize };
            for i in top..n_players {
                next.push(s | 1 << i);
            }
        }
        next.sort_unstable();
        out.extend_from_slice(&next);
        frontier = next;
    }
    out
}

/// A set function over all coalitions of `n_players` players.
#[derive(Clone, Debug, PartialEq)]
pub struct CoalitionGame {
    n_players: usize,
    values: Vec<f64>,
}

impl CoalitionGame {
    /// Wrap a complete value table indexed by coalition bitmask.
    pub fn from_values(n_players: usize, values: Vec<f64>) -> Result<Self, CoalitionError> {
        if n_players > MAX_PLAYERS {
            return Err(CoalitionError::TooManyPlayers(n_players));
        }
        if values.len() != 1usize << n_players {
            return Err(CoalitionError::TableSize {
                n_players,
                got: values.len(),
            });
        }
        if let Some(s) = values.iter().position(|v| !v.is_finite()) {
            return Err(CoalitionError::NonFinite(s as Subset));
        }
        Ok(Self { n_players, values })
    }

    pub fn from_fn(n_players: usize, f: impl Fn(Subset) -> f64) -> Result<Self, CoalitionError> {
        if n_players > MAX_PLAYERS {
            return Err(CoalitionError::TooManyPlayers(n_players));
        }
        let values = (0..1u32 << n_players).map(f).collect();
        Self::from_values(n_players, values)
    }

    /// Evaluate every coalition exactly once, in parallel.
    ///
    /// The first failing coalition (lowest bitmask) is reported.
    pub fn evaluate<E, F>(n_players: usize, eval: F) -> Result<Self, CoalitionError>
    where
        E: std::fmt::Display + Send,
        F: Fn(Subset) -> Result<f64, E> + Sync,
    {
        if n_players > MAX_PLAYERS {
            return Err(CoalitionError::TooManyPlayers(n_players));
        }
        let results: Vec<Result<f64, E>> = (0..1u32 << n_players).into_par_iter().map(&eval).collect();
        let mut values = Vec::with_capacity(results.len());
        for (s, r) in results.into_iter().enumerate() {
            match r {
                Ok(v) => values.push(v),
                Err(e) => {
                    return Err(CoalitionError::Evaluation {
                        coalition: s as Subset,
                        message: e.to_string(),
                    })
                }
            }
        }
        Self::from_values(n_players, values)
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn grand_coalition(&self) -> Subset {
        ((1u64 << self.n_players) - 1) as Subset
    }

    #[inline]
    pub fn value(&self, s: Subset) -> f64 {
        self.values[s as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Apply `f` to every value, e.g. mapping logits to probabilities.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<CoalitionGame, CoalitionError> {
        Self::from_values(self.n_players, self.values.iter().map(|&v| f(v)).collect())
    }

    fn check_subset(&self, s: Subset) -> Result<(), CoalitionError> {
        if s & !self.grand_coalition() != 0 {
            return Err(CoalitionError::UnknownPlayer(s));
        }
        Ok(())
    }

    /// Inclusion-exclusion derivative of `v` along `s`, evaluated at `t`.
    pub fn discrete_derivative(&self, s: Subset, t: Subset) -> Result<f64, CoalitionError> {
        self.check_subset(s)?;
        self.check_subset(t)?;
        if s & t != 0 {
            return Err(CoalitionError::Overlap { s, t });
        }
        Ok(self.derivative_unchecked(s, t))
    }

    pub(crate) fn derivative_unchecked(&self, s: Subset, t: Subset) -> f64 {
        let ss = size(s);
        submasks(s)
            .map(|l| {
                let sign = if (ss - size(l)).is_multiple_of(2) { 1.0 } else { -1.0 };
                sign * self.value(t | l)
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn submask_enumeration() {
        let subs: Vec<_> = submasks(0b1010).collect();
        assert_eq!(subs, vec![0b0000, 0b0010, 0b1000, 0b1010]);
        assert_eq!(submasks(0).collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn small_subsets_counts() {
        let s = small_subsets(5, 2);
        assert_eq!(s.len(), 1 + 5 + 10);
        assert!(s.windows(2).all(|w| size(w[0]) <= size(w[1])));
        assert_eq!(small_subsets(3, 5).len(), 8);
    }

    #[test]
    fn derivative_basics() {
        let g = CoalitionGame::from_fn(3, |s| (s * s) as f64 + 1.0).unwrap();
        assert_eq!(g.discrete_derivative(0, 0b010).unwrap(), g.value(0b010));
        assert_eq!(
            g.discrete_derivative(0b001, 0b100).unwrap(),
            g.value(0b101) - g.value(0b100)
        );
        assert!(matches!(
            g.discrete_derivative(0b011, 0b010),
            Err(CoalitionError::Overlap { .. })
        ));
        assert!(g.discrete_derivative(0b1000, 0).is_err());
    }

    #[test]
    fn pair_derivative_matches_four_terms() {
        let g = CoalitionGame::from_fn(4, |s| ((s as f64) * 1.37).sin() * 3.0).unwrap();
        let (s, t) = (0b0101u32, 0b0010u32);
        let direct = g.value(t | 0b0101) - g.value(t | 0b0001) - g.value(t | 0b0100) + g.value(t);
        assert!((g.discrete_derivative(s, t).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn evaluate_visits_each_once() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let calls = AtomicUsize::new(0);
        let g = CoalitionGame::evaluate(6, |s| {
            calls.fetch_add(1, Ordering::SeqCst);
            Ok::<_, String>(s as f64)
        })
        .unwrap();
        assert_eq!(calls.load(Ordering::SeqCst), 64);
        assert_eq!(g.value(17), 17.0);
        let err = CoalitionGame::evaluate(3, |s| if s == 5 { Err("boom") } else { Ok(0.0) });
        assert!(matches!(err, Err(CoalitionError::Evaluation { coalition: 5, .. })));
        assert!(CoalitionGame::from_values(21, vec![]).is_err());
    }
}
