//! Set functions over region coalitions and their interaction expansions.

mod game;
mod nsv;

pub use game::{contains, size, small_subsets, submasks, CoalitionGame, Subset, MAX_PLAYERS};
pub use nsv::{
    fidelity_r2, ls_projection_oracle, n_shapley, shapley_interaction_index, FidelityReport,
    InteractionAttribution, ORACLE_MAX_PLAYERS,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoalitionError {
    #[error("{0} players exceeds the lattice capacity")]
    TooManyPlayers(usize),
    #[error("value table for {n_players} players has {got} entries")]
    TableSize { n_players: usize, got: usize },
    #[error("non-finite value at coalition {0:#b}")]
    NonFinite(Subset),
    #[error("coalition {0:#b} names an unknown player")]
    UnknownPlayer(Subset),
    #[error("coalitions {s:#b} and {t:#b} overlap")]
    Overlap { s: Subset, t: Subset },
    #[error("order {order} invalid for {n_players} players")]
    InvalidOrder { order: usize, n_players: usize },
    #[error("attribution for {attribution} players used with a {game}-player game")]
    SizeMismatch { game: usize, attribution: usize },
    #[error("normal equations are singular")]
    Singular,
    #[error("evaluating coalition {coalition:#b}: {message}")]
    Evaluation { coalition: Subset, message: String },
}
