//! Benchmark programs shipped with the library.

pub const VACCINATION: &str = include_str!("../corpus/vaccination.prob");
pub const NON_ADMISSIBLE: &str = include_str!("../corpus/non_admissible.prob");
pub const NON_ADMISSIBLE_2: &str = include_str!("../corpus/non_admissible_2.prob");
pub const NON_ADMISSIBLE_3: &str = include_str!("../corpus/non_admissible_3.prob");
pub const NON_ADMISSIBLE_4: &str = include_str!("../corpus/non_admissible_4.prob");
pub const NON_ADMISSIBLE_P_INFLUENCED: &str = include_str!("../corpus/non_admissible_pinfluenced.prob");
pub const COIN_FLIPS_50: &str = include_str!("../corpus/coin_flips_50.prob");
pub const BIMODAL: &str = include_str!("../corpus/bimodal.prob");
pub const COMPONENT_HEALTH: &str = include_str!("../corpus/component_health.prob");
pub const UMBRELLA: &str = include_str!("../corpus/umbrella.prob");
pub const GAMBLERS_RUIN: &str = include_str!("../corpus/gamblers_ruin.prob");
pub const HAWK_DOVE: &str = include_str!("../corpus/hawk_dove.prob");
pub const LAS_VEGAS_SEARCH: &str = include_str!("../corpus/las_vegas_search.prob");
pub const RANDOM_WALK_1D: &str = include_str!("../corpus/random_walk_1d.prob");
pub const RANDOM_WALK_2D: &str = include_str!("../corpus/random_walk_2d.prob");
pub const RANDOMIZED_RESPONSE: &str = include_str!("../corpus/randomized_response.prob");
pub const GRAMMAR_TOUR: &str = include_str!("../corpus/grammar_tour.prob");

/// `(id, source)` for every corpus program.
pub const ALL: &[(&str, &str)] = &[
    ("vaccination", VACCINATION),
    ("non_admissible", NON_ADMISSIBLE),
    ("non_admissible_2", NON_ADMISSIBLE_2),
    ("non_admissible_3", NON_ADMISSIBLE_3),
    ("non_admissible_4", NON_ADMISSIBLE_4),
    ("non_admissible_pinfluenced", NON_ADMISSIBLE_P_INFLUENCED),
    ("coin_flips_50", COIN_FLIPS_50),
    ("bimodal", BIMODAL),
    ("component_health", COMPONENT_HEALTH),
    ("umbrella", UMBRELLA),
    ("gamblers_ruin", GAMBLERS_RUIN),
    ("hawk_dove", HAWK_DOVE),
    ("las_vegas_search", LAS_VEGAS_SEARCH),
    ("random_walk_1d", RANDOM_WALK_1D),
    ("random_walk_2d", RANDOM_WALK_2D),
    ("randomized_response", RANDOMIZED_RESPONSE),
    ("grammar_tour", GRAMMAR_TOUR),
];

pub fn get(id: &str) -> Option<&'static str> {
    ALL.iter().find(|(k, _)| *k == id).map(|(_, s)| *s)
}
