//! Power allocation, tariff design and energy-efficiency optimization for
//! consumers with S-shaped (loss-averse) utilities.

pub mod allocation;
pub mod efficiency;
pub mod error;
pub mod numeric;
pub mod oracles;
pub mod population;
pub mod scenario;
pub mod tariff;
pub mod utility;

pub use allocation::{
    allocate_ppa, allocate_upa, gamma1_root, solve_opg, solve_subproblem_a, solve_subproblem_b,
    AllocationPlan, AllocationResult, Allocator, Branch, Regime, SubproblemSolution,
};
pub use efficiency::{
    g_function, individual_ee, individual_ee_with, solve_see, solve_see_constrained,
    sum_efficiency, x_hat, EeResult, IeePoint, IeeVariant,
};
pub use error::{Error, Result};
pub use population::Population;
pub use tariff::{
    best_response, constant_rtp_tariff, design_ibr, find_chi_star, marginal_price_p,
    realized_welfare, verify_reconstruction, welfare, ChiStar, CostModel, DeltaPolicy, DesignInfo,
    IbrTariff, WelfareReport,
};
pub use utility::{
    eval_utility, eval_utility_saturating, marginal_benefit, marginal_benefit_or_limit,
    validate_profile, ConsumerProfile, Violation,
};
