use bliss_milp::{ConstraintSense, MilpModel};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random bounded MILP: up to 10 binaries, 15 continuous variables and 20
/// rows, integer coefficients in [-5, 5].
pub fn random_model(seed: u64) -> MilpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = MilpModel::new();
    let nb = rng.gen_range(1..=10);
    let nc = rng.gen_range(0..=15);
    let nr = rng.gen_range(1..=20);
    let mut vars = Vec::new();
    for i in 0..nb {
        vars.push(m.add_binary(format!("b{i}")).unwrap());
    }
    for i in 0..nc {
        let lo = rng.gen_range(-5..=0) as f64;
        let hi = rng.gen_range(0..=5) as f64;
        vars.push(m.add_continuous(format!("c{i}"), lo, hi).unwrap());
    }
    for r in 0..nr {
        let mut terms = Vec::new();
        for &v in &vars {
            if rng.gen_bool(0.4) {
                let c = rng.gen_range(-5..=5) as f64;
                if c != 0.0 {
                    terms.push((v, c));
                }
            }
        }
        let sense = match rng.gen_range(0..6) {
            0 => ConstraintSense::Eq,
            1 | 2 => ConstraintSense::Ge,
            _ => ConstraintSense::Le,
        };
        let rhs = rng.gen_range(-5..=5) as f64;
        m.add_constraint(format!("r{r}"), &terms, sense, rhs).unwrap();
    }
    for &v in &vars {
        let c = rng.gen_range(-5..=5) as f64;
        if c != 0.0 {
            m.add_objective_term(v, c).unwrap();
        }
    }
    m
}
