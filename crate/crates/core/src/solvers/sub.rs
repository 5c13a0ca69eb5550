use std::time::Instant;

use super::{
    check_init, dump, finish, relaxed_objective, revive_power, tangent_cache, tangent_power,
    usable, SolveReport, SubSolverConfig, TraceRecord,
};
use crate::cost::{self, HopWeight, RelaxedCache};
use crate::feasible::{project_cache, project_power};
use crate::radio::PowerAllocation;
use crate::topology::Network;
use crate::{Error, Result};

const MAX_GUARD_HALVINGS: usize = 50;

fn squared_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn polyak(gap: f64, norm2: f64) -> f64 {
    if norm2 == 0.0 {
        0.0
    } else {
        gap / norm2
    }
}

fn blend(a: &[f64], b: &[f64], xi: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + xi * (y - x)).collect()
}

/// Joint projected subgradient method over `(Y, S)`.
///
/// Each block takes the projected step `P(x - w γ d)` with the Polyak ratio
/// `γ = (D^t - D̂^t) / ‖d‖²`, where `D̂^t` is the best value so far minus an
/// offset. The offset follows `delta0 · D^0 / (1 + t)` and is halved after
/// every step that improves the best value by less than half of it. A candidate that silences a loaded link is
/// first given power on the silent nodes, then pulled back toward the
/// current point by halving the blend fraction.
/// The trace records the effective ratios. Returns the best iterate,
/// rounded.
pub fn solve_sub(
    net: &Network,
    config: &SubSolverConfig,
    init: (RelaxedCache, PowerAllocation),
) -> Result<SolveReport> {
    config.check()?;
    let (mut y, mut s) = init;
    check_init(net, &y, &s)?;
    let started = Instant::now();

    let mut value = relaxed_objective(net, &y, &s);
    if !value.is_finite() {
        return Err(Error::NonFinite {
            iteration: 0,
            dump: dump(&y, &s),
        });
    }
    let initial_objective = value;
    let mut best = (value, y.clone(), s.clone());
    let mut best_history = vec![value];
    let mut trace = vec![TraceRecord {
        iteration: 0,
        objective: value,
        best: value,
        xi_y: 0.0,
        xi_s: 0.0,
        elapsed_secs: 0.0,
    }];
    let mut converged = value == 0.0;
    let mut t = 0;
    let mut level = f64::INFINITY;

    while !converged && t < config.max_iters {
        let grad = cost::subgradient_unchecked(net, &y, &s)?;
        let d_y = tangent_cache(net, &y, &grad.d_y.y)?;
        let d_s = tangent_power(net, &s, &grad.d_s);
        let delta = level.min(config.delta0 * initial_objective / (1.0 + t as f64));
        let gap = value - (best.0 - delta);
        // Polyak ratios scale the pre-projection step; the blend fraction
        // stays 1 unless the guard below shortens it
        let step_y = config.w_y * polyak(gap, squared_norm(&d_y));
        let step_s = config.w_s * polyak(gap, squared_norm(&d_s));
        let mut xi_y = if step_y > 0.0 { 1.0 } else { 0.0 };
        let mut xi_s = if step_s > 0.0 { 1.0 } else { 0.0 };

        let y_bar = project_cache(
            net,
            &RelaxedCache {
                y: y.y.iter().zip(&d_y).map(|(a, g)| a - step_y * g).collect(),
                ..y.clone()
            },
        )?;
        let s_bar = project_power(
            net,
            &PowerAllocation {
                s: s.s.iter().zip(&d_s).map(|(a, g)| a - step_s * g).collect(),
            },
        );

        let mut candidate = None;
        for _ in 0..MAX_GUARD_HALVINGS {
            let y_next = RelaxedCache {
                y: blend(&y.y, &y_bar.y, xi_y),
                ..y.clone()
            };
            let mut s_next = PowerAllocation {
                s: blend(&s.s, &s_bar.s, xi_s),
            };
            let mut next_value = relaxed_objective(net, &y_next, &s_next);
            // cache moves can load a link the power step had switched off
            if !usable(net, &y_next, &s_next, next_value) {
                let weights = cost::edge_weights(net, &y_next, HopWeight::Relaxed);
                if revive_power(net, &weights, &mut s_next) {
                    next_value = relaxed_objective(net, &y_next, &s_next);
                }
            }
            if next_value.is_nan() {
                return Err(Error::NonFinite {
                    iteration: t + 1,
                    dump: dump(&y_next, &s_next),
                });
            }
            if usable(net, &y_next, &s_next, next_value) {
                candidate = Some((y_next, s_next, next_value));
                break;
            }
            xi_y *= 0.5;
            xi_s *= 0.5;
        }
        t += 1;
        match candidate {
            Some((y_next, s_next, next_value)) => {
                y = y_next;
                s = s_next;
                value = next_value;
            }
            None => {
                xi_y = 0.0;
                xi_s = 0.0;
            }
        }
        let progressed = value <= best.0 - 0.5 * delta;
        if value < best.0 {
            best = (value, y.clone(), s.clone());
        }
        if progressed {
            level = f64::INFINITY;
        } else {
            level = 0.5 * delta;
        }
        best_history.push(best.0);
        trace.push(TraceRecord {
            iteration: t,
            objective: value,
            best: best.0,
            xi_y: xi_y * step_y,
            xi_s: xi_s * step_s,
            elapsed_secs: started.elapsed().as_secs_f64(),
        });
        if best.0 == 0.0 {
            converged = true;
        } else if t >= config.patience {
            converged = best_history[t - config.patience] - best.0 <= config.epsilon;
        }
    }

    let (_, y_best, s_best) = best;
    finish(
        net,
        "sub",
        t,
        converged,
        trace,
        initial_objective,
        y_best,
        s_best,
        started,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::initial_point;
    use crate::solvers::testing::two_user_relay;
    use crate::topology::fixtures::chain;

    #[test]
    fn best_so_far_is_monotone() {
        let net = two_user_relay();
        let init = initial_point(&net).unwrap();
        let r = solve_sub(&net, &SubSolverConfig::default(), init).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].best <= w[0].best));
        assert!(r.final_relaxed_cost < r.initial_objective);
        assert_eq!(r.rounded_x.count(2), 1);
        // the heavier request's item wins the relay slot
        assert!(r.rounded_x.get(2, 0));
    }

    #[test]
    fn zero_objective_stops_immediately() {
        let mut s = chain(1, 0, &[0]);
        s.nodes[0].cache_capacity = 1;
        s.designated_sources.insert(0, vec![0, 2]);
        let net = Network::new(s).unwrap();
        let init = initial_point(&net).unwrap();
        let r = solve_sub(&net, &SubSolverConfig::default(), init).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.final_exact_cost, 0.0);
        assert!(r.converged);
    }

    #[test]
    fn rejects_bad_config() {
        let net = two_user_relay();
        let init = initial_point(&net).unwrap();
        let cfg = SubSolverConfig {
            delta0: -1.0,
            ..SubSolverConfig::default()
        };
        assert!(matches!(
            solve_sub(&net, &cfg, init),
            Err(Error::InvalidParams(_))
        ));
    }
}
