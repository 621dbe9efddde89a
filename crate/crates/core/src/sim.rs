//! Finite-length sampling of the coupled ensemble and erasure peeling over
//! the joint factor graph.
//!
//! Values are never simulated in the main path. Erasure decoding progress
//! only depends on which bits are known, and the adder channel reduces to a
//! three-way position state: an unerased equal-bits output reveals both
//! users, an unerased unequal-bits output links them (each determines the
//! other), an erased output carries nothing. The per-position marginals are
//! (1-eps)/2, (1-eps)/2 and eps.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ensemble::{validate, CoupledParams};
use crate::error::DeError;

/// One user's Tanner graph, variable sections -L..=L with M variables each,
/// check positions -L..=L+w-1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserGraph {
    l: u32,
    r: u32,
    checks_per_pos: u32,
    // l entries per variable
    var_to_check: Vec<u32>,
    check_offsets: Vec<u32>,
    check_to_var: Vec<u32>,
}

impl UserGraph {
    pub fn n_vars(&self) -> usize {
        self.var_to_check.len() / self.l as usize
    }

    pub fn n_checks(&self) -> usize {
        self.check_offsets.len() - 1
    }

    /// Check ids on the l sockets of variable v, multi-edges repeated.
    pub fn var_checks(&self, v: usize) -> &[u32] {
        let l = self.l as usize;
        &self.var_to_check[v * l..(v + 1) * l]
    }

    /// Variable ids on the sockets of check c, multi-edges repeated.
    pub fn check_vars(&self, c: usize) -> &[u32] {
        &self.check_to_var[self.check_offsets[c] as usize..self.check_offsets[c + 1] as usize]
    }

    pub fn check_degree(&self, c: usize) -> u32 {
        self.check_offsets[c + 1] - self.check_offsets[c]
    }
}

/// Both users' graphs over a shared chain; transmit position n carries bit n
/// of each user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledTannerGraph {
    params: CoupledParams,
    m_per_section: u32,
    users: [UserGraph; 2],
}

impl CoupledTannerGraph {
    pub fn params(&self) -> &CoupledParams {
        &self.params
    }

    pub fn m_per_section(&self) -> u32 {
        self.m_per_section
    }

    /// Transmit positions, (2L+1) * M.
    pub fn n_positions(&self) -> usize {
        self.params.num_sections() * self.m_per_section as usize
    }

    pub fn user(&self, u: usize) -> &UserGraph {
        &self.users[u]
    }

    /// Signed chain position of a check node.
    pub fn check_position(&self, u: usize, c: usize) -> i64 {
        (c / self.users[u].checks_per_pos as usize) as i64 - self.params.half_len as i64
    }
}

fn sample_user_graph(
    l: u32,
    r: u32,
    p: &CoupledParams,
    m: u32,
    rng: &mut ChaCha8Rng,
) -> UserGraph {
    let sections = p.num_sections();
    let w = p.window as usize;
    let sockets_per_sec = (l * m) as usize;
    let per_offset = sockets_per_sec / w;
    let checks_per_pos = l * m / r;
    let n_positions = sections + w - 1;
    let n_vars = sections * m as usize;

    // each section splits its sockets evenly over the w offsets, so interior
    // checks always fill to degree exactly r
    let mut offsets: Vec<u32> = (0..w as u32).flat_map(|k| core::iter::repeat_n(k, per_offset)).collect();

    let mut arrivals: Vec<Vec<u32>> = vec![Vec::new(); n_positions];
    for sec in 0..sections {
        offsets.shuffle(rng);
        for (s, &k) in offsets.iter().enumerate() {
            let var = (sec * m as usize + s / l as usize) as u32;
            arrivals[sec + k as usize].push(var);
        }
    }

    let capacity = (checks_per_pos * r) as usize;
    let mut var_to_check = vec![0u32; n_vars * l as usize];
    let mut var_cursor = vec![0u32; n_vars];
    let mut degree = vec![0u32; n_positions * checks_per_pos as usize];
    let mut sockets: Vec<u32> = (0..capacity as u32).collect();
    for (pos, vars) in arrivals.iter().enumerate() {
        sockets.shuffle(rng);
        for (a, &v) in vars.iter().enumerate() {
            let check = pos as u32 * checks_per_pos + sockets[a] / r;
            var_to_check[(v * l + var_cursor[v as usize]) as usize] = check;
            var_cursor[v as usize] += 1;
            degree[check as usize] += 1;
        }
    }

    let mut check_offsets = vec![0u32; degree.len() + 1];
    for (c, d) in degree.iter().enumerate() {
        check_offsets[c + 1] = check_offsets[c] + d;
    }
    let mut check_to_var = vec![0u32; *check_offsets.last().unwrap() as usize];
    let mut check_cursor = check_offsets.clone();
    for (v, checks) in var_to_check.chunks(l as usize).enumerate() {
        for &c in checks {
            check_to_var[check_cursor[c as usize] as usize] = v as u32;
            check_cursor[c as usize] += 1;
        }
    }

    UserGraph { l, r, checks_per_pos, var_to_check, check_offsets, check_to_var }
}

/// Samples the two user graphs. Per user, every variable socket picks a
/// window offset from an evenly split per-section pool and the sockets
/// arriving at each check position are matched by a random permutation;
/// boundary checks keep whatever reduced degree the arrivals leave them.
/// Deterministic given the seed.
pub fn sample_graph(p: &CoupledParams, m: u32, seed: u64) -> Result<CoupledTannerGraph, DeError> {
    if validate(p).is_err() {
        return Err(DeError::Domain("invalid chain parameters"));
    }
    if m == 0 {
        return Err(DeError::Domain("need at least one variable per section"));
    }
    let deg = p.degrees;
    for (l, r) in [(deg.l1, deg.r1), (deg.l2, deg.r2)] {
        if !(l * m).is_multiple_of(r) {
            return Err(DeError::Domain("check degree must divide the per-section socket count"));
        }
        if !(l * m).is_multiple_of(p.window) {
            return Err(DeError::Domain("window must divide the per-section socket count"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u1 = sample_user_graph(deg.l1, deg.r1, p, m, &mut rng);
    let u2 = sample_user_graph(deg.l2, deg.r2, p, m, &mut rng);
    Ok(CoupledTannerGraph { params: *p, m_per_section: m, users: [u1, u2] })
}

/// What one transmit position tells the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelState {
    /// Output 0 or 2: both bits known.
    Revealed,
    /// Output 1: each user's bit determines the other.
    Linked,
    Erased,
}

/// I.i.d. position states with probabilities (1-eps)/2, (1-eps)/2, eps.
/// Deterministic given the seed.
pub fn sample_channel(n: usize, eps: f64, seed: u64) -> Result<Vec<ChannelState>, DeError> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(DeError::Domain("erasure rate must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.random();
            if u < eps {
                ChannelState::Erased
            } else if u < eps + 0.5 * (1.0 - eps) {
                ChannelState::Linked
            } else {
                ChannelState::Revealed
            }
        })
        .collect())
}

/// Outcome of one peeling run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeResult {
    pub success: bool,
    pub residual_fraction_user1: f64,
    pub residual_fraction_user2: f64,
    /// Peeling depth in breadth-first generations; channel reveals count as
    /// generation 1 and each check resolution adds one.
    pub iterations: u32,
}

struct PeelUser {
    known: Vec<bool>,
    // unknown sockets per check; a check fires at exactly one
    resid: Vec<u32>,
    // xor of unknown variable ids per check, socket-wise, so a double edge
    // cancels itself and correctly never fires the check alone
    acc: Vec<u32>,
    unknown: usize,
}

impl PeelUser {
    fn new(g: &UserGraph) -> Self {
        let n_checks = g.n_checks();
        let mut resid = vec![0u32; n_checks];
        let mut acc = vec![0u32; n_checks];
        for c in 0..n_checks {
            resid[c] = g.check_degree(c);
            for &v in g.check_vars(c) {
                acc[c] ^= v;
            }
        }
        PeelUser { known: vec![false; g.n_vars()], resid, acc, unknown: g.n_vars() }
    }
}

/// Which variables each user resolved, for value-level cross-checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeelTrace {
    pub known_user1: Vec<bool>,
    pub known_user2: Vec<bool>,
}

/// Peels until no check has exactly one unknown socket left and no linked
/// position can cross-resolve. Failure is a result, not an error.
pub fn peel_decode(
    g: &CoupledTannerGraph,
    states: &[ChannelState],
    max_rounds: u32,
) -> DecodeResult {
    peel_decode_traced(g, states, max_rounds).0
}

/// [`peel_decode`] plus the resolved-variable sets it ended with.
pub fn peel_decode_traced(
    g: &CoupledTannerGraph,
    states: &[ChannelState],
    max_rounds: u32,
) -> (DecodeResult, PeelTrace) {
    let n = g.n_positions();
    assert_eq!(states.len(), n, "one channel state per transmit position");

    let mut users = [PeelUser::new(&g.users[0]), PeelUser::new(&g.users[1])];
    // FIFO so generations pop in order and count breadth-first rounds
    let mut queue: VecDeque<(u8, u32, u32)> = VecDeque::new();
    let mut iterations = 0u32;

    if max_rounds >= 1 {
        for (v, s) in states.iter().enumerate() {
            if *s == ChannelState::Revealed {
                queue.push_back((0, v as u32, 1));
                queue.push_back((1, v as u32, 1));
            }
        }
    }

    // degree-1 boundary checks start peeling with no channel help at all
    for (u, graph) in g.users.iter().enumerate() {
        for c in 0..graph.n_checks() {
            if users[u].resid[c] == 1 {
                let v = users[u].acc[c];
                queue.push_back((u as u8, v, 1));
            }
        }
    }

    while let Some((u, v, gen)) = queue.pop_front() {
        let uu = u as usize;
        if users[uu].known[v as usize] {
            continue;
        }
        users[uu].known[v as usize] = true;
        users[uu].unknown -= 1;
        iterations = iterations.max(gen);

        for &c in g.users[uu].var_checks(v as usize) {
            let st = &mut users[uu];
            st.resid[c as usize] -= 1;
            st.acc[c as usize] ^= v;
            if st.resid[c as usize] == 1 && gen < max_rounds {
                let next = st.acc[c as usize];
                queue.push_back((u, next, gen + 1));
            }
        }

        if states[v as usize] == ChannelState::Linked {
            queue.push_back((1 - u, v, gen));
        }
    }

    let r1 = users[0].unknown as f64 / g.users[0].n_vars() as f64;
    let r2 = users[1].unknown as f64 / g.users[1].n_vars() as f64;
    let result = DecodeResult {
        success: users[0].unknown == 0 && users[1].unknown == 0,
        residual_fraction_user1: r1,
        residual_fraction_user2: r2,
        iterations,
    };
    let [u1, u2] = users;
    (result, PeelTrace { known_user1: u1.known, known_user2: u2.known })
}

/// Aggregated decode statistics at one erasure rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub trials: u32,
    pub block_errors: u32,
    pub block_error_rate: f64,
    pub mean_residual_u1: f64,
    pub mean_residual_u2: f64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Fresh graph and channel per trial, seeds derived from (seed, the eps bit
/// pattern, trial index). A row never depends on the grid around it, so
/// split grids merge byte-identically with whole-grid runs.
pub fn sweep_error_rate(
    p: &CoupledParams,
    m: u32,
    eps_grid: &[f64],
    trials: u32,
    seed: u64,
) -> Result<Vec<SweepRow>, DeError> {
    if trials == 0 {
        return Err(DeError::Domain("need at least one trial"));
    }
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid.iter() {
        let mut block_errors = 0u32;
        let mut sum_r1 = 0.0;
        let mut sum_r2 = 0.0;
        for t in 0..trials {
            let mut st = seed ^ eps.to_bits() ^ (t as u64).wrapping_mul(0xA24BAED4963EE407);
            let graph_seed = splitmix64(&mut st);
            let chan_seed = splitmix64(&mut st);
            let g = sample_graph(p, m, graph_seed)?;
            let s = sample_channel(g.n_positions(), eps, chan_seed)?;
            let d = peel_decode(&g, &s, u32::MAX);
            if !d.success {
                block_errors += 1;
            }
            sum_r1 += d.residual_fraction_user1;
            sum_r2 += d.residual_fraction_user2;
        }
        rows.push(SweepRow {
            eps,
            trials,
            block_errors,
            block_error_rate: block_errors as f64 / trials as f64,
            mean_residual_u1: sum_r1 / trials as f64,
            mean_residual_u2: sum_r2 / trials as f64,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::DegreeProfile;

    fn params(l: u32, r: u32, half_len: u32, window: u32) -> CoupledParams {
        CoupledParams::new(DegreeProfile::symmetric(l, r), half_len, window)
    }

    #[test]
    fn window_one_keeps_edges_inside_their_section() {
        let p = params(3, 6, 4, 1);
        let g = sample_graph(&p, 6, 11).unwrap();
        for u in 0..2 {
            let graph = g.user(u);
            assert_eq!(graph.n_checks(), 9 * 3);
            for v in 0..graph.n_vars() {
                let sec = (v / 6) as i64 - 4;
                for &c in graph.var_checks(v) {
                    assert_eq!(g.check_position(u, c as usize), sec);
                }
            }
            // every position is fully filled, so every check has degree r
            for c in 0..graph.n_checks() {
                assert_eq!(graph.check_degree(c), 6);
            }
        }
    }

    #[test]
    fn degree_tallies_and_boundary_fill() {
        let p = params(3, 6, 16, 3);
        let m = 600u32;
        let g = sample_graph(&p, m, 42).unwrap();
        let graph = g.user(0);

        // every variable carries exactly l sockets by construction; spot the
        // per-check tallies instead
        let interior: Vec<usize> = (0..graph.n_checks())
            .filter(|&c| {
                let pos = g.check_position(0, c);
                (-14..=16).contains(&pos)
            })
            .collect();
        assert!(!interior.is_empty());
        for c in interior {
            assert_eq!(graph.check_degree(c), 6);
        }

        // position L+1 receives sockets from only 2 of its 3 source sections
        let at_l1: Vec<usize> =
            (0..graph.n_checks()).filter(|&c| g.check_position(0, c) == 17).collect();
        let total: u32 = at_l1.iter().map(|&c| graph.check_degree(c)).sum();
        assert_eq!(total, 2 * (3 * m) / 3);
        assert!(at_l1.iter().any(|&c| graph.check_degree(c) < 6));

        // and the outermost position from just 1
        let at_l2: Vec<usize> =
            (0..graph.n_checks()).filter(|&c| g.check_position(0, c) == 18).collect();
        let total: u32 = at_l2.iter().map(|&c| graph.check_degree(c)).sum();
        assert_eq!(total, (3 * m) / 3);
    }

    #[test]
    fn graph_sampling_is_deterministic_in_the_seed() {
        let p = params(3, 6, 4, 3);
        let a = sample_graph(&p, 12, 5).unwrap();
        let b = sample_graph(&p, 12, 5).unwrap();
        assert_eq!(a, b);
        let c = sample_graph(&p, 12, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampling_rejects_socket_count_mismatches() {
        // 3 * 5 sockets per section split by neither r = 6 nor w = 2
        let p = params(3, 6, 4, 2);
        assert!(matches!(sample_graph(&p, 5, 0), Err(DeError::Domain(_))));
        assert!(sample_graph(&p, 4, 0).is_ok());
    }

    #[test]
    fn channel_states_have_the_right_marginals() {
        let n = 200_000;
        let states = sample_channel(n, 1.0 / 3.0, 9).unwrap();
        let count = |want: ChannelState| states.iter().filter(|s| **s == want).count() as f64;
        // 3 sigma for a count with p = 1/3
        let sigma = (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        let expect = n as f64 / 3.0;
        for s in [ChannelState::Revealed, ChannelState::Linked, ChannelState::Erased] {
            assert!((count(s) - expect).abs() < 3.0 * sigma, "{s:?}");
        }

        assert!(sample_channel(1000, 0.0, 1)
            .unwrap()
            .iter()
            .all(|s| *s != ChannelState::Erased));
        assert!(sample_channel(1000, 1.0, 1)
            .unwrap()
            .iter()
            .all(|s| *s == ChannelState::Erased));
    }

    #[test]
    fn all_revealed_positions_decode_in_one_round() {
        let p = params(3, 6, 4, 3);
        let g = sample_graph(&p, 12, 3).unwrap();
        let states = vec![ChannelState::Revealed; g.n_positions()];
        let d = peel_decode(&g, &states, u32::MAX);
        assert!(d.success);
        assert_eq!(d.iterations, 1);
        assert_eq!(d.residual_fraction_user1, 0.0);
        assert_eq!(d.residual_fraction_user2, 0.0);
    }

    #[test]
    fn all_erased_positions_stay_erased_without_coupling() {
        // w = 1 leaves no reduced boundary checks, so nothing can start
        let p = params(3, 6, 4, 1);
        let g = sample_graph(&p, 12, 3).unwrap();
        let states = vec![ChannelState::Erased; g.n_positions()];
        let d = peel_decode(&g, &states, u32::MAX);
        assert!(!d.success);
        assert_eq!(d.residual_fraction_user1, 1.0);
        assert_eq!(d.residual_fraction_user2, 1.0);
    }

    #[test]
    fn all_erased_positions_fail_even_with_boundary_seeds() {
        // w = 3 has reduced boundary checks that peel a little, but a fully
        // erased channel still defeats the code body
        let p = params(3, 6, 8, 3);
        let g = sample_graph(&p, 60, 3).unwrap();
        let states = vec![ChannelState::Erased; g.n_positions()];
        let d = peel_decode(&g, &states, u32::MAX);
        assert!(!d.success);
        assert!(d.residual_fraction_user1 > 0.9);
        assert!(d.residual_fraction_user2 > 0.9);
    }

    #[test]
    fn noiseless_channel_decodes_and_needs_linked_rounds() {
        let p = params(3, 6, 8, 3);
        for trial in 0..3u64 {
            let g = sample_graph(&p, 2000, 100 + trial).unwrap();
            let states = sample_channel(g.n_positions(), 0.0, 200 + trial).unwrap();
            let d = peel_decode(&g, &states, u32::MAX);
            assert!(d.success, "trial {trial}");
            // linked positions resolve only after check progress
            assert!(d.iterations >= 2);
        }
    }

    #[test]
    fn decoding_is_deterministic_in_the_seeds() {
        let p = params(3, 6, 8, 3);
        let g = sample_graph(&p, 120, 7).unwrap();
        let s = sample_channel(g.n_positions(), 0.3, 8).unwrap();
        assert_eq!(peel_decode(&g, &s, u32::MAX), peel_decode(&g, &s, u32::MAX));
    }

    #[test]
    fn sweep_rows_do_not_depend_on_the_surrounding_grid() {
        let p = params(3, 6, 4, 3);
        let whole = sweep_error_rate(&p, 60, &[0.1, 0.3], 4, 5).unwrap();
        let split: Vec<SweepRow> = [0.1, 0.3]
            .iter()
            .map(|&e| sweep_error_rate(&p, 60, &[e], 4, 5).unwrap()[0])
            .collect();
        assert_eq!(whole, split);
    }

    #[test]
    fn sweep_brackets_the_waterfall() {
        let p = params(3, 6, 8, 3);
        let rows = sweep_error_rate(&p, 300, &[0.05, 0.48], 10, 77).unwrap();
        assert_eq!(rows[0].block_errors, 0, "far below threshold");
        assert_eq!(rows[1].block_errors, 10, "far above threshold");
        assert!(rows[1].mean_residual_u1 > 0.1);
        assert!(rows[0].eps == 0.05 && rows[0].trials == 10);
    }
}
