//! Agent observations.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::graph::Graph;

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub own_allocation: f64,
    /// `(agent, noisy last allocation)` for every node within two hops.
    pub neighborhood: Vec<(usize, f64)>,
    pub global_queue: Option<f64>,
}

impl Observation {
    /// Little-endian encoding used as the event's observation payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 * (2 + 2 * self.neighborhood.len()));
        out.extend_from_slice(&self.own_allocation.to_le_bytes());
        for &(j, v) in &self.neighborhood {
            out.extend_from_slice(&(j as u32).to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(q) = self.global_queue {
            out.extend_from_slice(&q.to_le_bytes());
        }
        out
    }
}

fn noisy(value: f64, sigma: f64, rng: &mut ChaCha8Rng) -> f64 {
    if sigma > 0.0 {
        let n = Normal::new(0.0, sigma).expect("finite sigma");
        (value + n.sample(rng)).max(0.0)
    } else {
        value
    }
}

/// Own allocation exactly, two-hop allocations with Gaussian noise clamped at
/// zero, and a noisy global queue length when `show_queue` is set.
pub fn observe(
    graph: &Graph,
    agent: usize,
    allocations: &[f64],
    queue_length: f64,
    show_queue: bool,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Observation {
    let neighborhood = if agent < graph.len() {
        graph
            .two_hop(agent)
            .into_iter()
            .map(|j| (j, noisy(allocations[j], sigma, rng)))
            .collect()
    } else {
        Vec::new()
    };
    let global_queue = show_queue.then(|| noisy(queue_length, sigma, rng));
    Observation {
        own_allocation: allocations.get(agent).copied().unwrap_or(0.0),
        neighborhood,
        global_queue,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn exact_without_noise() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = observe(&g, 0, &[1.0, 2.0, 3.0, 4.0], 50.0, false, 0.0, &mut rng);
        assert_eq!(o.own_allocation, 1.0);
        assert_eq!(o.neighborhood, vec![(1, 2.0), (2, 3.0)]);
        assert_eq!(o.global_queue, None);
    }

    #[test]
    fn queue_only_when_enabled() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = observe(&g, 0, &[1.0, 2.0], 50.0, true, 5.0, &mut rng);
        assert!(o.global_queue.unwrap() >= 0.0);
        assert!(o.neighborhood[0].1 >= 0.0);
    }

    #[test]
    fn isolated_node_sees_itself() {
        let g = Graph::empty(3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = observe(&g, 2, &[1.0, 2.0, 3.0], 0.0, false, 1.0, &mut rng);
        assert_eq!(o.own_allocation, 3.0);
        assert!(o.neighborhood.is_empty());
    }
}
