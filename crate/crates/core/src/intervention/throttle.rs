//! Reversible link throttling.

use std::collections::BTreeMap;

use crate::environment::Graph;
use crate::error::Result;

use super::playbook::throttle_factor;

/// Holds pre-throttle weights and the factors currently applied to each
/// link. A link's weight is always its saved weight times the product of its
/// factors, and returns to the saved value exactly when the last factor lapses.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThrottleBook {
    saved: BTreeMap<(usize, usize), f64>,
    factors: BTreeMap<(usize, usize), Vec<(u64, f64)>>,
}

fn key(i: usize, j: usize) -> (usize, usize) {
    if i <= j { (i, j) } else { (j, i) }
}

impl ThrottleBook {
    /// Multiplies every link between two targets by `1 - clamp(s_i) clamp(s_j)`.
    /// Returns the number of links touched.
    pub fn apply(&mut self, id: u64, graph: &mut Graph, targets: &[usize], scores: &[f64]) -> Result<usize> {
        let mut touched = 0;
        for (a, &i) in targets.iter().enumerate() {
            for (b, &j) in targets.iter().enumerate().skip(a + 1) {
                if !graph.has_edge(i, j) {
                    continue;
                }
                let k = key(i, j);
                self.saved.entry(k).or_insert_with(|| graph.weight(i, j));
                let f = throttle_factor(scores.get(a).copied().unwrap_or(0.0), scores.get(b).copied().unwrap_or(0.0));
                self.factors.entry(k).or_default().push((id, f));
                self.refresh(graph, k)?;
                touched += 1;
            }
        }
        Ok(touched)
    }

    /// Removes every factor installed under `id`.
    pub fn release(&mut self, id: u64, graph: &mut Graph) -> Result<()> {
        let keys: Vec<_> = self.factors.keys().copied().collect();
        for k in keys {
            let list = self.factors.get_mut(&k).expect("key present");
            let before = list.len();
            list.retain(|&(owner, _)| owner != id);
            if list.len() != before {
                self.refresh(graph, k)?;
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.saved.is_empty()
    }

    pub fn throttled_links(&self) -> usize {
        self.saved.len()
    }

    fn refresh(&mut self, graph: &mut Graph, k: (usize, usize)) -> Result<()> {
        let base = self.saved[&k];
        let list = self.factors.get(&k).map_or(&[][..], Vec::as_slice);
        if list.is_empty() {
            graph.set_weight(k.0, k.1, base)?;
            self.saved.remove(&k);
            self.factors.remove(&k);
        } else {
            let w = list.iter().fold(base, |w, &(_, f)| w * f);
            graph.set_weight(k.0, k.1, w)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Graph {
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    #[test]
    fn full_scores_mute_link() {
        let mut g = square();
        let mut book = ThrottleBook::default();
        assert_eq!(book.apply(1, &mut g, &[0, 1], &[1.0, 1.0]).unwrap(), 1);
        assert_eq!(g.weight(0, 1), 0.0);
        assert_eq!(g.weight(1, 2), 1.0);
    }

    #[test]
    fn zero_products_leave_weights() {
        let mut g = square();
        let mut book = ThrottleBook::default();
        book.apply(1, &mut g, &[0, 1], &[0.0, 0.9]).unwrap();
        assert_eq!(g.weight(0, 1), 1.0);
    }

    #[test]
    fn overlapping_throttles_restore_exactly() {
        let mut g = square();
        g.set_weight(1, 2, 0.37).unwrap();
        let before: Vec<_> = g.edges().collect();
        let mut book = ThrottleBook::default();
        book.apply(1, &mut g, &[1, 2], &[0.3, 0.7]).unwrap();
        book.apply(2, &mut g, &[2, 1, 3], &[0.9, 1.4, 0.2]).unwrap();
        assert!(g.weight(1, 2) < 0.37 * (1.0 - 0.21));
        book.release(1, &mut g).unwrap();
        assert!(!book.is_empty());
        book.release(2, &mut g).unwrap();
        assert!(book.is_empty());
        let after: Vec<_> = g.edges().collect();
        assert_eq!(before, after);
    }
}
