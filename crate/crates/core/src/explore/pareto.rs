//! Non-dominated filtering for maximization criteria.

/// `a` dominates `b`: at least as large in every criterion and larger in one.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// Indices (ascending) of the rows of `criteria` that no other row dominates.
///
/// Rows are visited in decreasing order of their criterion sum; a dominating
/// row always has a strictly larger sum, so each row only needs checking
/// against the front accepted so far.
pub fn pareto_front(criteria: &[Vec<f64>]) -> Vec<usize> {
    let sums: Vec<f64> = criteria.iter().map(|c| c.iter().sum()).collect();
    let mut order: Vec<usize> = (0..criteria.len()).collect();
    order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        if !front.iter().any(|&j| dominates(&criteria[j], &criteria[i])) {
            front.push(i);
        }
    }
    front.sort_unstable();
    front
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force(c: &[Vec<f64>]) -> Vec<usize> {
        (0..c.len()).filter(|&i| !(0..c.len()).any(|j| j != i && dominates(&c[j], &c[i]))).collect()
    }

    #[test]
    fn small_examples() {
        let c = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![0.5, 0.5]];
        assert_eq!(pareto_front(&c), vec![0, 1]);
        let same = vec![vec![0.3, 0.3]; 4];
        assert_eq!(pareto_front(&same), vec![0, 1, 2, 3]);
        assert_eq!(pareto_front(&[vec![1.0], vec![3.0], vec![2.0], vec![3.0]]), vec![1, 3]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(rows in prop::collection::vec(prop::collection::vec(0u8..6, 3), 1..20)) {
            // small integer grid forces plenty of ties
            let c: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
            prop_assert_eq!(pareto_front(&c), brute_force(&c));
        }

        #[test]
        fn monotone_transform_keeps_front(rows in prop::collection::vec(prop::collection::vec(0.01f64..10.0, 2), 1..30)) {
            let front = pareto_front(&rows);
            let mapped: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0].ln() * 3.0 - 1.0, r[1]]).collect();
            prop_assert_eq!(pareto_front(&mapped), front);
        }

        #[test]
        fn row_order_invariant(rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 2), 1..25)) {
            let front = pareto_front(&rows);
            let rev: Vec<Vec<f64>> = rows.iter().rev().cloned().collect();
            let mut back: Vec<usize> = pareto_front(&rev).iter().map(|&i| rows.len() - 1 - i).collect();
            back.sort_unstable();
            prop_assert_eq!(back, front);
        }
    }
}
