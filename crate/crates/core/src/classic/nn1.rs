//! Euclidean one-nearest-neighbour over whole windows.

use crate::data::State;
use crate::error::{Error, Result};
use crate::segment::Window;

/// Squared Euclidean distance summed over every time step and feature.
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
    pub state: State,
}

/// Nearest training window; ties keep the earliest index.
pub fn nn1_classify(train: &[Window], query: &Window) -> Result<Neighbor> {
    let first = train
        .first()
        .ok_or_else(|| Error::InvalidArgument("1-NN needs a non-empty training set".into()))?;
    let mut best = Neighbor {
        index: 0,
        distance: f64::INFINITY,
        state: first.state,
    };
    for (index, candidate) in train.iter().enumerate() {
        if candidate.values.len() != query.values.len() {
            return Err(Error::ShapeMismatch(format!(
                "training window {index} has {} values, query has {}",
                candidate.values.len(),
                query.values.len()
            )));
        }
        let distance = squared_distance(&candidate.values, &query.values);
        if distance < best.distance {
            best = Neighbor {
                index,
                distance,
                state: candidate.state,
            };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(values: Vec<f64>, state: State) -> Window {
        Window {
            values,
            state,
            participant_id: 1,
            start_frame: 0,
        }
    }

    #[test]
    fn identical_query() {
        let train = vec![
            window(vec![1.0, 2.0], State::Focused),
            window(vec![5.0, 5.0], State::Distracted),
        ];
        let n = nn1_classify(&train, &train[1]).unwrap();
        assert_eq!((n.index, n.distance, n.state), (1, 0.0, State::Distracted));
    }

    #[test]
    fn closest_and_ties() {
        let q = window(vec![0.0, 0.0], State::Focused);
        // Squared distances 3 and 5.
        let train = vec![
            window(vec![1.0, 2.0f64.sqrt()], State::Distracted),
            window(vec![1.0, 2.0], State::Focused),
        ];
        assert_eq!(nn1_classify(&train, &q).unwrap().state, State::Distracted);
        let tied = vec![
            window(vec![1.0, 0.0], State::Focused),
            window(vec![0.0, 1.0], State::Distracted),
        ];
        assert_eq!(nn1_classify(&tied, &q).unwrap().index, 0);
    }

    #[test]
    fn errors() {
        let q = window(vec![0.0, 0.0], State::Focused);
        assert!(nn1_classify(&[], &q).is_err());
        assert!(nn1_classify(&[window(vec![0.0], State::Focused)], &q).is_err());
    }
}
