use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::representation::LabeledInstance;

/// One preceding-days leave-one-day-out fold: train on every instance-bearing
/// day strictly before `test_day`, test on `test_day`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub test_day: NaiveDate,
    pub train_days: BTreeSet<NaiveDate>,
}

impl Fold {
    pub fn is_train(&self, day: NaiveDate) -> bool {
        self.train_days.contains(&day)
    }
}

/// Folds for every day preceded by at least `min_train_days` instance-bearing
/// days, ordered by test day.
pub fn make_folds(instances: &[LabeledInstance], min_train_days: usize) -> Vec<Fold> {
    let days: BTreeSet<NaiveDate> = instances.iter().map(|i| i.local_day).collect();
    let days: Vec<NaiveDate> = days.into_iter().collect();
    let min_train_days = min_train_days.max(1);
    days.iter()
        .enumerate()
        .skip(min_train_days)
        .map(|(i, &test_day)| Fold {
            test_day,
            train_days: days[..i].iter().copied().collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Instant;
    use crate::representation::FeatureVector;

    fn on(day: u32) -> LabeledInstance {
        LabeledInstance {
            features: FeatureVector(vec![]),
            label: "A".into(),
            anchor: Instant::from_millis(0),
            local_day: NaiveDate::from_ymd_opt(2011, 11, day).unwrap(),
        }
    }

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2011, 11, day).unwrap()
    }

    #[test]
    fn three_days_two_folds() {
        let folds = make_folds(&[on(3), on(1), on(2), on(2)], 1);
        assert_eq!(
            folds,
            vec![
                Fold { test_day: d(2), train_days: [d(1)].into() },
                Fold { test_day: d(3), train_days: [d(1), d(2)].into() },
            ]
        );
    }

    #[test]
    fn single_day_no_folds() {
        assert!(make_folds(&[on(1), on(1)], 1).is_empty());
    }

    #[test]
    fn gaps_in_days_are_skipped() {
        let folds = make_folds(&[on(1), on(5), on(9)], 2);
        assert_eq!(folds.len(), 1);
        assert_eq!(folds[0].test_day, d(9));
        assert_eq!(folds[0].train_days.len(), 2);
    }

    #[test]
    fn thirteen_days_twelve_folds() {
        let inst: Vec<_> = (1..=13).map(on).collect();
        let folds = make_folds(&inst, 1);
        assert_eq!(folds.len(), 12);
        for f in &folds {
            assert!(f.train_days.iter().all(|&t| t < f.test_day));
        }
    }
}
